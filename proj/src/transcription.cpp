#include "radau_hp/transcription.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "radau_hp/barycentric.hpp"

namespace radau_hp {

namespace {

constexpr double kTieTol = 1e-12;

// -1 / +1 when the projection of v onto [lo, hi] clamps (ties count as clamped), 0 otherwise.
int clamp_side(double v, double lo, double hi)
{
  if (std::isfinite(hi) && v >= hi - kTieTol * (1.0 + std::abs(hi))) { return 1; }
  if (std::isfinite(lo) && v <= lo + kTieTol * (1.0 + std::abs(lo))) { return -1; }
  return 0;
}

void check_dims(const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & p, const DiscreteSolution & s)
{
  const int K = mesh.intervals();
  if (static_cast<int>(schemes.size()) != K || static_cast<int>(s.X.size()) != K || static_cast<int>(s.U.size()) != K
      || static_cast<int>(s.Lambda.size()) != K) {
    throw std::invalid_argument("KKT assembly: interval count mismatch");
  }
  if (s.lambda_terminal.size() != p.state_dim) { throw std::invalid_argument("KKT assembly: terminal multiplier size"); }
  for (int k = 0; k < K; ++k) {
    const int N = mesh.degree(k);
    if (schemes[k]->degree != N) { throw std::invalid_argument("KKT assembly: scheme degree does not match mesh"); }
    if (s.X[k].rows() != p.state_dim || s.X[k].cols() != N + 1 || s.U[k].rows() != p.control_dim
        || s.U[k].cols() != N || s.Lambda[k].rows() != p.state_dim || s.Lambda[k].cols() != N + 1) {
      throw std::invalid_argument("KKT assembly: solution block dimensions do not match mesh/problem");
    }
  }
}

// Pointwise quantities reused by the residual and the Jacobian.
struct NodeData
{
  Eigen::VectorXd f;
  DynamicsJacobian jac;
  HamiltonianDerivatives ham;
  Eigen::VectorXd t3raw;  // unprojected costate-dynamics residual
};

struct Evaluation
{
  std::vector<std::vector<NodeData>> nodes;  // [k][i-1]
};

Eigen::VectorXd next_mesh_multiplier(const DiscreteSolution & s, int k)
{
  const int K = static_cast<int>(s.X.size());
  return k + 1 < K ? Eigen::VectorXd(s.Lambda[k + 1].col(0)) : s.lambda_terminal;
}

Evaluation evaluate(const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & p, const DiscreteSolution & s)
{
  check_dims(mesh, schemes, p, s);
  Evaluation ev;
  const int K = mesh.intervals();
  ev.nodes.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);
    const Eigen::VectorXd lam_next = next_mesh_multiplier(s, k);
    const Eigen::MatrixXd dlam     = s.Lambda[k].rightCols(N) * sc.dddag.transpose();
    ev.nodes[k].resize(N);
    for (int i = 1; i <= N; ++i) {
      auto & nd = ev.nodes[k][i - 1];
      const Eigen::VectorXd x = s.X[k].col(i), u = s.U[k].col(i - 1), l = s.Lambda[k].col(i);
      nd.f     = p.dynamics(x, u);
      nd.jac   = p.dynamics_jacobian(x, u);
      nd.ham   = hamiltonian_derivatives(p, x, u, l);
      nd.t3raw = dlam.col(i - 1) + h * nd.ham.grad_x;
      if (i == N) { nd.t3raw += lam_next / sc.weights(N - 1); }
    }
  }
  return ev;
}

double omega_norm_sq(const Eigen::VectorXd & block, const HpMesh & mesh, const IntervalSchemes & schemes, int dim)
{
  double acc      = 0.0;
  Eigen::Index at = 0;
  for (int k = 0; k < mesh.intervals(); ++k) {
    for (int i = 0; i < schemes[k]->degree; ++i) {
      acc += schemes[k]->weights(i) * block.segment(at, dim).squaredNorm();
      at += dim;
    }
  }
  return acc;
}

// Walks every Jacobian entry; `add(row, col, value)` may be called repeatedly for one position.
template<class Add>
void jacobian_entries(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & p,
  const DiscreteSolution & s,
  const ActiveSet & active,
  const Evaluation & ev,
  Add && add)
{
  const int n = p.state_dim, m = p.control_dim, K = mesh.intervals();
  const KktLayout L(mesh, n, m);

  auto add_block = [&](Eigen::Index r0, Eigen::Index c0, const Eigen::MatrixXd & blk, double scale) {
    for (Eigen::Index a = 0; a < blk.rows(); ++a) {
      for (Eigen::Index b = 0; b < blk.cols(); ++b) {
        if (blk(a, b) != 0.0) { add(r0 + a, c0 + b, scale * blk(a, b)); }
      }
    }
  };
  auto add_identity = [&](Eigen::Index r0, Eigen::Index c0, int dim, double scale) {
    for (int a = 0; a < dim; ++a) { add(r0 + a, c0 + a, scale); }
  };
  auto lam_next_col = [&](int k) { return k + 1 < K ? L.lam(k + 1, 0) : L.lam_terminal(); };

  // Row c of the unprojected T3 at (k, i), scaled, written to `row`.
  auto add_t3raw_row = [&](Eigen::Index row, int k, int i, int c, double scale) {
    const auto & sc  = *schemes[k];
    const int N      = sc.degree;
    const double h   = mesh.half_width(k);
    const auto & nd  = ev.nodes[k][i - 1];
    for (int j = 1; j <= N; ++j) {
      const double d = sc.dddag(i - 1, j - 1);
      if (d != 0.0) { add(row, L.lam(k, j) + c, scale * d); }
    }
    for (int b = 0; b < n; ++b) {
      if (nd.jac.A(b, c) != 0.0) { add(row, L.lam(k, i) + b, scale * h * nd.jac.A(b, c)); }
      if (nd.ham.Q(c, b) != 0.0) { add(row, L.x(k, i) + b, scale * h * nd.ham.Q(c, b)); }
    }
    for (int b = 0; b < m; ++b) {
      if (nd.ham.S(c, b) != 0.0) { add(row, L.u(k, i) + b, scale * h * nd.ham.S(c, b)); }
    }
    if (i == N) { add(row, lam_next_col(k) + c, scale / sc.weights(N - 1)); }
  };

  for (int k = 0; k < K; ++k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);

    // T2
    add_identity(L.t2(k), L.x(k, 0), n, 1.0);
    if (k > 0) { add_identity(L.t2(k), L.x(k - 1, mesh.degree(k - 1)), n, -1.0); }

    // T4 mesh-point multiplier part
    add_identity(L.t4(k), L.lam(k, 0), n, 1.0);
    add_identity(L.t4(k), lam_next_col(k), n, -1.0);

    for (int i = 1; i <= N; ++i) {
      const auto & nd = ev.nodes[k][i - 1];
      const double wi = sc.weights(i - 1);

      // T1
      for (int j = 0; j <= N; ++j) { add_identity(L.t1(k, i), L.x(k, j), n, sc.diff(i - 1, j)); }
      add_block(L.t1(k, i), L.x(k, i), nd.jac.A, -h);
      add_block(L.t1(k, i), L.u(k, i), nd.jac.B, -h);

      // T3 and the T4 aggregation
      for (int c = 0; c < n; ++c) {
        const bool bounded = p.state_bounds.has_finite_side(c);
        if (bounded && active.state[k](c, i - 1) != 0) {
          add(L.t3(k, i) + c, L.x(k, i) + c, 1.0);
        } else {
          add_t3raw_row(L.t3(k, i) + c, k, i, c, 1.0);
        }
        if (bounded) { add_t3raw_row(L.t4(k) + c, k, i, c, wi); }
      }
      add_block(L.t4(k), L.lam(k, i), nd.jac.A.transpose(), -h * wi);
      add_block(L.t4(k), L.x(k, i), nd.ham.Q, -h * wi);
      add_block(L.t4(k), L.u(k, i), nd.ham.S, -h * wi);

      // T6
      for (int c = 0; c < m; ++c) {
        const Eigen::Index row = L.t6(k, i) + c;
        if (active.control[k](c, i - 1) != 0) {
          add(row, L.u(k, i) + c, 1.0);
          continue;
        }
        for (int b = 0; b < m; ++b) {
          if (nd.ham.R(c, b) != 0.0) { add(row, L.u(k, i) + b, h * nd.ham.R(c, b)); }
        }
        for (int b = 0; b < n; ++b) {
          if (nd.ham.S(b, c) != 0.0) { add(row, L.x(k, i) + b, h * nd.ham.S(b, c)); }
          if (nd.jac.B(b, c) != 0.0) { add(row, L.lam(k, i) + b, h * nd.jac.B(b, c)); }
        }
      }
    }
  }

  // T5
  const int last = K - 1;
  add_block(L.t5(), L.x(last, mesh.degree(last)), p.terminal_hessian(s.X[last].col(mesh.degree(last))), 1.0);
  add_identity(L.t5(), L.lam_terminal(), n, -1.0);
}

}  // namespace

// ---------------------------------------------------------------------------------------------

DiscreteSolution DiscreteSolution::zeros(const HpMesh & mesh, int n, int m)
{
  DiscreteSolution s;
  for (int k = 0; k < mesh.intervals(); ++k) {
    const int N = mesh.degree(k);
    s.X.push_back(Eigen::MatrixXd::Zero(n, N + 1));
    s.U.push_back(Eigen::MatrixXd::Zero(m, N));
    s.Lambda.push_back(Eigen::MatrixXd::Zero(n, N + 1));
  }
  s.lambda_terminal = Eigen::VectorXd::Zero(n);
  return s;
}

void DiscreteSolution::enforce_continuity(const Eigen::VectorXd & initial_state)
{
  for (std::size_t k = 0; k < X.size(); ++k) {
    X[k].col(0) = k == 0 ? initial_state : Eigen::VectorXd(X[k - 1].col(X[k - 1].cols() - 1));
  }
}

int ActiveSet::size() const
{
  int count = 0;
  for (const auto & a : control) { count += static_cast<int>((a != 0).count()); }
  for (const auto & a : state) { count += static_cast<int>((a != 0).count()); }
  return count;
}

bool ActiveSet::operator==(const ActiveSet & o) const
{
  auto same = [](const std::vector<Eigen::ArrayXXi> & a, const std::vector<Eigen::ArrayXXi> & b) {
    if (a.size() != b.size()) { return false; }
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols() || (a[k] != b[k]).any()) { return false; }
    }
    return true;
  };
  return same(control, o.control) && same(state, o.state);
}

KktLayout::KktLayout(const HpMesh & mesh, int n, int m) : n_(n), m_(m), degrees_(mesh.degrees())
{
  const int K = mesh.intervals();
  Eigen::Index at = 0;
  for (int k = 0; k < K; ++k) {
    x_off_.push_back(at);
    at += static_cast<Eigen::Index>(degrees_[k] + 1) * n;
  }
  for (int k = 0; k < K; ++k) {
    u_off_.push_back(at);
    at += static_cast<Eigen::Index>(degrees_[k]) * m;
  }
  for (int k = 0; k < K; ++k) {
    l_off_.push_back(at);
    at += static_cast<Eigen::Index>(degrees_[k] + 1) * n;
  }
  l_term_ = at;
  n_vars_ = at + n;

  Eigen::Index r = 0;
  for (int k = 0; k < K; ++k) {
    t1_off_.push_back(r);
    r += static_cast<Eigen::Index>(degrees_[k]) * n;
  }
  const Eigen::Index colloc_rows = r;
  t2_off_ = r;
  r += static_cast<Eigen::Index>(K) * n;
  t3_off_ = r;
  r += colloc_rows;
  t4_off_ = r;
  r += static_cast<Eigen::Index>(K) * n;
  t5_off_ = r;
  r += n;
  t6_off_ = r;
  r += u_off_.empty() ? 0 : (l_off_[0] - u_off_[0]);
  n_rows_ = r;
}

Eigen::VectorXd KktLayout::flatten(const DiscreteSolution & s) const
{
  Eigen::VectorXd th(n_vars_);
  for (std::size_t k = 0; k < degrees_.size(); ++k) {
    th.segment(x_off_[k], s.X[k].size())      = s.X[k].reshaped();
    th.segment(u_off_[k], s.U[k].size())      = s.U[k].reshaped();
    th.segment(l_off_[k], s.Lambda[k].size()) = s.Lambda[k].reshaped();
  }
  th.segment(l_term_, n_) = s.lambda_terminal;
  return th;
}

DiscreteSolution KktLayout::unflatten(const Eigen::VectorXd & th) const
{
  if (th.size() != n_vars_) { throw std::invalid_argument("KktLayout::unflatten: size mismatch"); }
  DiscreteSolution s;
  for (std::size_t k = 0; k < degrees_.size(); ++k) {
    const int N = degrees_[k];
    s.X.push_back(th.segment(x_off_[k], static_cast<Eigen::Index>(N + 1) * n_).reshaped(n_, N + 1));
    s.U.push_back(th.segment(u_off_[k], static_cast<Eigen::Index>(N) * m_).reshaped(m_, N));
    s.Lambda.push_back(th.segment(l_off_[k], static_cast<Eigen::Index>(N + 1) * n_).reshaped(n_, N + 1));
  }
  s.lambda_terminal = th.segment(l_term_, n_);
  return s;
}

Eigen::VectorXd KktResidual::stacked() const
{
  Eigen::VectorXd out(t1.size() + t2.size() + t3.size() + t4.size() + t5.size() + t6.size());
  out << t1, t2, t3, t4, t5, t6;
  return out;
}

KktResidual assemble_kkt_residual(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & p, const DiscreteSolution & s)
{
  const Evaluation ev = evaluate(mesh, schemes, p, s);
  const int n = p.state_dim, m = p.control_dim, K = mesh.intervals();

  Eigen::Index colloc = 0;
  for (int k = 0; k < K; ++k) { colloc += mesh.degree(k); }

  KktResidual r;
  r.t1.resize(colloc * n);
  r.t2.resize(static_cast<Eigen::Index>(K) * n);
  r.t3.resize(colloc * n);
  r.t4.resize(static_cast<Eigen::Index>(K) * n);
  r.t6.resize(colloc * m);

  Eigen::Index at_n = 0, at_m = 0;
  for (int k = 0; k < K; ++k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);
    const Eigen::MatrixXd dx = s.X[k] * sc.diff.transpose();  // n x N

    const Eigen::VectorXd prev = k == 0 ? p.initial_state : Eigen::VectorXd(s.X[k - 1].col(mesh.degree(k - 1)));
    r.t2.segment(static_cast<Eigen::Index>(k) * n, n) = s.X[k].col(0) - prev;

    Eigen::VectorXd t4 = s.Lambda[k].col(0) - next_mesh_multiplier(s, k);
    for (int i = 1; i <= N; ++i) {
      const auto & nd = ev.nodes[k][i - 1];
      const double wi = sc.weights(i - 1);
      r.t1.segment(at_n, n) = dx.col(i - 1) - h * nd.f;

      for (int c = 0; c < n; ++c) {
        const double raw = nd.t3raw(c);
        if (p.state_bounds.has_finite_side(c)) {
          const double xc = s.X[k](c, i);
          r.t3(at_n + c)  = xc - std::clamp(xc - raw, p.state_bounds.lower(c), p.state_bounds.upper(c));
          t4(c) += wi * raw;
        } else {
          r.t3(at_n + c) = raw;
        }
      }
      t4 -= h * wi * nd.ham.grad_x;

      const Eigen::VectorXd uc = s.U[k].col(i - 1);
      r.t6.segment(at_m, m)    = uc - p.control_bounds.project(uc - h * nd.ham.grad_u);
      at_n += n;
      at_m += m;
    }
    r.t4.segment(static_cast<Eigen::Index>(k) * n, n) = t4;
  }
  const int last = K - 1;
  r.t5           = p.terminal_gradient(s.X[last].col(mesh.degree(last))) - s.lambda_terminal;

  const double hmax = mesh.max_half_width();
  const Eigen::VectorXd * blocks[6] = {&r.t1, &r.t2, &r.t3, &r.t4, &r.t5, &r.t6};
  for (int b = 0; b < 6; ++b) {
    r.block_sup[b] = blocks[b]->size() ? blocks[b]->lpNorm<Eigen::Infinity>() : 0.0;
    r.sup_norm     = std::max(r.sup_norm, r.block_sup[b]);
  }
  r.composite_norm = std::sqrt(omega_norm_sq(r.t1, mesh, schemes, n)) + r.t2.norm()
                     + std::sqrt(omega_norm_sq(r.t3, mesh, schemes, n)) + r.t4.norm() + std::sqrt(hmax) * r.t5.norm()
                     + r.block_sup[5] / std::sqrt(hmax);
  return r;
}

ActiveSet detect_active_set(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & p, const DiscreteSolution & s)
{
  const Evaluation ev = evaluate(mesh, schemes, p, s);
  const int n = p.state_dim, m = p.control_dim;
  ActiveSet a;
  for (int k = 0; k < mesh.intervals(); ++k) {
    const int N    = mesh.degree(k);
    const double h = mesh.half_width(k);
    a.control.push_back(Eigen::ArrayXXi::Zero(m, N));
    a.state.push_back(Eigen::ArrayXXi::Zero(n, N));
    for (int i = 1; i <= N; ++i) {
      const auto & nd = ev.nodes[k][i - 1];
      for (int c = 0; c < m; ++c) {
        const double v         = s.U[k](c, i - 1) - h * nd.ham.grad_u(c);
        a.control[k](c, i - 1) = clamp_side(v, p.control_bounds.lower(c), p.control_bounds.upper(c));
      }
      for (int c = 0; c < n; ++c) {
        if (!p.state_bounds.has_finite_side(c)) { continue; }
        const double v       = s.X[k](c, i) - nd.t3raw(c);
        a.state[k](c, i - 1) = clamp_side(v, p.state_bounds.lower(c), p.state_bounds.upper(c));
      }
    }
  }
  return a;
}

Eigen::MatrixXd assemble_kkt_jacobian(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & p,
  const DiscreteSolution & s,
  const ActiveSet & active)
{
  const Evaluation ev = evaluate(mesh, schemes, p, s);
  const KktLayout L(mesh, p.state_dim, p.control_dim);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(L.rows(), L.variables());
  jacobian_entries(mesh, schemes, p, s, active, ev, [&J](Eigen::Index r, Eigen::Index c, double v) { J(r, c) += v; });
  return J;
}

Eigen::MatrixXd assemble_kkt_jacobian(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & p, const DiscreteSolution & s)
{
  return assemble_kkt_jacobian(mesh, schemes, p, s, detect_active_set(mesh, schemes, p, s));
}

Eigen::SparseMatrix<double> assemble_kkt_jacobian_sparse(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & p,
  const DiscreteSolution & s,
  const ActiveSet & active)
{
  const Evaluation ev = evaluate(mesh, schemes, p, s);
  const KktLayout L(mesh, p.state_dim, p.control_dim);
  std::vector<Eigen::Triplet<double>> trips;
  jacobian_entries(mesh, schemes, p, s, active, ev, [&trips](Eigen::Index r, Eigen::Index c, double v) {
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  });
  Eigen::SparseMatrix<double> J(L.rows(), L.variables());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

std::vector<Eigen::MatrixXd> transform_multipliers(const RawMultipliers & raw, const IntervalSchemes & schemes)
{
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t k = 0; k < raw.lambda.size(); ++k) {
    Eigen::MatrixXd lam = raw.lambda[k];
    const auto & w      = schemes[k]->weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) { lam.col(i + 1) /= w(i); }
    out.push_back(std::move(lam));
  }
  return out;
}

RawMultipliers raw_multipliers(const DiscreteSolution & sol, const IntervalSchemes & schemes)
{
  RawMultipliers raw;
  for (std::size_t k = 0; k < sol.Lambda.size(); ++k) {
    Eigen::MatrixXd lam = sol.Lambda[k];
    const auto & w      = schemes[k]->weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) { lam.col(i + 1) *= w(i); }
    raw.lambda.push_back(std::move(lam));
  }
  raw.terminal = sol.lambda_terminal;
  return raw;
}

Eigen::VectorXd costate_polynomial(const RadauScheme & scheme, const Eigen::MatrixXd & lambda_k, double tau)
{
  const Eigen::VectorXd nodes = scheme.collocation_nodes();
  return barycentric_interpolate(nodes, barycentric_weights(nodes), Eigen::MatrixXd(lambda_k.rightCols(scheme.degree)), tau);
}

RawKktResidual assemble_raw_kkt_residual(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & p,
  const DiscreteSolution & s,
  const RawMultipliers & raw)
{
  const int n = p.state_dim, m = p.control_dim, K = mesh.intervals();
  Eigen::Index colloc = 0;
  for (int k = 0; k < K; ++k) { colloc += mesh.degree(k); }

  RawKktResidual r;
  r.nc0.resize(static_cast<Eigen::Index>(K) * n);
  r.nc1.resize(colloc * n);
  r.nc3.resize(colloc * m);

  Eigen::Index at_n = 0, at_m = 0;
  for (int k = 0; k < K; ++k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);
    const Eigen::MatrixXd & lam = raw.lambda[k];
    // column j of lam_d = sum_i D_ij lambda_ki
    const Eigen::MatrixXd lam_d = lam.rightCols(N) * sc.diff;  // n x (N+1)
    r.nc0.segment(static_cast<Eigen::Index>(k) * n, n) = lam_d.col(0) + lam.col(0);

    const Eigen::VectorXd lam_next = k + 1 < K ? Eigen::VectorXd(raw.lambda[k + 1].col(0)) : raw.terminal;
    for (int j = 1; j <= N; ++j) {
      const double wj = sc.weights(j - 1);
      const Eigen::VectorXd x = s.X[k].col(j), u = s.U[k].col(j - 1);
      const auto jac          = p.dynamics_jacobian(x, u);
      Eigen::VectorXd gx      = jac.A.transpose() * lam.col(j);
      Eigen::VectorXd gu      = jac.B.transpose() * lam.col(j);
      if (p.running_cost) {
        const auto [lx, lu] = p.running_cost->gradient(x, u);
        gx += wj * lx;
        gu += wj * lu;
      }
      Eigen::VectorXd row = lam_d.col(j) - h * gx;
      if (j == N) { row -= lam_next; }
      for (int c = 0; c < n; ++c) {
        if (p.state_bounds.has_finite_side(c)) {
          // stationarity with a bound multiplier: -(grad of Lagrangian) in the normal cone at X
          row(c) = x(c) - std::clamp(x(c) + row(c), p.state_bounds.lower(c), p.state_bounds.upper(c));
        }
      }
      r.nc1.segment(at_n, n) = row;
      r.nc3.segment(at_m, m) = u - p.control_bounds.project(u - h * gu);
      at_n += n;
      at_m += m;
    }
  }
  const int last = K - 1;
  r.terminal     = raw.terminal - p.terminal_gradient(s.X[last].col(mesh.degree(last)));
  r.sup_norm     = std::max({r.nc0.lpNorm<Eigen::Infinity>(), r.nc1.lpNorm<Eigen::Infinity>(),
                             r.nc3.size() ? r.nc3.lpNorm<Eigen::Infinity>() : 0.0, r.terminal.lpNorm<Eigen::Infinity>()});
  return r;
}

double mesh_point_identity_error(const IntervalSchemes & schemes, const DiscreteSolution & sol)
{
  double worst = 0.0;
  for (std::size_t k = 0; k < sol.Lambda.size(); ++k) {
    const Eigen::VectorXd at_left = costate_polynomial(*schemes[k], sol.Lambda[k], -1.0);
    worst = std::max(worst, (at_left - sol.Lambda[k].col(0)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

TrajectoryPoint interpolate_solution(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const DiscreteSolution & sol,
  double t,
  const ControlProblem * problem,
  ControlEvaluation mode)
{
  const int k       = mesh.locate(t);
  const auto & sc   = *schemes[k];
  const double tau  = std::clamp((t - mesh.midpoint(k)) / mesh.half_width(k), -1.0, 1.0);
  // the affine map can miss a node by an ulp or two; snap so stored values come back exactly
  double snap = tau;
  for (Eigen::Index j = 0; j < sc.nodes.size(); ++j) {
    if (std::abs(tau - sc.nodes(j)) <= 8.0 * std::numeric_limits<double>::epsilon()) { snap = sc.nodes(j); }
  }

  const Eigen::VectorXd colloc = sc.collocation_nodes();
  const Eigen::VectorXd cw     = barycentric_weights(colloc);

  TrajectoryPoint out;
  out.x      = barycentric_interpolate(sc.nodes, barycentric_weights(sc.nodes), sol.X[k], snap);
  out.lambda = barycentric_interpolate(colloc, cw, Eigen::MatrixXd(sol.Lambda[k].rightCols(sc.degree)), snap);
  out.u      = barycentric_interpolate(colloc, cw, sol.U[k], snap);

  if (mode == ControlEvaluation::MinimumPrinciple) {
    if (problem == nullptr) { throw std::invalid_argument("minimum-principle control needs the problem"); }
    // projected Newton on the strongly convex control subproblem
    Eigen::VectorXd u = problem->control_bounds.project(out.u);
    for (int it = 0; it < 50; ++it) {
      const auto d         = hamiltonian_derivatives(*problem, out.x, u, out.lambda);
      const Eigen::VectorXd next = problem->control_bounds.project(u - d.R.ldlt().solve(d.grad_u));
      const double change  = (next - u).lpNorm<Eigen::Infinity>();
      u                    = next;
      if (change <= 1e-15 * (1.0 + u.lpNorm<Eigen::Infinity>())) { break; }
    }
    out.u = u;
  }
  return out;
}

AssumptionReport assumption_diagnostics(
  const ControlProblem & p, const TrajectoryFn & traj, const HpMesh & mesh, int grid)
{
  const int n = p.state_dim, m = p.control_dim;
  AssumptionReport r;
  r.h                   = mesh.max_half_width();
  r.min_hamiltonian_eig = std::numeric_limits<double>::infinity();

  auto hessian = [&](const TrajectoryPoint & pt) {
    const auto d = hamiltonian_derivatives(p, pt.x, pt.u, pt.lambda);
    Eigen::MatrixXd hs(n + m, n + m);
    hs << d.Q, d.S, d.S.transpose(), d.R;
    return hs;
  };
  auto min_eig = [](const Eigen::MatrixXd & a) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  };

  for (int g = 0; g < grid; ++g) {
    const double t = p.t_start + (p.t_end - p.t_start) * g / (grid - 1);
    const auto pt  = traj(t);
    const auto A   = p.dynamics_jacobian(pt.x, pt.u).A;
    r.d1           = std::max(r.d1, A.cwiseAbs().rowwise().sum().maxCoeff());
    r.d2           = std::max(r.d2, A.cwiseAbs().colwise().sum().maxCoeff());
    r.min_hamiltonian_eig = std::min(r.min_hamiltonian_eig, min_eig(hessian(pt)));
  }
  const auto end_pt  = traj(p.t_end);
  const Eigen::MatrixXd ch = p.terminal_hessian(end_pt.x);
  Eigen::MatrixXd last     = hessian(end_pt);
  last.topLeftCorner(n, n) += ch;
  r.terminal_block_min_eig = min_eig(last);
  r.terminal_cost_min_eig  = min_eig(ch);
  r.min_hessian_eig        = std::min(r.min_hamiltonian_eig, r.terminal_block_min_eig);
  r.a2_ok                  = 2.0 * r.h * std::max(r.d1, r.d2) < 1.0;
  return r;
}

AssumptionReport assumption_diagnostics(
  const ControlProblem & p, const AnalyticReference & ref, const HpMesh & mesh, int grid)
{
  return assumption_diagnostics(p, [&](double t) {
    return TrajectoryPoint{ref.state(t), ref.control(t),
                           ref.has_costate() ? ref.costate(t) : Eigen::VectorXd(Eigen::VectorXd::Zero(p.state_dim))};
  }, mesh, grid);
}

AssumptionReport assumption_diagnostics(
  const ControlProblem & p, const HpMesh & mesh, const IntervalSchemes & schemes, const DiscreteSolution & sol, int grid)
{
  return assumption_diagnostics(p, [&](double t) { return interpolate_solution(mesh, schemes, sol, t); }, mesh, grid);
}

DiscreteSolution sample_reference(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & p, const AnalyticReference & ref)
{
  DiscreteSolution s = DiscreteSolution::zeros(mesh, p.state_dim, p.control_dim);
  for (int k = 0; k < mesh.intervals(); ++k) {
    const auto & sc = *schemes[k];
    for (int j = 0; j <= sc.degree; ++j) {
      const double t = mesh.time(k, sc.nodes(j));
      s.X[k].col(j)  = ref.state(t);
      if (j > 0) { s.U[k].col(j - 1) = ref.control(t); }
      if (ref.has_costate()) { s.Lambda[k].col(j) = ref.costate(t); }
    }
  }
  s.enforce_continuity(p.initial_state);
  if (ref.has_costate()) { s.lambda_terminal = ref.costate(p.t_end); }
  return s;
}

}  // namespace radau_hp
