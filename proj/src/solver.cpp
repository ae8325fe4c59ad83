#include "radau_hp/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace radau_hp {

const char * to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::LineSearchStall: return "line-search-stall";
    case SolveStatus::SingularSystem: return "singular-system";
  }
  return "unknown";
}

namespace {

void project_bounds(const ControlProblem & p, DiscreteSolution & s)
{
  for (std::size_t k = 0; k < s.U.size(); ++k) {
    for (Eigen::Index i = 0; i < s.U[k].cols(); ++i) { s.U[k].col(i) = p.control_bounds.project(s.U[k].col(i)); }
    if (!p.has_state_bounds()) { continue; }
    for (Eigen::Index j = 1; j < s.X[k].cols(); ++j) { s.X[k].col(j) = p.state_bounds.project(s.X[k].col(j)); }
  }
  s.enforce_continuity(p.initial_state);
}

Eigen::VectorXd sparse_step(const Eigen::SparseMatrix<double> & J, const Eigen::VectorXd & F)
{
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(J);
  lu.factorize(J);
  if (lu.info() != Eigen::Success) { throw std::runtime_error("singular Newton system: " + lu.lastErrorMessage()); }
  Eigen::VectorXd d = lu.solve(-F);
  if (lu.info() != Eigen::Success || !d.allFinite()) { throw std::runtime_error("singular Newton system"); }
  return d;
}

double max_dynamics_gradient(const ControlProblem & p, const DiscreteSolution & s)
{
  double d = 0.0;
  for (std::size_t k = 0; k < s.U.size(); ++k) {
    for (Eigen::Index i = 0; i < s.U[k].cols(); ++i) {
      const auto A = p.dynamics_jacobian(s.X[k].col(i + 1), s.U[k].col(i)).A;
      d            = std::max({d, A.cwiseAbs().rowwise().sum().maxCoeff(), A.cwiseAbs().colwise().sum().maxCoeff()});
    }
  }
  return d;
}

}  // namespace

DiscreteSolution initial_guess(const HpMesh & mesh, const ControlProblem & p, const SolveOptions & options)
{
  const int n = p.state_dim, m = p.control_dim;
  if (options.init == InitKind::WarmStart) {
    if (!options.warm_start) { throw std::invalid_argument("warm start requested without a solution"); }
    DiscreteSolution s = *options.warm_start;
    s.enforce_continuity(p.initial_state);
    return s;
  }
  DiscreteSolution s = DiscreteSolution::zeros(mesh, n, m);
  const Eigen::VectorXd x0 =
    options.init == InitKind::Constant ? p.initial_state : Eigen::VectorXd(Eigen::VectorXd::Zero(n));
  const Eigen::VectorXd u0 = p.control_bounds.project(Eigen::VectorXd::Zero(m));
  const Eigen::VectorXd l0 = p.terminal_gradient(x0);
  for (int k = 0; k < mesh.intervals(); ++k) {
    s.X[k].colwise()      = x0;
    s.U[k].colwise()      = u0;
    s.Lambda[k].colwise() = l0;
  }
  s.lambda_terminal = l0;
  s.enforce_continuity(p.initial_state);
  return s;
}

Eigen::VectorXd newton_step(const Eigen::MatrixXd & J, const Eigen::VectorXd & F)
{
  if (J.rows() != J.cols() || J.rows() != F.size()) { throw std::invalid_argument("newton_step: dimension mismatch"); }
  if (F.isZero(0.0)) { return Eigen::VectorXd::Zero(F.size()); }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
  if (!(lu.rcond() > 1e-15)) { throw std::runtime_error("singular Newton system"); }
  Eigen::VectorXd d = lu.solve(-F);
  if (!d.allFinite()) { throw std::runtime_error("singular Newton system"); }
  return d;
}

SolveResult solve(const ControlProblem & p, const HpMesh & mesh, const IntervalSchemes & schemes,
                  const SolveOptions & options)
{
  if (!(options.tol > 0.0) || options.max_iter < 1) { throw std::invalid_argument("solve: tol > 0 and max_iter >= 1 required"); }
  validate(p);
  const KktLayout layout(mesh, p.state_dim, p.control_dim);

  SolveResult res;
  DiscreteSolution cur = initial_guess(mesh, p, options);
  project_bounds(p, cur);
  KktResidual r = assemble_kkt_residual(mesh, schemes, p, cur);

  auto done = [&](const KktResidual & rr) { return rr.sup_norm <= options.tol && rr.composite_norm <= options.tol; };

  res.status = SolveStatus::MaxIterations;
  int it     = 0;
  for (; it < options.max_iter && !done(r); ++it) {
    const ActiveSet active = detect_active_set(mesh, schemes, p, cur);
    res.stats.active_set_sizes.push_back(active.size());

    Eigen::VectorXd d;
    try {
      if (options.sparse) {
        d = sparse_step(assemble_kkt_jacobian_sparse(mesh, schemes, p, cur, active), r.stacked());
      } else {
        d = newton_step(assemble_kkt_jacobian(mesh, schemes, p, cur, active), r.stacked());
      }
    } catch (const std::runtime_error & e) {
      res.status  = SolveStatus::SingularSystem;
      res.message = e.what();
      break;
    }

    const Eigen::VectorXd theta = layout.flatten(cur);
    double t                    = 1.0;
    bool accepted               = false;
    for (; t >= options.min_step; t *= options.backtrack) {
      DiscreteSolution trial = layout.unflatten(theta + t * d);
      project_bounds(p, trial);
      KktResidual rt = assemble_kkt_residual(mesh, schemes, p, trial);
      if (rt.sup_norm < (1.0 - 1e-4 * t) * r.sup_norm || done(rt)) {
        cur      = std::move(trial);
        r        = std::move(rt);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.status  = SolveStatus::LineSearchStall;
      res.message = "no decrease of the sup-norm merit down to the minimum step";
      break;
    }
    res.stats.step_lengths.push_back(t);
  }
  if (done(r)) { res.status = SolveStatus::Converged; }

  res.stats.iterations     = it;
  res.stats.sup_norm       = r.sup_norm;
  res.stats.composite_norm = r.composite_norm;
  res.stats.a2_warning     = 2.0 * mesh.max_half_width() * max_dynamics_gradient(p, cur) >= 1.0;
  if (options.second_order) {
    res.stats.second_order    = second_order_check(p, mesh, schemes, cur);
    res.stats.second_order_ok = res.stats.second_order.ok;
  }
  res.solution = std::move(cur);
  return res;
}

SecondOrderReport second_order_check(const ControlProblem & p, const HpMesh & mesh, const IntervalSchemes & schemes,
                                     const DiscreteSolution & s)
{
  const int n = p.state_dim, m = p.control_dim, K = mesh.intervals();
  const KktLayout L(mesh, n, m);
  const Eigen::Index nz = L.lam(0, 0);  // X and U come first in the layout

  auto sym_min_eig = [](const Eigen::MatrixXd & a) {
    if (a.size() == 0) { return std::numeric_limits<double>::infinity(); }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  };

  SecondOrderReport rep;
  rep.block_min_eig = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nz, nz);
  for (int k = 0; k < K; ++k) {
    const auto & sc = *schemes[k];
    const double h  = mesh.half_width(k);
    for (int i = 1; i <= sc.degree; ++i) {
      const auto d    = hamiltonian_derivatives(p, s.X[k].col(i), s.U[k].col(i - 1), s.Lambda[k].col(i));
      const double sw = h * sc.weights(i - 1);
      Eigen::MatrixXd blk(n + m, n + m);
      blk << d.Q, d.S, d.S.transpose(), d.R;
      blk *= sw;
      if (k == K - 1 && i == sc.degree) { blk.topLeftCorner(n, n) += p.terminal_hessian(s.X[k].col(i)); }
      rep.block_min_eig = std::min(rep.block_min_eig, sym_min_eig(blk));
      H.block(L.x(k, i), L.x(k, i), n, n) += blk.topLeftCorner(n, n);
      H.block(L.x(k, i), L.u(k, i), n, m) += blk.topRightCorner(n, m);
      H.block(L.u(k, i), L.x(k, i), m, n) += blk.bottomLeftCorner(m, n);
      H.block(L.u(k, i), L.u(k, i), m, m) += blk.bottomRightCorner(m, m);
    }
  }

  // Linearized equality constraints: dynamics and continuity rows of the KKT Jacobian restricted
  // to (X, U), plus one row per active bound.
  const ActiveSet active = detect_active_set(mesh, schemes, p, s);
  const Eigen::MatrixXd J = assemble_kkt_jacobian(mesh, schemes, p, s, active);
  const Eigen::Index n_dyn = L.t3(0, 1);  // T1 and T2 rows precede T3
  Eigen::MatrixXd C(n_dyn + active.size(), nz);
  C.setZero();
  C.topRows(n_dyn) = J.topLeftCorner(n_dyn, nz);
  Eigen::Index row = n_dyn;
  for (int k = 0; k < K; ++k) {
    for (int i = 1; i <= mesh.degree(k); ++i) {
      for (int c = 0; c < m; ++c) {
        if (active.control[k](c, i - 1) != 0) { C(row++, L.u(k, i) + c) = 1.0; }
      }
      for (int c = 0; c < n; ++c) {
        if (active.state[k](c, i - 1) != 0) { C(row++, L.x(k, i) + c) = 1.0; }
      }
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  if (rank >= nz) {
    rep.reduced_min_eig = std::numeric_limits<double>::infinity();
  } else {
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(nz, nz);
    const Eigen::MatrixXd Z = Q.rightCols(nz - rank);
    const Eigen::MatrixXd R = Z.transpose() * H * Z;
    rep.reduced_min_eig     = sym_min_eig(0.5 * (R + R.transpose()));
  }
  const double scale = std::max(1.0, H.lpNorm<Eigen::Infinity>());
  rep.ok             = rep.reduced_min_eig > 1e-9 * scale;
  return rep;
}

}  // namespace radau_hp
