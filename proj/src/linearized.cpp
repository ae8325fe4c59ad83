#include "radau_hp/linearized.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace radau_hp {

namespace {

int state_dim_of(const IntervalBlocks & A)
{
  if (A.empty() || A.front().empty()) { throw std::invalid_argument("linearized solve: empty coefficient blocks"); }
  return static_cast<int>(A.front().front().rows());
}

void check_sizes(const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A,
                 const Eigen::VectorXd & p, const Eigen::VectorXd & q, int n)
{
  const int K = mesh.intervals();
  if (static_cast<int>(schemes.size()) != K || static_cast<int>(A.size()) != K) {
    throw std::invalid_argument("linearized solve: interval count mismatch");
  }
  Eigen::Index colloc = 0;
  for (int k = 0; k < K; ++k) {
    if (static_cast<int>(A[k].size()) != mesh.degree(k) || schemes[k]->degree != mesh.degree(k)) {
      throw std::invalid_argument("linearized solve: degree mismatch");
    }
    colloc += mesh.degree(k);
  }
  if (p.size() != colloc * n || q.size() != static_cast<Eigen::Index>(K) * n) {
    throw std::invalid_argument("linearized solve: right-hand side size mismatch");
  }
}

// Solve the N n system [I + s * (Minv (x) I) diag(A_i or A_i^T)] y = rhs.
Eigen::VectorXd interval_solve(const Eigen::MatrixXd & Minv, const std::vector<Eigen::MatrixXd> & A, bool transpose,
                               double s, const Eigen::VectorXd & rhs)
{
  const int N = static_cast<int>(Minv.rows());
  const int n = static_cast<int>(A.front().rows());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N * n, N * n);
  for (int j = 0; j < N; ++j) {
    const Eigen::MatrixXd Aj = transpose ? Eigen::MatrixXd(A[j].transpose()) : A[j];
    for (int i = 0; i < N; ++i) { M.block(i * n, j * n, n, n) += s * Minv(i, j) * Aj; }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  if (!(lu.rcond() > 1e-14)) { throw std::runtime_error("linearized solve: singular interval system"); }
  return lu.solve(rhs);
}

// Apply (Minv (x) I) to an N n vector.
Eigen::VectorXd kron_apply(const Eigen::MatrixXd & Minv, const Eigen::VectorXd & v, int n)
{
  const Eigen::Index N = Minv.rows();
  const Eigen::MatrixXd V = v.reshaped(n, N);
  return (V * Minv.transpose()).reshaped();
}

}  // namespace

double block_d1(const IntervalBlocks & A)
{
  double d = 0.0;
  for (const auto & row : A) {
    for (const auto & a : row) { d = std::max(d, a.cwiseAbs().rowwise().sum().maxCoeff()); }
  }
  return d;
}

double block_d2(const IntervalBlocks & A)
{
  double d = 0.0;
  for (const auto & row : A) {
    for (const auto & a : row) { d = std::max(d, a.cwiseAbs().colwise().sum().maxCoeff()); }
  }
  return d;
}

double omega_norm(const HpMesh & mesh, const IntervalSchemes & schemes, const Eigen::VectorXd & p, int n)
{
  double acc      = 0.0;
  Eigen::Index at = 0;
  for (int k = 0; k < mesh.intervals(); ++k) {
    for (int i = 0; i < mesh.degree(k); ++i, at += n) { acc += schemes[k]->weights(i) * p.segment(at, n).squaredNorm(); }
  }
  return std::sqrt(acc);
}

LinearizedSolve solve_linearized_state(
  const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A, const Eigen::VectorXd & p,
  const Eigen::VectorXd & q)
{
  const int n = state_dim_of(A);
  check_sizes(mesh, schemes, A, p, q, n);
  LinearizedSolve out;
  out.a2_warning = 2.0 * mesh.max_half_width() * block_d1(A) >= 1.0;

  Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
  Eigen::Index at      = 0;
  for (int k = 0; k < mesh.intervals(); ++k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);
    const Eigen::VectorXd x0 = prev + q.segment(static_cast<Eigen::Index>(k) * n, n);
    // D_{1:N}^{-1} D_0 = -1, so the mesh-point value enters every node unchanged.
    Eigen::VectorXd rhs = kron_apply(sc.diff_sub_inv, p.segment(at, static_cast<Eigen::Index>(N) * n), n);
    for (int i = 0; i < N; ++i) { rhs.segment(i * n, n) += x0; }
    const Eigen::VectorXd xbar = interval_solve(sc.diff_sub_inv, A[k], false, -h, rhs);

    Eigen::MatrixXd X(n, N + 1);
    X.col(0)         = x0;
    X.rightCols(N)   = xbar.reshaped(n, N);
    prev             = X.col(N);
    out.values.push_back(std::move(X));
    at += static_cast<Eigen::Index>(N) * n;
  }
  return out;
}

LinearizedSolve solve_linearized_costate(
  const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A, const Eigen::VectorXd & p,
  const Eigen::VectorXd & q, const Eigen::VectorXd & lambda_terminal)
{
  const int n = state_dim_of(A);
  check_sizes(mesh, schemes, A, p, q, n);
  if (lambda_terminal.size() != n) { throw std::invalid_argument("linearized costate: terminal size mismatch"); }
  const int K = mesh.intervals();
  LinearizedSolve out;
  out.a2_warning = 2.0 * mesh.max_half_width() * block_d2(A) >= 1.0;
  out.values.resize(K);

  std::vector<Eigen::Index> offset(K, 0);
  for (int k = 1; k < K; ++k) { offset[k] = offset[k - 1] + static_cast<Eigen::Index>(mesh.degree(k - 1)) * n; }

  Eigen::VectorXd next = lambda_terminal;
  for (int k = K - 1; k >= 0; --k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);
    Eigen::VectorXd rhs = kron_apply(sc.dddag_inv, p.segment(offset[k], static_cast<Eigen::Index>(N) * n), n);
    for (int i = 0; i < N; ++i) { rhs.segment(i * n, n) += next; }
    const Eigen::VectorXd lbar = interval_solve(sc.dddag_inv, A[k], true, h, rhs);

    Eigen::MatrixXd L(n, N + 1);
    L.rightCols(N) = lbar.reshaped(n, N);
    Eigen::VectorXd l0 = next + q.segment(static_cast<Eigen::Index>(k) * n, n);
    for (int i = 0; i < N; ++i) { l0 += h * sc.weights(i) * A[k][i].transpose() * L.col(i + 1); }
    L.col(0)      = l0;
    next          = l0;
    out.values[k] = std::move(L);
  }
  return out;
}

double linearized_state_residual(
  const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A, const Eigen::VectorXd & p,
  const Eigen::VectorXd & q, const std::vector<Eigen::MatrixXd> & X)
{
  const int n = state_dim_of(A);
  double scale = 1.0 + p.lpNorm<Eigen::Infinity>() + q.lpNorm<Eigen::Infinity>();
  for (const auto & x : X) { scale = std::max(scale, 1.0 + x.lpNorm<Eigen::Infinity>()); }

  double worst    = 0.0;
  Eigen::Index at = 0;
  for (int k = 0; k < mesh.intervals(); ++k) {
    const auto & sc = *schemes[k];
    const double h  = mesh.half_width(k);
    const Eigen::VectorXd prev = k == 0 ? Eigen::VectorXd(Eigen::VectorXd::Zero(n)) : Eigen::VectorXd(X[k - 1].col(X[k - 1].cols() - 1));
    worst = std::max(worst, (X[k].col(0) - prev - q.segment(static_cast<Eigen::Index>(k) * n, n)).lpNorm<Eigen::Infinity>());
    const Eigen::MatrixXd dx = X[k] * sc.diff.transpose();
    for (int i = 1; i <= sc.degree; ++i, at += n) {
      const Eigen::VectorXd r = dx.col(i - 1) - h * A[k][i - 1] * X[k].col(i) - p.segment(at, n);
      worst                   = std::max(worst, r.lpNorm<Eigen::Infinity>());
    }
  }
  return worst / scale;
}

double linearized_costate_residual(
  const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A, const Eigen::VectorXd & p,
  const Eigen::VectorXd & q, const Eigen::VectorXd & lambda_terminal, const std::vector<Eigen::MatrixXd> & Lambda)
{
  const int n = state_dim_of(A);
  const int K = mesh.intervals();
  double scale = 1.0 + p.lpNorm<Eigen::Infinity>() + q.lpNorm<Eigen::Infinity>() + lambda_terminal.lpNorm<Eigen::Infinity>();
  for (const auto & l : Lambda) { scale = std::max(scale, 1.0 + l.lpNorm<Eigen::Infinity>()); }

  double worst    = 0.0;
  Eigen::Index at = 0;
  for (int k = 0; k < K; ++k) {
    const auto & sc = *schemes[k];
    const int N     = sc.degree;
    const double h  = mesh.half_width(k);
    const Eigen::VectorXd next = k + 1 < K ? Eigen::VectorXd(Lambda[k + 1].col(0)) : lambda_terminal;
    const Eigen::MatrixXd dl   = Lambda[k].rightCols(N) * sc.dddag.transpose();
    Eigen::VectorXd agg        = Lambda[k].col(0) - next - q.segment(static_cast<Eigen::Index>(k) * n, n);
    for (int i = 1; i <= N; ++i, at += n) {
      const Eigen::VectorXd atl = A[k][i - 1].transpose() * Lambda[k].col(i);
      Eigen::VectorXd r         = dl.col(i - 1) - p.segment(at, n) + h * atl;
      if (i == N) { r += next / sc.weights(N - 1); }
      worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
      agg -= h * sc.weights(i - 1) * atl;
    }
    worst = std::max(worst, agg.lpNorm<Eigen::Infinity>());
  }
  return worst / scale;
}

double state_bound(const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A,
                   const Eigen::VectorXd & p, const Eigen::VectorXd & q)
{
  const int n    = state_dim_of(A);
  const double h = mesh.max_half_width();
  const double c = 1.0 - 2.0 * h * block_d1(A);
  if (c <= 0.0) { return std::numeric_limits<double>::infinity(); }
  return (std::sqrt(2.0) * omega_norm(mesh, schemes, p, n) + q.norm()) / (std::sqrt(h) * std::pow(c, mesh.intervals()));
}

double costate_bound(const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A,
                     const Eigen::VectorXd & p, const Eigen::VectorXd & q, const Eigen::VectorXd & lambda_terminal)
{
  const int n    = state_dim_of(A);
  const double h = mesh.max_half_width();
  const double c = 1.0 - 2.0 * h * block_d2(A);
  if (c <= 0.0) { return std::numeric_limits<double>::infinity(); }
  double qsum = 0.0;
  for (int k = 0; k < mesh.intervals(); ++k) { qsum += q.segment(static_cast<Eigen::Index>(k) * n, n).norm(); }
  return (lambda_terminal.lpNorm<Eigen::Infinity>() + std::sqrt(2.0 / h) * omega_norm(mesh, schemes, p, n) + qsum)
         / std::pow(c, mesh.intervals());
}

}  // namespace radau_hp
