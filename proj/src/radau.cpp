#include "radau_hp/radau.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "radau_hp/barycentric.hpp"

namespace radau_hp {

namespace {

// P_n^{(a,b)}(x) by the standard three-term recurrence.
double jacobi_value(int n, double a, double b, double x)
{
  if (n == 0) { return 1.0; }
  double p_prev = 1.0;
  double p      = 0.5 * ((a + b + 2.0) * x + (a - b));
  for (int k = 2; k <= n; ++k) {
    const double s  = 2.0 * k + a + b;
    const double c1 = 2.0 * k * (k + a + b) * (s - 2.0);
    const double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
    const double c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
    const double next = (c2 * p - c3 * p_prev) / c1;
    p_prev = p;
    p      = next;
  }
  return p;
}

// Zeros of P_n^{(1,0)} from the symmetric Jacobi matrix of the monic recurrence.
Eigen::VectorXd jacobi10_roots(int n)
{
  if (n == 0) { return {}; }
  const double a = 1.0;
  const double b = 0.0;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    diag(k)        = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s   = 2.0 * k + a + b;
    const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
    const double den = s * s * (s + 1.0) * (s - 1.0);
    sub(k - 1)       = std::sqrt(num / den);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("build_scheme: tridiagonal eigenproblem did not converge");
  }
  Eigen::VectorXd roots = eig.eigenvalues();

  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    for (int it = 0; it < 5; ++it) {
      const auto [p, dp] = jacobi10_eval(n, roots(i));
      const double step  = p / dp;
      roots(i) -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(roots(i)))) { break; }
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

JacobiValue jacobi10_eval(int n, double tau)
{
  if (n < 0) { throw std::invalid_argument("jacobi10_eval: negative degree"); }
  const double value = jacobi_value(n, 1.0, 0.0, tau);
  const double deriv = n == 0 ? 0.0 : 0.5 * (n + 2.0) * jacobi_value(n - 1, 2.0, 1.0, tau);
  return {value, deriv};
}

RadauScheme build_scheme(int N)
{
  if (N < 1) { throw std::invalid_argument("build_scheme: N must be at least 1"); }

  RadauScheme s;
  s.degree = N;

  const Eigen::VectorXd interior = jacobi10_roots(N - 1);
  s.nodes.resize(N + 1);
  s.nodes(0) = -1.0;
  s.nodes.segment(1, N - 1) = interior;
  s.nodes(N) = 1.0;

  s.weights.resize(N);
  for (int i = 0; i < N - 1; ++i) {
    const double t  = interior(i);
    const double dp = jacobi10_eval(N - 1, t).derivative;
    const double q  = (1.0 - t * t) * dp;
    s.weights(i)    = 4.0 * (1.0 + t) / (q * q);
  }
  s.weights(N - 1) = 2.0 / (static_cast<double>(N) * N);

  const Eigen::MatrixXd full = differentiation_matrix(s.nodes);
  s.diff                     = full.bottomRows(N);

  s.dddag.resize(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      // D is indexed with columns 0..N; D_{ji} for collocation indices lives at diff(j, i + 1).
      s.dddag(i, j) = -(s.weights(j) / s.weights(i)) * s.diff(j, i + 1);
    }
  }

  const Eigen::MatrixXd sub = s.diff.rightCols(N);
  s.diff_sub_inv            = sub.partialPivLu().inverse();
  s.dddag_inv               = s.dddag.partialPivLu().inverse();
  return s;
}

std::shared_ptr<const RadauScheme> cached_scheme(int N)
{
  static std::mutex mtx;
  static std::map<int, std::shared_ptr<const RadauScheme>> cache;
  {
    std::lock_guard lock(mtx);
    if (auto it = cache.find(N); it != cache.end()) { return it->second; }
  }
  auto built = std::make_shared<const RadauScheme>(build_scheme(N));
  std::lock_guard lock(mtx);
  return cache.try_emplace(N, std::move(built)).first->second;
}

Eigen::MatrixXd dddag_inverse_explicit(const RadauScheme & scheme)
{
  const int N       = scheme.degree;
  const double wN   = scheme.weights(N - 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
  m.col(N - 1).setConstant(-wN);
  if (N == 1) { return m; }

  const Eigen::VectorXd interior = scheme.nodes.segment(1, N - 1);
  const Eigen::VectorXd bw       = barycentric_weights(interior);
  const Eigen::VectorXd quad_x   = scheme.collocation_nodes();
  const Eigen::VectorXd & quad_w = scheme.weights;

  for (int j = 0; j < N - 1; ++j) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(N - 1);
    unit(j)              = 1.0;
    auto basis           = [&](double t) { return barycentric_interpolate(interior, bw, unit, t); };

    const double at_one = basis(1.0);
    for (int i = 0; i < N - 1; ++i) {
      const double ti   = interior(i);
      const double half = 0.5 * (1.0 - ti);
      double integral   = 0.0;
      for (int l = 0; l < N; ++l) { integral += quad_w(l) * basis(ti + half * (quad_x(l) + 1.0)); }
      m(i, j) = wN * at_one - half * integral;
    }
    m(N - 1, j) = wN * at_one;
  }
  return m;
}

PropertyReport scheme_property_report(const RadauScheme & scheme)
{
  const Eigen::VectorXd inv_sqrt_w = scheme.weights.cwiseSqrt().cwiseInverse();
  auto max_row_norm                = [&](const Eigen::MatrixXd & inv) {
    return (inv * inv_sqrt_w.asDiagonal()).rowwise().norm().maxCoeff();
  };
  PropertyReport r;
  r.degree          = scheme.degree;
  r.p1_norm         = scheme.diff_sub_inv.cwiseAbs().rowwise().sum().maxCoeff();
  r.p2_max_row_norm = max_row_norm(scheme.diff_sub_inv);
  r.p3_norm         = scheme.dddag_inv.cwiseAbs().rowwise().sum().maxCoeff();
  r.p4_max_row_norm = max_row_norm(scheme.dddag_inv);
  return r;
}

}  // namespace radau_hp
