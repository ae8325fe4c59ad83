#include "radau_hp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace radau_hp {

Box Box::unbounded(int dim)
{
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(dim, -inf), Eigen::VectorXd::Constant(dim, inf)};
}

bool Box::has_finite_side(int i) const { return std::isfinite(lower(i)) || std::isfinite(upper(i)); }

bool Box::any_finite() const
{
  for (int i = 0; i < dim(); ++i) {
    if (has_finite_side(i)) { return true; }
  }
  return false;
}

Eigen::VectorXd Box::project(const Eigen::VectorXd & v) const { return v.cwiseMax(lower).cwiseMin(upper); }

void validate(const ControlProblem & p)
{
  if (p.state_dim < 1 || p.control_dim < 1) { throw std::invalid_argument("problem dimensions must be positive"); }
  if (!(p.t_start < p.t_end)) { throw std::invalid_argument("horizon must satisfy t_start < t_end"); }
  if (p.initial_state.size() != p.state_dim) { throw std::invalid_argument("initial state has wrong dimension"); }
  if (!p.dynamics || !p.dynamics_jacobian || !p.dynamics_hessian) {
    throw std::invalid_argument("dynamics oracles are required");
  }
  if (!p.terminal_cost || !p.terminal_gradient || !p.terminal_hessian) {
    throw std::invalid_argument("terminal cost oracles are required");
  }
  auto check_box = [](const Box & b, int dim, const char * what) {
    if (b.dim() != dim || b.upper.size() != dim) { throw std::invalid_argument(std::string(what) + " has wrong dimension"); }
    for (int i = 0; i < dim; ++i) {
      if (b.lower(i) > b.upper(i)) { throw std::invalid_argument(std::string(what) + " has lower > upper"); }
    }
  };
  check_box(p.control_bounds, p.control_dim, "control_bounds");
  check_box(p.state_bounds, p.state_dim, "state_bounds");
}

HamiltonianDerivatives hamiltonian_derivatives(
  const ControlProblem & p, const Eigen::VectorXd & x, const Eigen::VectorXd & u, const Eigen::VectorXd & lambda)
{
  const auto jac = p.dynamics_jacobian(x, u);
  const auto hes = p.dynamics_hessian(x, u, lambda);
  HamiltonianDerivatives d{jac.A.transpose() * lambda, jac.B.transpose() * lambda, hes.Q, hes.S, hes.R};
  if (p.running_cost) {
    const auto [gx, gu] = p.running_cost->gradient(x, u);
    const auto lh       = p.running_cost->hessian(x, u);
    d.grad_x += gx;
    d.grad_u += gu;
    d.Q += lh.Q;
    d.S += lh.S;
    d.R += lh.R;
  }
  return d;
}

Eigen::VectorXd project_control(const ControlProblem & p, const Eigen::VectorXd & u) { return p.control_bounds.project(u); }

double normal_cone_residual(const ControlProblem & p, const Eigen::VectorXd & u, const Eigen::VectorXd & g)
{
  return (u - p.control_bounds.project(u - g)).lpNorm<Eigen::Infinity>();
}

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }
Eigen::MatrixXd scalar_mat(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

std::pair<ControlProblem, AnalyticReference> make_example1()
{
  ControlProblem p;
  p.name        = "example1";
  p.state_dim   = 1;
  p.control_dim = 1;
  p.t_start     = 0.0;
  p.t_end       = 2.0;
  p.initial_state = scalar(1.0);

  p.dynamics = [](const Eigen::VectorXd & x, const Eigen::VectorXd & u) {
    return scalar(2.5 * (-x(0) + x(0) * u(0) - u(0) * u(0)));
  };
  p.dynamics_jacobian = [](const Eigen::VectorXd & x, const Eigen::VectorXd & u) {
    return DynamicsJacobian{scalar_mat(2.5 * (u(0) - 1.0)), scalar_mat(2.5 * (x(0) - 2.0 * u(0)))};
  };
  p.dynamics_hessian = [](const Eigen::VectorXd &, const Eigen::VectorXd &, const Eigen::VectorXd & l) {
    return HessianBlocks{scalar_mat(0.0), scalar_mat(2.5 * l(0)), scalar_mat(-5.0 * l(0))};
  };
  p.terminal_cost     = [](const Eigen::VectorXd & x) { return -x(0); };
  p.terminal_gradient = [](const Eigen::VectorXd &) { return scalar(-1.0); };
  p.terminal_hessian  = [](const Eigen::VectorXd &) { return scalar_mat(0.0); };
  p.control_bounds    = Box::unbounded(1);
  p.state_bounds      = Box::unbounded(1);

  AnalyticReference ref;
  auto a       = [](double t) { return 1.0 + 3.0 * std::exp(2.5 * t); };
  ref.state    = [a](double t) { return scalar(4.0 / a(t)); };
  ref.control  = [a](double t) { return scalar(2.0 / a(t)); };
  const double denom = std::exp(-5.0) + 9.0 * std::exp(5.0) + 6.0;
  ref.costate  = [a, denom](double t) { return scalar(-a(t) * a(t) * std::exp(-2.5 * t) / denom); };
  return {p, ref};
}

std::pair<ControlProblem, AnalyticReference> make_example2()
{
  const double e = std::exp(1.0);

  ControlProblem p;
  p.name          = "example2";
  p.state_dim     = 1;
  p.control_dim   = 1;
  p.t_start       = 0.0;
  p.t_end         = 1.0;
  p.initial_state = scalar((5.0 * e + 3.0) / (4.0 * (1.0 - e)));

  p.dynamics          = [](const Eigen::VectorXd &, const Eigen::VectorXd & u) { return u; };
  p.dynamics_jacobian = [](const Eigen::VectorXd &, const Eigen::VectorXd &) {
    return DynamicsJacobian{scalar_mat(0.0), scalar_mat(1.0)};
  };
  p.dynamics_hessian = [](const Eigen::VectorXd &, const Eigen::VectorXd &, const Eigen::VectorXd &) {
    return HessianBlocks{scalar_mat(0.0), scalar_mat(0.0), scalar_mat(0.0)};
  };
  p.terminal_cost     = [](const Eigen::VectorXd &) { return 0.0; };
  p.terminal_gradient = [](const Eigen::VectorXd &) { return scalar(0.0); };
  p.terminal_hessian  = [](const Eigen::VectorXd &) { return scalar_mat(0.0); };

  RunningCost lc;
  lc.value    = [](const Eigen::VectorXd & x, const Eigen::VectorXd & u) { return 0.5 * (x(0) * x(0) + u(0) * u(0)); };
  lc.gradient = [](const Eigen::VectorXd & x, const Eigen::VectorXd & u) { return std::pair{x, u}; };
  lc.hessian  = [](const Eigen::VectorXd &, const Eigen::VectorXd &) {
    return HessianBlocks{scalar_mat(1.0), scalar_mat(0.0), scalar_mat(1.0)};
  };
  p.running_cost = lc;

  p.control_bounds = Box::unbounded(1);
  p.control_bounds.upper(0) = 1.0;
  p.state_bounds = Box::unbounded(1);
  p.state_bounds.upper(0) = 2.0 * std::sqrt(e) / (1.0 - e);

  AnalyticReference ref;
  ref.breakpoints = {0.25, 0.75};
  ref.state       = [e](double t) {
    if (t <= 0.25) { return scalar(t - 0.25 + (1.0 + e) / (1.0 - e)); }
    if (t <= 0.75) { return scalar(std::exp(t - 0.25) / (1.0 - e) * (1.0 + std::exp(1.5 - 2.0 * t))); }
    return scalar(2.0 * std::sqrt(e) / (1.0 - e));
  };
  ref.control = [e](double t) {
    if (t <= 0.25) { return scalar(1.0); }
    if (t <= 0.75) { return scalar(std::exp(t - 0.25) / (1.0 - e) * (1.0 - std::exp(1.5 - 2.0 * t))); }
    return scalar(0.0);
  };
  return {p, ref};
}

double rel_err(const Eigen::MatrixXd & analytic, const Eigen::MatrixXd & approx)
{
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - approx).cwiseAbs().maxCoeff() / scale;
}

// Central-difference Jacobian of g: R^d -> R^r at z.
template<class G>
Eigen::MatrixXd central_jacobian(G && g, const Eigen::VectorXd & z, double step)
{
  const Eigen::VectorXd g0 = g(z);
  Eigen::MatrixXd jac(g0.size(), z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double hi    = step * std::max(1.0, std::abs(z(i)));
    Eigen::VectorXd zp = z, zm = z;
    zp(i) += hi;
    zm(i) -= hi;
    jac.col(i) = (g(zp) - g(zm)) / (2.0 * hi);
  }
  return jac;
}

Eigen::MatrixXd assemble(const HessianBlocks & h)
{
  const auto n = h.Q.rows(), m = h.R.rows();
  Eigen::MatrixXd out(n + m, n + m);
  out << h.Q, h.S, h.S.transpose(), h.R;
  return out;
}

}  // namespace

std::pair<ControlProblem, AnalyticReference> builtin_problem(const std::string & name)
{
  if (name == "example1") { return make_example1(); }
  if (name == "example2") { return make_example2(); }
  throw std::invalid_argument("unknown builtin problem: " + name);
}

double DerivativeCheck::worst() const
{
  return std::max({dynamics_jacobian, dynamics_hessian, terminal_gradient, terminal_hessian, running_gradient,
                   running_hessian});
}

DerivativeCheck check_derivatives(
  const ControlProblem & p,
  const Eigen::VectorXd & x,
  const Eigen::VectorXd & u,
  const Eigen::VectorXd & lambda,
  double step)
{
  const int n = p.state_dim;
  const int m = p.control_dim;
  Eigen::VectorXd z(n + m);
  z << x, u;
  auto split = [n, m](const Eigen::VectorXd & v) { return std::pair{v.head(n).eval(), v.tail(m).eval()}; };

  DerivativeCheck out;

  const auto jac = p.dynamics_jacobian(x, u);
  Eigen::MatrixXd ab(n, n + m);
  ab << jac.A, jac.B;
  out.dynamics_jacobian = rel_err(ab, central_jacobian([&](const Eigen::VectorXd & v) {
    auto [xv, uv] = split(v);
    return p.dynamics(xv, uv);
  }, z, step));

  out.dynamics_hessian = rel_err(assemble(p.dynamics_hessian(x, u, lambda)), central_jacobian([&](const Eigen::VectorXd & v) {
    auto [xv, uv] = split(v);
    const auto j  = p.dynamics_jacobian(xv, uv);
    Eigen::VectorXd g(n + m);
    g << j.A.transpose() * lambda, j.B.transpose() * lambda;
    return g;
  }, z, step));

  out.terminal_gradient = rel_err(p.terminal_gradient(x), central_jacobian([&](const Eigen::VectorXd & v) {
    return Eigen::VectorXd::Constant(1, p.terminal_cost(v));
  }, x, step).transpose());
  out.terminal_hessian = rel_err(p.terminal_hessian(x), central_jacobian([&](const Eigen::VectorXd & v) {
    return p.terminal_gradient(v);
  }, x, step));

  if (p.running_cost) {
    const auto & lc   = *p.running_cost;
    const auto [gx, gu] = lc.gradient(x, u);
    Eigen::VectorXd g(n + m);
    g << gx, gu;
    out.running_gradient = rel_err(g, central_jacobian([&](const Eigen::VectorXd & v) {
      auto [xv, uv] = split(v);
      return Eigen::VectorXd::Constant(1, lc.value(xv, uv));
    }, z, step).transpose());
    out.running_hessian = rel_err(assemble(lc.hessian(x, u)), central_jacobian([&](const Eigen::VectorXd & v) {
      auto [xv, uv] = split(v);
      const auto [a, b] = lc.gradient(xv, uv);
      Eigen::VectorXd r(n + m);
      r << a, b;
      return r;
    }, z, step));
  }
  return out;
}

}  // namespace radau_hp
