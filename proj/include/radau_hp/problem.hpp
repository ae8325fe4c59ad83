#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace radau_hp {

/// Componentwise box [lower, upper]; infinite entries mean the side is free.
struct Box
{
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box unbounded(int dim);

  int dim() const { return static_cast<int>(lower.size()); }
  bool has_finite_side(int i) const;
  bool any_finite() const;
  Eigen::VectorXd project(const Eigen::VectorXd & v) const;
};

struct DynamicsJacobian
{
  Eigen::MatrixXd A;  ///< n x n, d f / d x
  Eigen::MatrixXd B;  ///< n x m, d f / d u
};

/// Second-derivative blocks of a scalar function of (x, u).
struct HessianBlocks
{
  Eigen::MatrixXd Q;  ///< n x n, xx
  Eigen::MatrixXd S;  ///< n x m, xu
  Eigen::MatrixXd R;  ///< m x m, uu
};

struct RunningCost
{
  std::function<double(const Eigen::VectorXd &, const Eigen::VectorXd &)> value;
  std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(const Eigen::VectorXd &, const Eigen::VectorXd &)>
    gradient;
  std::function<HessianBlocks(const Eigen::VectorXd &, const Eigen::VectorXd &)> hessian;
};

/**
 * @brief Control problem: minimize C(x(t_end)) + integral of L(x, u) subject to x' = f(x, u),
 * x(t_start) = a, u in a box and (at collocation points) x in a box.
 *
 * All oracles must be pure so that a problem can be shared across concurrent solves.
 */
struct ControlProblem
{
  std::string name;
  int state_dim{1};
  int control_dim{1};
  double t_start{0.0};
  double t_end{1.0};
  Eigen::VectorXd initial_state;

  std::function<Eigen::VectorXd(const Eigen::VectorXd &, const Eigen::VectorXd &)> dynamics;
  std::function<DynamicsJacobian(const Eigen::VectorXd &, const Eigen::VectorXd &)> dynamics_jacobian;
  /// Hessian blocks of lambda^T f at (x, u, lambda).
  std::function<HessianBlocks(const Eigen::VectorXd &, const Eigen::VectorXd &, const Eigen::VectorXd &)>
    dynamics_hessian;

  std::function<double(const Eigen::VectorXd &)> terminal_cost;
  std::function<Eigen::VectorXd(const Eigen::VectorXd &)> terminal_gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd &)> terminal_hessian;

  std::optional<RunningCost> running_cost;

  Box control_bounds;
  Box state_bounds;

  bool has_state_bounds() const { return state_bounds.any_finite(); }
};

/// Throws std::invalid_argument when dimensions or bounds are inconsistent.
void validate(const ControlProblem & problem);

/// Gradients and Hessian blocks of H = lambda^T f + L.
struct HamiltonianDerivatives
{
  Eigen::VectorXd grad_x;
  Eigen::VectorXd grad_u;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd S;
  Eigen::MatrixXd R;
};

HamiltonianDerivatives hamiltonian_derivatives(
  const ControlProblem & problem,
  const Eigen::VectorXd & x,
  const Eigen::VectorXd & u,
  const Eigen::VectorXd & lambda);

/// Clamp u to the control box.
Eigen::VectorXd project_control(const ControlProblem & problem, const Eigen::VectorXd & u);

/// ||u - P(u - g)||_inf for the control box; zero iff -g lies in the normal cone at u.
double normal_cone_residual(const ControlProblem & problem, const Eigen::VectorXd & u, const Eigen::VectorXd & g);

/// Closed-form solution of a builtin problem. The costate is absent when not known.
struct AnalyticReference
{
  std::function<Eigen::VectorXd(double)> state;
  std::function<Eigen::VectorXd(double)> control;
  std::function<Eigen::VectorXd(double)> costate;
  std::vector<double> breakpoints;

  bool has_costate() const { return static_cast<bool>(costate); }
};

/// "example1" or "example2"; throws std::invalid_argument otherwise.
std::pair<ControlProblem, AnalyticReference> builtin_problem(const std::string & name);

/// Worst relative discrepancy between each derivative oracle and central differences.
struct DerivativeCheck
{
  double dynamics_jacobian{0};
  double dynamics_hessian{0};
  double terminal_gradient{0};
  double terminal_hessian{0};
  double running_gradient{0};
  double running_hessian{0};

  double worst() const;
};

DerivativeCheck check_derivatives(
  const ControlProblem & problem,
  const Eigen::VectorXd & x,
  const Eigen::VectorXd & u,
  const Eigen::VectorXd & lambda,
  double step = 1e-5);

}  // namespace radau_hp
