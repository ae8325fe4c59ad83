#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <vector>

#include "radau_hp/mesh.hpp"
#include "radau_hp/problem.hpp"

namespace radau_hp {

/**
 * @brief Discrete state, control and transformed costate on an hp mesh.
 *
 * Per interval k (0-based): X[k] is n x (N_k+1) with column 0 the state at tau = -1;
 * U[k] is m x N_k with column i-1 the control at tau_i; Lambda[k] is n x (N_k+1) with
 * column 0 the mesh-point multiplier and columns 1..N_k the costate samples.
 */
struct DiscreteSolution
{
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> U;
  std::vector<Eigen::MatrixXd> Lambda;
  Eigen::VectorXd lambda_terminal;

  static DiscreteSolution zeros(const HpMesh & mesh, int n, int m);

  /// Copy X_{k-1,N} into X_{k0} and the initial state into X_{00}.
  void enforce_continuity(const Eigen::VectorXd & initial_state);
};

/// Per control/state component at each collocation point: -1 lower bound active, +1 upper, 0 free.
struct ActiveSet
{
  std::vector<Eigen::ArrayXXi> control;  ///< m x N_k per interval
  std::vector<Eigen::ArrayXXi> state;    ///< n x N_k per interval

  int size() const;
  bool operator==(const ActiveSet &) const;
};

/**
 * @brief Index map between DiscreteSolution and the flat unknown/residual vectors.
 *
 * Unknowns: all X (mesh-point columns included), then all U, then all Lambda, then the
 * terminal multiplier. Residual rows: T1, T2, T3, T4, T5, T6 blocks in that order, each
 * ordered by interval, then node, then component.
 */
class KktLayout
{
public:
  KktLayout(const HpMesh & mesh, int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }
  Eigen::Index x(int k, int j) const { return x_off_[k] + static_cast<Eigen::Index>(j) * n_; }
  Eigen::Index u(int k, int i) const { return u_off_[k] + static_cast<Eigen::Index>(i - 1) * m_; }
  Eigen::Index lam(int k, int j) const { return l_off_[k] + static_cast<Eigen::Index>(j) * n_; }
  Eigen::Index lam_terminal() const { return l_term_; }
  Eigen::Index variables() const { return n_vars_; }

  Eigen::Index t1(int k, int i) const { return t1_off_[k] + static_cast<Eigen::Index>(i - 1) * n_; }
  Eigen::Index t2(int k) const { return t2_off_ + static_cast<Eigen::Index>(k) * n_; }
  Eigen::Index t3(int k, int i) const { return t3_off_ + (t1_off_[k] - t1_off_[0]) + static_cast<Eigen::Index>(i - 1) * n_; }
  Eigen::Index t4(int k) const { return t4_off_ + static_cast<Eigen::Index>(k) * n_; }
  Eigen::Index t5() const { return t5_off_; }
  Eigen::Index t6(int k, int i) const { return t6_off_ + (u_off_[k] - u_off_[0]) + static_cast<Eigen::Index>(i - 1) * m_; }
  Eigen::Index rows() const { return n_rows_; }

  Eigen::VectorXd flatten(const DiscreteSolution & sol) const;
  DiscreteSolution unflatten(const Eigen::VectorXd & theta) const;

private:
  int n_, m_;
  std::vector<int> degrees_;
  std::vector<Eigen::Index> x_off_, u_off_, l_off_, t1_off_;
  Eigen::Index l_term_{}, n_vars_{};
  Eigen::Index t2_off_{}, t3_off_{}, t4_off_{}, t5_off_{}, t6_off_{}, n_rows_{};
};

/**
 * @brief Residual blocks of the transformed KKT system.
 *
 * T1 collocated dynamics, T2 continuity, T3 costate dynamics, T4 mesh-point multiplier
 * recursion, T5 transversality, T6 projected control stationarity U - P(U - h grad_u H).
 * For state components with bounds, the T3 entry is the natural-map residual
 * X - P(X - T3) and T4 absorbs the corresponding bound multipliers.
 */
struct KktResidual
{
  Eigen::VectorXd t1, t2, t3, t4, t5, t6;
  double composite_norm{0};  ///< weighted norm: omega-norms on T1/T3, h-scaled on T5/T6
  double sup_norm{0};
  double block_sup[6]{};

  Eigen::VectorXd stacked() const;
};

KktResidual assemble_kkt_residual(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & problem, const DiscreteSolution & sol);

/// Active bounds of the projected residuals at sol (ties within 1e-12 (1 + |bound|) count as active).
ActiveSet detect_active_set(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & problem, const DiscreteSolution & sol);

/// Dense Jacobian of the stacked residual with the given active set frozen.
Eigen::MatrixXd assemble_kkt_jacobian(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & problem,
  const DiscreteSolution & sol,
  const ActiveSet & active);

/// Dense Jacobian with the active set detected at sol.
Eigen::MatrixXd assemble_kkt_jacobian(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & problem, const DiscreteSolution & sol);

/// Same operator in compressed sparse form.
Eigen::SparseMatrix<double> assemble_kkt_jacobian_sparse(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & problem,
  const DiscreteSolution & sol,
  const ActiveSet & active);

/// Multipliers of the untransformed discrete problem: column 0 the continuity multiplier, columns
/// 1..N the dynamics multipliers.
struct RawMultipliers
{
  std::vector<Eigen::MatrixXd> lambda;
  Eigen::VectorXd terminal;
};

/// Lambda_{ki} = lambda_{ki} / omega_i for i >= 1; column 0 and the terminal value unchanged.
std::vector<Eigen::MatrixXd> transform_multipliers(const RawMultipliers & raw, const IntervalSchemes & schemes);

/// Inverse of transform_multipliers.
RawMultipliers raw_multipliers(const DiscreteSolution & sol, const IntervalSchemes & schemes);

/// Degree N-1 costate polynomial of interval k through Lambda_{k1..kN}, evaluated at tau.
Eigen::VectorXd costate_polynomial(const RadauScheme & scheme, const Eigen::MatrixXd & lambda_k, double tau);

/// Residuals of the untransformed first-order conditions.
struct RawKktResidual
{
  Eigen::VectorXd nc0;       ///< K n: sum_i D_{i0} lambda_ki + lambda_k0
  Eigen::VectorXd nc1;       ///< K N n: rows for X_k1..X_kN (the last carries lambda_{k+1,0})
  Eigen::VectorXd nc3;       ///< K N m: projected control stationarity
  Eigen::VectorXd terminal;  ///< n: lambda_{K+1,0} - grad C(X_KN)
  double sup_norm{0};
};

RawKktResidual assemble_raw_kkt_residual(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const ControlProblem & problem,
  const DiscreteSolution & sol,
  const RawMultipliers & raw);

/// Largest |Lambda_{k0} - lambda_k(-1)| over intervals.
double mesh_point_identity_error(const IntervalSchemes & schemes, const DiscreteSolution & sol);

enum class ControlEvaluation { Interpolant, MinimumPrinciple };

struct TrajectoryPoint
{
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;
};

/**
 * @brief Evaluate the discrete solution at time t.
 *
 * The state uses the degree-N polynomial through tau_0..tau_N; the costate the degree N-1
 * polynomial through tau_1..tau_N; the control either the degree N-1 interpolant of the
 * collocation values or the pointwise minimizer of the Hamiltonian over the control box.
 * At a mesh point the left interval is used. Throws std::out_of_range outside the horizon.
 */
TrajectoryPoint interpolate_solution(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const DiscreteSolution & sol,
  double t,
  const ControlProblem * problem = nullptr,
  ControlEvaluation mode       = ControlEvaluation::Interpolant);

/// Result of the assumption checks along a trajectory.
struct AssumptionReport
{
  double d1{0};                       ///< sup_t ||grad_x f||_inf
  double d2{0};                       ///< sup_t ||grad_x f^T||_inf
  double h{0};                        ///< largest half-width of the mesh
  bool a2_ok{false};                  ///< 2 h max(d1, d2) < 1
  double min_hessian_eig{0};          ///< min over grid of Hamiltonian Hessian eigenvalues, terminal block included
  double min_hamiltonian_eig{0};      ///< min over grid of lambda_min(Hessian of H in (x, u))
  double terminal_block_min_eig{0};   ///< lambda_min(Hessian of H at t_end + Hessian of C padded)
  double terminal_cost_min_eig{0};    ///< lambda_min(Hessian of C) alone
};

/// Trajectory evaluated at sample times.
using TrajectoryFn = std::function<TrajectoryPoint(double)>;

AssumptionReport assumption_diagnostics(
  const ControlProblem & problem, const TrajectoryFn & trajectory, const HpMesh & mesh, int grid = 10000);

/// Along an analytic reference; a missing costate is taken as zero.
AssumptionReport assumption_diagnostics(
  const ControlProblem & problem, const AnalyticReference & reference, const HpMesh & mesh, int grid = 10000);

/// Along a discrete solution via interpolate_solution.
AssumptionReport assumption_diagnostics(
  const ControlProblem & problem,
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const DiscreteSolution & sol,
  int grid = 10000);

/// Sample the analytic reference at every node of the mesh (X, U, and Lambda when available).
DiscreteSolution sample_reference(
  const HpMesh & mesh, const IntervalSchemes & schemes, const ControlProblem & problem, const AnalyticReference & ref);

}  // namespace radau_hp
