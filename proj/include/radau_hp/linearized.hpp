#pragma once

#include <Eigen/Core>

#include <vector>

#include "radau_hp/mesh.hpp"

namespace radau_hp {

/// A[k][i-1] is the n x n matrix A_ki at collocation point i of interval k.
using IntervalBlocks = std::vector<std::vector<Eigen::MatrixXd>>;

/**
 * Linear state recursion
 *   sum_j D_ij X_kj = h A_ki X_ki + p_ki,   X_k0 = X_{k-1,N} + q_k,   X_{0N} = 0,
 * marched forward one interval at a time. p is stacked by interval, node, component; q by
 * interval. Returns X[k] as n x (N_k+1).
 */
struct LinearizedSolve
{
  std::vector<Eigen::MatrixXd> values;
  bool a2_warning{false};  ///< 2 h d > 1 on some interval; the solve still ran
};

LinearizedSolve solve_linearized_state(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const IntervalBlocks & A,
  const Eigen::VectorXd & p,
  const Eigen::VectorXd & q);

/**
 * Linear costate recursion, marched backward:
 *   sum_j Ddag_ij L_kj = p_ki - h A_ki^T L_ki  (- L_{k+1,0} / w_N on row N),
 *   L_k0 = L_{k+1,0} + q_k + h sum_i w_i A_ki^T L_ki.
 * Returns Lambda[k] as n x (N_k+1) with column 0 the mesh-point value.
 */
LinearizedSolve solve_linearized_costate(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const IntervalBlocks & A,
  const Eigen::VectorXd & p,
  const Eigen::VectorXd & q,
  const Eigen::VectorXd & lambda_terminal);

/// Largest defining-equation residual, relative to 1 + the size of the data and solution.
double linearized_state_residual(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const IntervalBlocks & A,
  const Eigen::VectorXd & p,
  const Eigen::VectorXd & q,
  const std::vector<Eigen::MatrixXd> & X);

double linearized_costate_residual(
  const HpMesh & mesh,
  const IntervalSchemes & schemes,
  const IntervalBlocks & A,
  const Eigen::VectorXd & p,
  const Eigen::VectorXd & q,
  const Eigen::VectorXd & lambda_terminal,
  const std::vector<Eigen::MatrixXd> & Lambda);

/// max_{k,i} ||A_ki||_inf and max_{k,i} ||A_ki^T||_inf.
double block_d1(const IntervalBlocks & A);
double block_d2(const IntervalBlocks & A);

/// sqrt(sum_{k,i} w_i |p_ki|^2).
double omega_norm(const HpMesh & mesh, const IntervalSchemes & schemes, const Eigen::VectorXd & p, int n);

/// Right-hand sides of the a priori bounds for a uniform mesh; infinite when 2 h d >= 1.
double state_bound(const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A,
                   const Eigen::VectorXd & p, const Eigen::VectorXd & q);
double costate_bound(const HpMesh & mesh, const IntervalSchemes & schemes, const IntervalBlocks & A,
                     const Eigen::VectorXd & p, const Eigen::VectorXd & q, const Eigen::VectorXd & lambda_terminal);

}  // namespace radau_hp
