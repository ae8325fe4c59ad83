#pragma once

#include <Eigen/Core>

namespace radau_hp {

/**
 * @brief Barycentric weights 1 / prod_{l != j} (x_j - x_l), rescaled by a common factor.
 *
 * Only ratios of the weights enter the interpolation and differentiation formulas, so the
 * weights are computed in log space and normalized to a maximum magnitude of one. This keeps
 * several hundred nodes free of overflow.
 */
Eigen::VectorXd barycentric_weights(const Eigen::VectorXd & nodes);

/// Square differentiation matrix on `nodes`; the diagonal is the negative off-diagonal row sum.
Eigen::MatrixXd differentiation_matrix(const Eigen::VectorXd & nodes);

/**
 * @brief Evaluate the interpolating polynomial of column-wise samples at x.
 *
 * @param values dim x M matrix, column j holds the sample at nodes(j)
 * @return dim-vector; returns the stored column exactly when x coincides with a node
 */
Eigen::VectorXd barycentric_interpolate(
  const Eigen::VectorXd & nodes,
  const Eigen::VectorXd & weights,
  const Eigen::MatrixXd & values,
  double x);

/// Scalar convenience overload.
double barycentric_interpolate(
  const Eigen::VectorXd & nodes,
  const Eigen::VectorXd & weights,
  const Eigen::VectorXd & values,
  double x);

}  // namespace radau_hp
