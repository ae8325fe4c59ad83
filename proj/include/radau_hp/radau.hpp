#pragma once

#include <Eigen/Core>

#include <memory>

namespace radau_hp {

/// Value and derivative of a Jacobi polynomial at a point.
struct JacobiValue
{
  double value;
  double derivative;
};

/**
 * @brief Evaluate the Jacobi polynomial P_n^{(1,0)} and its derivative at tau.
 *
 * Uses the three-term recurrence for parameters (1, 0). The derivative comes from the identity
 * d/dtau P_n^{(1,0)} = (n + 2) / 2 * P_{n-1}^{(2,1)}, with P^{(2,1)} evaluated by the same
 * recurrence.
 */
JacobiValue jacobi10_eval(int n, double tau);

/**
 * @brief Flipped Radau collocation on [-1, 1] with N points, plus the noncollocated point -1.
 *
 * Immutable after construction.
 */
struct RadauScheme
{
  int degree{0};                 ///< number of collocation points N
  Eigen::VectorXd nodes;         ///< N+1 nodes, nodes(0) = -1 and nodes(N) = 1
  Eigen::VectorXd weights;       ///< N quadrature weights for nodes(1..N)
  Eigen::MatrixXd diff;          ///< N x (N+1) differentiation matrix D
  Eigen::MatrixXd diff_sub_inv;  ///< inverse of the trailing N columns of D
  Eigen::MatrixXd dddag;         ///< D-double-dagger, N x N
  Eigen::MatrixXd dddag_inv;     ///< inverse of dddag

  /// Collocation points tau_1..tau_N.
  Eigen::VectorXd collocation_nodes() const { return nodes.tail(degree); }
};

/**
 * @brief Build the flipped Radau scheme with N collocation points.
 *
 * Interior nodes come from the Golub-Welsch eigenproblem of the Jacobi(1,0) recurrence and are
 * polished by Newton's method. Throws std::invalid_argument for N < 1 and std::runtime_error if
 * the tridiagonal eigen-solve fails.
 */
RadauScheme build_scheme(int N);

/// Process-wide memoized build_scheme; safe to call concurrently.
std::shared_ptr<const RadauScheme> cached_scheme(int N);

/**
 * @brief Inverse of D-double-dagger from the closed-form expression in terms of the Lagrange
 * basis M_j on tau_1..tau_{N-1}.
 *
 * The integrals of M_j (degree N-2) from 1 to tau_i are evaluated with the scheme's own N-point
 * Radau rule mapped onto [tau_i, 1]; the rule is exact through degree 2N-2, so the integrals are
 * exact up to rounding.
 */
Eigen::MatrixXd dddag_inverse_explicit(const RadauScheme & scheme);

/// Norm diagnostics for the four stability properties of the scheme matrices.
struct PropertyReport
{
  int degree{0};
  double p1_norm{0};          ///< ||D_{1:N}^{-1}||_inf
  double p2_max_row_norm{0};  ///< max Euclidean row norm of [W^{1/2} D_{1:N}]^{-1}
  double p3_norm{0};          ///< ||(D-double-dagger)^{-1}||_inf
  double p4_max_row_norm{0};  ///< max Euclidean row norm of [W^{1/2} D-double-dagger]^{-1}
};

PropertyReport scheme_property_report(const RadauScheme & scheme);

}  // namespace radau_hp
