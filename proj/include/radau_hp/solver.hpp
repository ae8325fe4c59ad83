#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "radau_hp/transcription.hpp"

namespace radau_hp {

enum class InitKind { Zeros, Constant, WarmStart };

struct SolveOptions
{
  double tol{1e-10};
  int max_iter{200};
  double backtrack{0.5};
  double min_step{0x1p-30};
  InitKind init{InitKind::Zeros};
  std::optional<DiscreteSolution> warm_start;
  bool sparse{true};
  bool second_order{true};  ///< run the reduced-Hessian check at the end
};

enum class SolveStatus { Converged, MaxIterations, LineSearchStall, SingularSystem };

const char * to_string(SolveStatus s);

struct SecondOrderReport
{
  double block_min_eig{0};    ///< smallest eigenvalue over the blocks h w_i Hess H (+ Hess C on the last)
  double reduced_min_eig{0};  ///< smallest eigenvalue of the Hessian on the null space of the active constraints
  bool ok{false};             ///< reduced_min_eig strictly positive
};

struct SolveStats
{
  int iterations{0};
  double composite_norm{0};
  double sup_norm{0};
  std::vector<int> active_set_sizes;
  std::vector<double> step_lengths;
  SecondOrderReport second_order;
  bool second_order_ok{false};
  bool a2_warning{false};
};

struct SolveResult
{
  DiscreteSolution solution;
  SolveStats stats;
  SolveStatus status{SolveStatus::MaxIterations};
  std::string message;

  bool converged() const { return status == SolveStatus::Converged; }
};

DiscreteSolution initial_guess(const HpMesh & mesh, const ControlProblem & problem, const SolveOptions & options);

/// Semismooth Newton on the stacked KKT residual with a sup-norm backtracking line search.
SolveResult solve(const ControlProblem & problem, const HpMesh & mesh, const IntervalSchemes & schemes,
                  const SolveOptions & options = {});

/// Solve J d = -F densely; zero residual gives a zero step. Throws std::runtime_error if J is singular.
Eigen::VectorXd newton_step(const Eigen::MatrixXd & jacobian, const Eigen::VectorXd & residual);

SecondOrderReport second_order_check(const ControlProblem & problem, const HpMesh & mesh,
                                     const IntervalSchemes & schemes, const DiscreteSolution & sol);

}  // namespace radau_hp
