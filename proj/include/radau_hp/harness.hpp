#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radau_hp/problem.hpp"
#include "radau_hp/solver.hpp"

namespace radau_hp {

/// Sup-norm errors of one solve against the analytic reference. NaN marks an unmeasured variable.
struct ErrorSample
{
  double axis_value{0};  ///< K for an h-sweep, N for a p-sweep or an interpolation run
  double h{0};           ///< largest half-width of the mesh (0 for interpolation runs)
  double err_state{0};
  double err_control{0};
  double err_costate{0};
  int solver_iters{0};
  bool converged{true};
  std::string status{"converged"};
};

struct FitResult
{
  double slope{0};
  double intercept{0};
  double r2{0};
  int used{0};  ///< samples above the floor that entered the fit
};

/// Least-squares line through (abscissa, log10 error) for the samples with error > floor.
/// Throws std::invalid_argument when fewer than two samples remain.
FitResult fit_rate(const std::vector<std::pair<double, double>> & samples, double floor);

enum class SweepAxis { MeshSize, Degree, Interpolation };

const char * to_string(SweepAxis axis);

struct RateReport
{
  std::string problem;
  SweepAxis axis{SweepAxis::MeshSize};
  std::string abscissa;           ///< "log10_h", "N" or "log10_N"
  int degree{0};                  ///< fixed N of an h-sweep
  std::vector<double> mesh;       ///< fixed breakpoints of a p-sweep
  double tol{0};
  double accuracy_floor{0};
  std::vector<ErrorSample> samples;
  std::map<std::string, std::optional<FitResult>> fits;  ///< keys: state, control, costate
  std::map<std::string, double> theory_expected;
  std::vector<std::string> notes;

  bool all_converged() const;
};

/// Sup errors over collocation and mesh points (state and mesh multiplier included).
ErrorSample measure_errors(const HpMesh & mesh, const IntervalSchemes & schemes, const DiscreteSolution & sol,
                           const AnalyticReference & ref);

/// Uniform meshes with K intervals of degree N; the fit abscissa is log10(h).
RateReport run_h_sweep(const std::string & problem, int N, const std::vector<int> & K_list,
                       const SolveOptions & options = {});

/// Fixed breakpoints, degree N on every interval; the fit abscissa is N.
RateReport run_p_sweep(const std::string & problem, const std::vector<double> & breakpoints,
                       const std::vector<int> & N_list, const SolveOptions & options = {});

/// Refit a report with a different abscissa transform (used for the exponential/algebraic comparison).
std::map<std::string, std::optional<FitResult>> refit(const RateReport & report,
                                                      const std::function<double(const ErrorSample &)> & abscissa);

/// Scalar test function on [-1, 1] with a point where its smoothness breaks (if any).
struct TestFunction
{
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::optional<double> singular_point;
  double eta{0};  ///< Sobolev index, 0 when the function is analytic or a polynomial
  bool analytic{false};
};

/// "exp", "poly" (degree-N polynomial, rebuilt per N) or "sobolev:ETA" (|tau|^(ETA-1/2)).
std::function<TestFunction(int N)> make_test_function(const std::string & name);

/// H1 seminorm of u - u_I with u_I the degree-N interpolant on -1 and the N collocation points.
double interpolation_h1_error(const TestFunction & u, int N);

/// Interpolation error over N_list; fits against N for analytic functions, log10 N otherwise.
RateReport interp_error_experiment(const std::vector<int> & N_list, const std::string & function_name);

/// Gauss-Legendre rule with n points on [-1, 1].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n);

enum class ReportFormat { Csv, Json };

void emit_report(const RateReport & report, ReportFormat format, std::ostream & out);
/// Writes to `path`; throws std::runtime_error when the file cannot be written.
void emit_report(const RateReport & report, ReportFormat format, const std::string & path);
RateReport parse_json_report(const std::string & text);

/// Rows of the scheme norm table: N, ||D1:N^-1||, row norm, ||Ddag^-1||, row norm.
std::vector<PropertyReport> property_table(const std::vector<int> & N_list);
void emit_table(const std::vector<PropertyReport> & rows, ReportFormat format, std::ostream & out);

/// "4..24", "25,50,...,300", or a plain comma list.
std::vector<int> parse_int_list(const std::string & text);
std::vector<double> parse_double_list(const std::string & text);

}  // namespace radau_hp
