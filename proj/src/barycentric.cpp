#include "radau_hp/barycentric.hpp"

#include <cmath>
#include <stdexcept>

namespace radau_hp {

Eigen::VectorXd barycentric_weights(const Eigen::VectorXd & nodes)
{
  const Eigen::Index m = nodes.size();
  Eigen::VectorXd log_mag(m);
  Eigen::VectorXd sign(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double acc = 0.0;
    double s   = 1.0;
    for (Eigen::Index l = 0; l < m; ++l) {
      if (l == j) { continue; }
      const double diff = nodes(j) - nodes(l);
      if (diff == 0.0) { throw std::invalid_argument("barycentric_weights: repeated node"); }
      acc -= std::log(std::abs(diff));
      if (diff < 0) { s = -s; }
    }
    log_mag(j) = acc;
    sign(j)    = s;
  }
  const double shift = m > 0 ? log_mag.maxCoeff() : 0.0;
  Eigen::VectorXd w(m);
  for (Eigen::Index j = 0; j < m; ++j) { w(j) = sign(j) * std::exp(log_mag(j) - shift); }
  return w;
}

Eigen::MatrixXd differentiation_matrix(const Eigen::VectorXd & nodes)
{
  const Eigen::Index m     = nodes.size();
  const Eigen::VectorXd bw = barycentric_weights(nodes);
  Eigen::MatrixXd d        = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) { continue; }
      d(i, j) = (bw(j) / bw(i)) / (nodes(i) - nodes(j));
      row_sum += d(i, j);
    }
    d(i, i) = -row_sum;
  }
  return d;
}

Eigen::VectorXd barycentric_interpolate(
  const Eigen::VectorXd & nodes,
  const Eigen::VectorXd & weights,
  const Eigen::MatrixXd & values,
  double x)
{
  if (values.cols() != nodes.size()) {
    throw std::invalid_argument("barycentric_interpolate: values/nodes size mismatch");
  }
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.rows());
  double den          = 0.0;
  for (Eigen::Index j = 0; j < nodes.size(); ++j) {
    const double diff = x - nodes(j);
    if (diff == 0.0) { return values.col(j); }
    const double c = weights(j) / diff;
    num += c * values.col(j);
    den += c;
  }
  return num / den;
}

double barycentric_interpolate(
  const Eigen::VectorXd & nodes,
  const Eigen::VectorXd & weights,
  const Eigen::VectorXd & values,
  double x)
{
  return barycentric_interpolate(nodes, weights, Eigen::MatrixXd(values.transpose()), x)(0);
}

}  // namespace radau_hp
