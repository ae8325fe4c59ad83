#include "radau_hp/mesh.hpp"

#include <algorithm>
#include <stdexcept>

namespace radau_hp {

HpMesh::HpMesh(std::vector<double> breakpoints, std::vector<int> degrees)
    : breakpoints_(std::move(breakpoints)), degrees_(std::move(degrees))
{
  if (breakpoints_.size() < 2 || degrees_.size() + 1 != breakpoints_.size()) {
    throw std::invalid_argument("HpMesh: need K+1 breakpoints and K degrees");
  }
  for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] < breakpoints_[k + 1])) {
      throw std::invalid_argument("HpMesh: breakpoints must be strictly increasing");
    }
  }
  for (int n : degrees_) {
    if (n < 1) { throw std::invalid_argument("HpMesh: degrees must be at least 1"); }
  }
}

HpMesh HpMesh::uniform(double t_start, double t_end, int K, int N)
{
  if (K < 1) { throw std::invalid_argument("HpMesh: K must be at least 1"); }
  std::vector<double> bp(K + 1);
  for (int k = 0; k <= K; ++k) { bp[k] = t_start + (t_end - t_start) * k / K; }
  bp.back() = t_end;
  return HpMesh(std::move(bp), std::vector<int>(K, N));
}

HpMesh HpMesh::with_degree(std::vector<double> breakpoints, int N)
{
  const auto K = breakpoints.size() < 2 ? 0 : breakpoints.size() - 1;
  return HpMesh(std::move(breakpoints), std::vector<int>(K, N));
}

double HpMesh::max_half_width() const
{
  double h = 0.0;
  for (int k = 0; k < intervals(); ++k) { h = std::max(h, half_width(k)); }
  return h;
}

int HpMesh::locate(double t) const
{
  if (t < breakpoints_.front() || t > breakpoints_.back()) { throw std::out_of_range("time outside mesh horizon"); }
  // first breakpoint >= t; the interval to its left owns t
  const auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
  return static_cast<int>(std::distance(breakpoints_.begin() + 1, it));
}

IntervalSchemes schemes_for(const HpMesh & mesh)
{
  IntervalSchemes out;
  out.reserve(mesh.intervals());
  for (int n : mesh.degrees()) { out.push_back(cached_scheme(n)); }
  return out;
}

}  // namespace radau_hp
