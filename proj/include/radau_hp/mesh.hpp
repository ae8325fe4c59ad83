#pragma once

#include <memory>
#include <vector>

#include "radau_hp/radau.hpp"

namespace radau_hp {

/**
 * @brief Mesh breakpoints t_0 < ... < t_K with a polynomial degree per interval.
 *
 * Interval k (0-based here) spans [t_k, t_{k+1}] and is mapped to [-1, 1] by
 * t = midpoint(k) + half_width(k) * tau.
 */
class HpMesh
{
public:
  HpMesh(std::vector<double> breakpoints, std::vector<int> degrees);

  /// K equal intervals on [t_start, t_end], all of degree N.
  static HpMesh uniform(double t_start, double t_end, int K, int N);

  /// Given breakpoints, all intervals of degree N.
  static HpMesh with_degree(std::vector<double> breakpoints, int N);

  int intervals() const { return static_cast<int>(degrees_.size()); }
  const std::vector<double> & breakpoints() const { return breakpoints_; }
  const std::vector<int> & degrees() const { return degrees_; }
  int degree(int k) const { return degrees_[k]; }
  double half_width(int k) const { return 0.5 * (breakpoints_[k + 1] - breakpoints_[k]); }
  double midpoint(int k) const { return 0.5 * (breakpoints_[k + 1] + breakpoints_[k]); }
  double time(int k, double tau) const { return midpoint(k) + half_width(k) * tau; }
  double max_half_width() const;
  double t_start() const { return breakpoints_.front(); }
  double t_end() const { return breakpoints_.back(); }

  /// Interval containing t; a mesh point belongs to the interval on its left.
  /// Throws std::out_of_range outside the horizon.
  int locate(double t) const;

private:
  std::vector<double> breakpoints_;
  std::vector<int> degrees_;
};

/// One scheme per mesh interval (shared through the process-wide cache).
using IntervalSchemes = std::vector<std::shared_ptr<const RadauScheme>>;

IntervalSchemes schemes_for(const HpMesh & mesh);

}  // namespace radau_hp
