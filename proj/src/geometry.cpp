#include "facets/geometry.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "facets/errors.hpp"

namespace facets {

IntersectionAccumulator::IntersectionAccumulator(std::size_t d, double b)
    : d_(d), b_(b), lo_(d), hi_(d), fixed_value_(d), fixed_(d) {
  reset();
}

void IntersectionAccumulator::reset() {
  std::fill(lo_.begin(), lo_.end(), -std::numeric_limits<double>::infinity());
  std::fill(hi_.begin(), hi_.end(), std::numeric_limits<double>::infinity());
  std::fill(fixed_.begin(), fixed_.end(), 0);
  count_ = 0;
  feasible_ = true;
}

bool IntersectionAccumulator::add(std::span<const double> center, std::size_t axis) {
  ++count_;
  if (!feasible_) return false;
  if (fixed_[axis]) {
    feasible_ = false;  // parallel pair
    return false;
  }
  const double v = center[axis];
  if (v < lo_[axis] || v > hi_[axis]) {
    feasible_ = false;
    return false;
  }
  fixed_[axis] = 1;
  fixed_value_[axis] = v;
  for (std::size_t m = 0; m < d_; ++m) {
    if (m == axis) continue;
    lo_[m] = std::max(lo_[m], center[m] - b_);
    hi_[m] = std::min(hi_[m], center[m] + b_);
    if (lo_[m] > hi_[m] || (fixed_[m] && (fixed_value_[m] < lo_[m] || fixed_value_[m] > hi_[m]))) {
      feasible_ = false;
      return false;
    }
  }
  return true;
}

double IntersectionAccumulator::measure() const {
  if (!feasible_ || count_ == 0) return 0.0;
  double h = 1.0;
  for (std::size_t m = 0; m < d_; ++m) {
    if (!fixed_[m]) h *= hi_[m] - lo_[m];
  }
  return h;
}

void check_facet(const Facet& f, std::size_t d, double b) {
  if (f.center.size() != d) {
    throw InvalidArgument("facet centre has dimension " + std::to_string(f.center.size()) +
                          ", expected " + std::to_string(d));
  }
  if (f.axis >= d) throw InvalidArgument("facet orientation outside 1..d");
  for (double x : f.center) {
    if (!(x >= 0.0 && x <= b)) throw InvalidArgument("facet centre outside the window [0,b]^d");
  }
}

double intersection_measure(std::span<const Facet> facets, std::size_t d, double b) {
  if (facets.empty() || facets.size() > d) {
    throw InvalidArgument("intersection_measure needs 1 <= j <= d facets, got " + std::to_string(facets.size()));
  }
  for (const auto& f : facets) check_facet(f, d, b);
  IntersectionAccumulator acc(d, b);
  for (const auto& f : facets) {
    if (!acc.add(f.center, f.axis)) return 0.0;
  }
  return acc.measure();
}

double intersection_measure(std::span<const Facet> facets, const ModelParams& params) {
  return intersection_measure(facets, params.d, params.b);
}

}  // namespace facets
