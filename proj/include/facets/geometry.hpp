#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "facets/model.hpp"

namespace facets {

/// An axis-aligned facet: the (d-1)-cube of side 2b centred at `center`
/// lying in the hyperplane x_axis = center[axis]. `axis` is 0-based, so
/// axis == l-1 for the normal vector e_l.
struct Facet {
  std::vector<double> center;
  std::size_t axis = 0;

  friend bool operator==(const Facet&, const Facet&) = default;
};

/// Running intersection of facets sharing half-side b.
///
/// Tracks, per coordinate, the closed interval common to all added facets
/// that are not normal to it, plus the coordinates fixed by a facet normal.
/// Any pair of parallel facets makes the intersection measure zero.
class IntersectionAccumulator {
 public:
  IntersectionAccumulator(std::size_t d, double b);

  void reset();
  /// Adds a facet. Returns false once the running measure is known to be 0.
  bool add(std::span<const double> center, std::size_t axis);
  /// H^{d-j} of the intersection of the j facets added so far.
  double measure() const;
  bool feasible() const noexcept { return feasible_; }
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t d_;
  double b_;
  std::vector<double> lo_, hi_, fixed_value_;
  std::vector<char> fixed_;
  std::size_t count_ = 0;
  bool feasible_ = true;
};

/// H^{d-j}(facet_1 ∩ ... ∩ facet_j) for 1 <= j <= d, exactly.
double intersection_measure(std::span<const Facet> facets, std::size_t d, double b);
double intersection_measure(std::span<const Facet> facets, const ModelParams& params);

/// Throws InvalidArgument if the facet has the wrong dimension, an axis
/// outside 0..d-1, or a centre outside [0,b]^d.
void check_facet(const Facet& f, std::size_t d, double b);

}  // namespace facets
