#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "facets/geometry.hpp"
#include "facets/model.hpp"

namespace facets {

/// A finite facet configuration with per-orientation index buckets.
///
/// Facet order is storage order only; removal swaps the last facet into the
/// freed slot.
class Configuration {
 public:
  explicit Configuration(std::size_t d);
  Configuration(std::size_t d, std::vector<Facet> facets);

  std::size_t dimension() const noexcept { return d_; }
  std::size_t size() const noexcept { return facets_.size(); }
  bool empty() const noexcept { return facets_.empty(); }

  const Facet& operator[](std::size_t i) const { return facets_[i]; }
  std::span<const Facet> facets() const noexcept { return facets_; }
  std::span<const std::size_t> bucket(std::size_t axis) const { return buckets_[axis]; }
  std::size_t count(std::size_t axis) const { return buckets_[axis].size(); }
  std::vector<std::size_t> orientation_counts() const;
  std::size_t distinct_orientations() const;

  void add(Facet f);
  void remove(std::size_t index);
  /// Moves facet `index` to a new centre, keeping its orientation.
  void set_center(std::size_t index, std::span<const double> center);

  friend bool operator==(const Configuration& x, const Configuration& y) {
    return x.d_ == y.d_ && x.facets_ == y.facets_;
  }

 private:
  std::size_t d_;
  std::vector<Facet> facets_;
  std::vector<std::vector<std::size_t>> buckets_;
  std::vector<std::size_t> slot_;  // position of facet i inside its bucket
};

/// G_j: sum of H^{d-j} over unordered j-subsets of the configuration.
double g_stat(const Configuration& config, std::size_t j, const ModelParams& params);

/// [G_1, ..., G_{j_max}] in one traversal; entry j-1 equals g_stat(config, j) bit for bit.
std::vector<double> g_stat_all(const Configuration& config, std::size_t j_max, const ModelParams& params);

/// G_j(config ∪ {u}) - G_j(config): sum over (j-1)-subsets S of H^{d-j}(S ∪ {u}).
double delta_g(const Configuration& config, const Facet& u, std::size_t j, const ModelParams& params);

/// [delta_g(.., 1), ..., delta_g(.., j_max)]. When `exclude` is set, facet
/// `exclude` of the configuration is treated as absent (death/move updates).
std::vector<double> delta_g_all(const Configuration& config, const Facet& u, std::size_t j_max,
                                const ModelParams& params,
                                std::optional<std::size_t> exclude = std::nullopt);

/// Unnormalised log-density sum_{i=1}^d nu_i G_i.
double energy(const Configuration& config, const ModelParams& params);

/// sum_{i>=2} nu_i G_i; the part of the energy not absorbed into the intensity.
double interaction_energy(const Configuration& config, const ModelParams& params);

/// Highest order i with nu_i != 0 (0 when nu vanishes).
std::size_t max_active_order(const ModelParams& params);

}  // namespace facets
