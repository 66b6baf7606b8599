#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "facets/random.hpp"

namespace facets {

/// Intensity profile of facet centres on the window [0,b]^d.
///
/// Either constant, or a product of per-axis piecewise-constant factors
/// chi(z) = prod_i f_i(z_i). Breakpoints are interior cut points of [0,b];
/// an axis with k breakpoints carries k+1 positive values.
class ChiProfile {
 public:
  struct Axis {
    std::vector<double> breakpoints;
    std::vector<double> values;
  };

  static ChiProfile constant(double value);
  static ChiProfile product_pwc(std::vector<Axis> axes);

  bool is_constant() const noexcept { return std::holds_alternative<double>(repr_); }
  /// Only meaningful when is_constant().
  double constant_value() const;
  const std::vector<Axis>& axes() const;

  /// Throws ValidationError unless the profile is well formed for dimension d, side b.
  void validate(std::size_t d, double b) const;

  double density(std::span<const double> z, double b) const;
  /// T = integral of chi over [0,b]^d.
  double total_mass(std::size_t d, double b) const;
  /// Draws one centre with density chi/T (per-axis inverse CDF).
  void sample_center(Rng& rng, double b, std::span<double> out) const;

 private:
  std::variant<double, std::vector<Axis>> repr_{1.0};
};

/// Parameters of the facet process: dimension, window side, intensity
/// multiplier, interaction vector and optional submodel order.
struct ModelParams {
  std::size_t d = 2;
  double b = 1.0;
  double a = 1.0;
  std::vector<double> nu;       // nu[i-1] multiplies G_i
  std::optional<int> c;         // submodel order, 2..d
  ChiProfile chi = ChiProfile::constant(1.0);

  double nu_at(std::size_t order) const { return order >= 1 && order <= nu.size() ? nu[order - 1] : 0.0; }
};

/// Throws ValidationError on any invalid field. nu_i > 0 for some i >= 2 is
/// rejected because the density is then not integrable under the Poisson law.
void validate(const ModelParams& params);

double total_mass(const ModelParams& params);

/// (2b)^{d-1}: the measure of a single facet, i.e. G_1 per facet.
double facet_area(const ModelParams& params);

/// Order c governing the asymptotics: the explicit c if given, otherwise the
/// smallest i >= 2 with nu_i < 0. Empty when the process is Poisson
/// (no active interaction of order >= 2).
std::optional<int> interaction_order(const ModelParams& params);

/// a * exp(nu_1 (2b)^{d-1}); the first-order interaction is a constant per facet.
double effective_intensity(const ModelParams& params);

/// True when some nu_i, i >= 2, is nonzero.
bool has_interaction(const ModelParams& params);

}  // namespace facets
