#include "facets/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "facets/errors.hpp"

namespace facets {

namespace {

// Cumulative masses of an axis factor over [0,b]; size = values.size() + 1.
std::vector<double> axis_edges(const ChiProfile::Axis& axis, double b) {
  std::vector<double> edges;
  edges.reserve(axis.breakpoints.size() + 2);
  edges.push_back(0.0);
  edges.insert(edges.end(), axis.breakpoints.begin(), axis.breakpoints.end());
  edges.push_back(b);
  return edges;
}

double axis_mass(const ChiProfile::Axis& axis, double b) {
  const auto edges = axis_edges(axis, b);
  double m = 0.0;
  for (std::size_t k = 0; k < axis.values.size(); ++k) m += axis.values[k] * (edges[k + 1] - edges[k]);
  return m;
}

}  // namespace

ChiProfile ChiProfile::constant(double value) {
  ChiProfile p;
  p.repr_ = value;
  return p;
}

ChiProfile ChiProfile::product_pwc(std::vector<Axis> axes) {
  ChiProfile p;
  p.repr_ = std::move(axes);
  return p;
}

double ChiProfile::constant_value() const {
  if (!is_constant()) throw InvalidArgument("chi profile is not constant");
  return std::get<double>(repr_);
}

const std::vector<ChiProfile::Axis>& ChiProfile::axes() const {
  static const std::vector<Axis> none;
  if (is_constant()) return none;
  return std::get<std::vector<Axis>>(repr_);
}

void ChiProfile::validate(std::size_t d, double b) const {
  if (is_constant()) {
    const double v = std::get<double>(repr_);
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("chi: constant value must be positive and finite");
    return;
  }
  const auto& ax = std::get<std::vector<Axis>>(repr_);
  if (ax.size() != d) throw ValidationError("chi: product_pwc needs one axis per dimension");
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const auto& a = ax[i];
    if (a.values.size() != a.breakpoints.size() + 1) {
      throw ValidationError("chi: axis " + std::to_string(i + 1) + " needs breakpoints+1 values");
    }
    double prev = 0.0;
    for (double x : a.breakpoints) {
      if (!(x > prev) || !(x < b)) {
        throw ValidationError("chi: breakpoints of axis " + std::to_string(i + 1) +
                              " must be strictly increasing inside (0,b)");
      }
      prev = x;
    }
    for (double v : a.values) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("chi: values must be positive and finite");
    }
  }
}

double ChiProfile::density(std::span<const double> z, double b) const {
  if (is_constant()) return std::get<double>(repr_);
  const auto& ax = std::get<std::vector<Axis>>(repr_);
  double v = 1.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    if (z[i] < 0.0 || z[i] > b) return 0.0;
    const auto& bp = ax[i].breakpoints;
    const auto k = static_cast<std::size_t>(std::upper_bound(bp.begin(), bp.end(), z[i]) - bp.begin());
    v *= ax[i].values[k];
  }
  return v;
}

double ChiProfile::total_mass(std::size_t d, double b) const {
  if (is_constant()) return std::get<double>(repr_) * std::pow(b, static_cast<double>(d));
  double t = 1.0;
  for (const auto& a : std::get<std::vector<Axis>>(repr_)) t *= axis_mass(a, b);
  return t;
}

void ChiProfile::sample_center(Rng& rng, double b, std::span<double> out) const {
  if (is_constant()) {
    for (auto& x : out) x = b * uniform01(rng);
    return;
  }
  const auto& ax = std::get<std::vector<Axis>>(repr_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& a = ax[i];
    const auto edges = axis_edges(a, b);
    double u = uniform01(rng) * axis_mass(a, b);
    std::size_t k = 0;
    for (; k + 1 < a.values.size(); ++k) {
      const double seg = a.values[k] * (edges[k + 1] - edges[k]);
      if (u < seg) break;
      u -= seg;
    }
    out[i] = std::min(edges[k] + u / a.values[k], edges[k + 1]);
  }
}

void validate(const ModelParams& p) {
  if (p.d < 2) throw ValidationError("d must be at least 2");
  if (!(p.b > 0.0) || !std::isfinite(p.b)) throw ValidationError("b must be positive");
  if (!(p.a >= 1.0) || !std::isfinite(p.a)) throw ValidationError("a must be >= 1");
  if (p.nu.size() != p.d) throw ValidationError("nu must have exactly d entries");
  for (double v : p.nu) {
    if (!std::isfinite(v)) throw ValidationError("nu entries must be finite");
  }
  for (std::size_t i = 2; i <= p.d; ++i) {
    if (p.nu[i - 1] > 0.0) {
      std::ostringstream msg;
      msg << "nu_" << i << " = " << p.nu[i - 1]
          << " > 0: exp(sum nu_i G_i) is non-integrable with respect to the Poisson"
             " reference process (the normalising series diverges); require nu_i <= 0 for i >= 2";
      throw ValidationError(msg.str());
    }
  }
  if (p.c && (*p.c < 2 || static_cast<std::size_t>(*p.c) > p.d)) {
    throw ValidationError("c must lie in 2..d");
  }
  p.chi.validate(p.d, p.b);
}

double total_mass(const ModelParams& p) { return p.chi.total_mass(p.d, p.b); }

double facet_area(const ModelParams& p) { return std::pow(2.0 * p.b, static_cast<double>(p.d - 1)); }

std::optional<int> interaction_order(const ModelParams& p) {
  if (p.c && p.nu_at(static_cast<std::size_t>(*p.c)) < 0.0) return p.c;
  for (std::size_t i = 2; i <= p.d; ++i) {
    if (p.nu_at(i) < 0.0) return static_cast<int>(i);
  }
  return std::nullopt;
}

double effective_intensity(const ModelParams& p) { return p.a * std::exp(p.nu_at(1) * facet_area(p)); }

bool has_interaction(const ModelParams& p) {
  for (std::size_t i = 2; i <= p.d; ++i) {
    if (p.nu_at(i) != 0.0) return true;
  }
  return false;
}

}  // namespace facets
