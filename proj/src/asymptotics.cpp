#include "facets/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "facets/combinatorics.hpp"
#include "facets/errors.hpp"
#include "facets/samplers.hpp"
#include "facets/ustats.hpp"

namespace facets {

std::uint64_t binomial(long long n, long long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (long long i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::uint64_t factorial(unsigned n) {
  if (n > 20) throw InvalidArgument("factorial overflows 64 bits beyond 20!");
  std::uint64_t r = 1;
  for (unsigned i = 2; i <= n; ++i) r *= i;
  return r;
}

double rho_limit(int k, int c, int d) {
  if (c < 2 || c > d || k < 0 || k > d) {
    throw InvalidArgument("rho_limit needs 0 <= k <= d and 2 <= c <= d");
  }
  if (k >= c) return 0.0;
  // ((d-k)!/(c-1-k)!) / (d!/(c-1)!) as a product of short ratios.
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(c - 1 - i) / static_cast<double>(d - i);
  return r;
}

RhoEstimate rho_estimate_mc(const ModelParams& params, std::span<const Facet> points, std::size_t n_samples,
                            Rng& rng) {
  validate(params);
  if (points.empty()) throw InvalidArgument("rho_estimate_mc needs at least one point");
  if (n_samples < 2) throw InvalidArgument("rho_estimate_mc needs at least two samples");
  for (const auto& x : points) check_facet(x, params.d, params.b);

  const std::size_t top = max_active_order(params);
  std::vector<double> log_den(n_samples), log_num(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Configuration eta = sample_poisson(params, rng);
    double e0 = 0.0, e1 = 0.0;
    if (top >= 2) {
      const auto g = g_stat_all(eta, top, params);
      for (std::size_t i = 2; i <= top; ++i) e0 += params.nu_at(i) * g[i - 1];
      e1 = e0;
      for (const auto& x : points) {
        const auto dg = delta_g_all(eta, x, top, params);
        for (std::size_t i = 2; i <= top; ++i) e1 += params.nu_at(i) * dg[i - 1];
        eta.add(x);
      }
    }
    log_den[s] = e0;
    log_num[s] = e1;
  }

  // Weights shifted by the largest denominator log-weight; numerator <= denominator since nu_i <= 0.
  const double shift = *std::max_element(log_den.begin(), log_den.end());
  double sum_den = 0.0, sum_num = 0.0, sum_den_sq = 0.0;
  std::vector<double> w0(n_samples), w1(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    w0[s] = std::exp(log_den[s] - shift);
    w1[s] = std::exp(log_num[s] - shift);
    sum_den += w0[s];
    sum_num += w1[s];
    sum_den_sq += w0[s] * w0[s];
  }
  const double n = static_cast<double>(n_samples);
  const double ess = sum_den * sum_den / sum_den_sq;
  const double constant = std::exp(params.nu_at(1) * facet_area(params) * static_cast<double>(points.size()));

  RhoEstimate out;
  out.log_denominator = shift + std::log(sum_den / n);
  out.log_numerator = shift + std::log(sum_num / n) + std::log(constant);
  out.effective_sample_size = ess;
  if (ess < 2.0) throw DegenerateEstimate(out.log_numerator, out.log_denominator, ess);

  const double ratio = sum_num / sum_den;
  const double mean_den = sum_den / n;
  double resid = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double r = w1[s] - ratio * w0[s];
    resid += r * r;
  }
  out.value = ratio * constant;
  out.std_error = constant * std::sqrt(resid / (n * (n - 1.0))) / mean_den;
  return out;
}

std::uint64_t r_count(int c, int p, int q, int d, std::span<const std::uint64_t> n) {
  if (q < 0 || q > p || p > c || c < 1 || d < 1 || q > d || d > 62) {
    throw InvalidArgument("r_count needs 0 <= q <= p <= c, q <= d");
  }
  if (n.size() != static_cast<std::size_t>(d)) throw InvalidArgument("r_count: n must have d entries");
  const std::uint64_t q_mask = (q == 0) ? 0 : ((std::uint64_t{1} << q) - 1);
  std::uint64_t total = 0;
  for (std::uint64_t f = 0; f < (std::uint64_t{1} << d); ++f) {
    const int size = std::popcount(f);
    if (size < c - p || size > c) continue;
    if (std::popcount(f | q_mask) + p - q < c) continue;
    std::uint64_t prod = 1;
    for (int j = 0; j < d; ++j) {
      if (f >> j & 1U) prod *= n[static_cast<std::size_t>(j)];
    }
    total += prod;
  }
  return total;
}

void SeriesRequest::validate() const {
  const int q = t.value_or(p);
  if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("series: a must be >= 0");
  if (!(nu < 0.0)) throw InvalidArgument("series: nu must be negative");
  if (c < 2) throw InvalidArgument("series: c must be >= 2");
  if (p < 0 || p > c) throw InvalidArgument("series: need 0 <= p <= c");
  if (q < 0 || q > p || q > d) throw InvalidArgument("series: need 0 <= t <= p and t <= d");
  if (d < 1) throw InvalidArgument("series: d must be >= 1");
  if (!(tail_tolerance > 0.0)) throw InvalidArgument("series: tail tolerance must be positive");
}

namespace {

constexpr double kSeriesBudget = 2e8;

// sum_{n} s^{|n|}/prod n_i! exp(nu R^{c,p}(q,d,n) - s(c-1)), truncated with a certified tail.
SeriesValue series_sum(double s, double nu, int c, int p, int q, int d, double tol) {
  if (d > 4) throw ResourceLimit("series evaluation limited to d <= 4 (cost grows as cap^d)");

  SeriesValue out;
  if (s == 0.0) {
    out.cap = 1;
  } else {
    // Smallest m > s with d (e s/m)^m e^{s(d-c)} < tol.
    const double log_tol = std::log(tol);
    std::size_t m = static_cast<std::size_t>(std::floor(s)) + 1;
    auto log_tail = [&](std::size_t mm) {
      const double md = static_cast<double>(mm);
      return std::log(static_cast<double>(d)) + md * (1.0 + std::log(s) - std::log(md)) + s * (d - c);
    };
    while (log_tail(m) >= log_tol) ++m;
    out.cap = m;
    out.tail_bound = std::exp(log_tail(m));
  }
  if (std::pow(static_cast<double>(out.cap), d) > kSeriesBudget) {
    throw ResourceLimit("series truncation needs " + std::to_string(out.cap) + "^" + std::to_string(d) +
                        " terms, above the evaluation budget");
  }

  const std::size_t cap = out.cap;
  std::vector<double> log_w(cap);
  for (std::size_t k = 0; k < cap; ++k) {
    log_w[k] = (k == 0 ? 0.0 : static_cast<double>(k) * std::log(s)) - std::lgamma(static_cast<double>(k) + 1.0);
  }

  std::vector<std::uint64_t> n(static_cast<std::size_t>(d), 0);
  const double base = -s * (c - 1);
  double total = 0.0, comp = 0.0;  // Kahan
  for (;;) {
    double lt = base;
    for (auto k : n) lt += log_w[k];
    lt += nu * static_cast<double>(r_count(c, p, q, d, n));
    const double y = std::exp(lt) - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;

    std::size_t i = 0;
    while (i < n.size() && ++n[i] == cap) n[i++] = 0;
    if (i == n.size()) break;
  }
  out.value = total;
  return out;
}

}  // namespace

SeriesValue i_series(const SeriesRequest& req) {
  req.validate();
  return series_sum(req.a, req.nu, req.c, req.p, req.t.value_or(req.p), req.d, req.tail_tolerance);
}

double i_series_limit(int c, int p, int d) {
  if (p >= c) return 0.0;
  return static_cast<double>(binomial(d - p, c - 1 - p));
}

RhoBounds rho_bounds(const ModelParams& params, int p, double tail_tolerance) {
  validate(params);
  const auto order = interaction_order(params);
  if (!order) throw InvalidArgument("rho_bounds needs an interaction order c");
  const int c = *order;
  const int d = static_cast<int>(params.d);
  if (p < 1 || p > c) throw InvalidArgument("rho_bounds needs 1 <= p <= c");
  const double nu = params.nu_at(static_cast<std::size_t>(c));
  const double s = effective_intensity(params) * total_mass(params) / static_cast<double>(d);
  const double small = std::pow(params.b, d - c), large = std::pow(2.0 * params.b, d - c);
  auto sum = [&](double scale, int pp) { return series_sum(s, nu * scale, c, pp, pp, d, tail_tolerance).value; };
  return {sum(large, p) / sum(small, 0), sum(small, p) / sum(large, 0)};
}

// ---------------------------------------------------------------------------

namespace {

// E over x ~ U(0,1) conditioning: expected range of {x} plus n iid U(0,1).
double expected_range_with(double x, std::size_t n) {
  const double e = static_cast<double>(n) + 1.0;
  const double frac = static_cast<double>(n) / e;
  const double emax = std::pow(x, e) + frac * (1.0 - std::pow(x, e));
  const double emax_mirror = std::pow(1.0 - x, e) + frac * (1.0 - std::pow(1.0 - x, e));
  return emax - (1.0 - emax_mirror);
}

double expected_range(std::size_t n) { return n == 0 ? 0.0 : (static_cast<double>(n) - 1.0) / (static_cast<double>(n) + 1.0); }

void check_order_range(std::size_t j, const ModelParams& params) {
  if (j < 1 || j > params.d) throw InvalidArgument("statistic order outside 1..d");
}

IntegralEstimate mc_integral(const ModelParams& params, std::size_t n_centers,
                             const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& factors,
                             std::size_t n_samples, Rng& rng) {
  if (n_samples < 2) throw InvalidArgument("Monte Carlo integral needs at least two samples");
  const std::size_t d = params.d;
  const double scale = std::pow(total_mass(params), static_cast<double>(n_centers));
  std::vector<double> centers(n_centers * d);
  IntersectionAccumulator acc(d, params.b);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < n_centers; ++i) {
      params.chi.sample_center(rng, params.b, std::span<double>(centers).subspan(i * d, d));
    }
    double v = 1.0;
    for (const auto& factor : factors) {
      acc.reset();
      for (auto [center, axis] : factor) acc.add(std::span<const double>(centers).subspan(center * d, d), axis);
      v *= acc.measure();
      if (v == 0.0) break;
    }
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {scale * mean, scale * std::sqrt(var / n), std::nullopt};
}

}  // namespace

std::optional<double> i_j_closed_form(std::size_t j, const ModelParams& params) {
  check_order_range(j, params);
  if (!params.chi.is_constant()) return std::nullopt;
  const double b = params.b, v = params.chi.constant_value();
  const double jd = static_cast<double>(j);
  const double free_factor = b * (jd + 3.0) / (jd + 1.0);
  return std::pow(v, jd) * std::pow(b, jd * static_cast<double>(params.d)) *
         std::pow(free_factor, static_cast<double>(params.d - j));
}

std::optional<double> i_kl_closed_form(std::size_t k, std::size_t l, const ModelParams& params) {
  check_order_range(k, params);
  check_order_range(l, params);
  if (!params.chi.is_constant()) return std::nullopt;
  const double b = params.b, v = params.chi.constant_value();
  const std::size_t n_centers = k + l - 1;

  // Coordinates factorise; each contributes b^{k+l-1} times a uniform expectation.
  double total = std::pow(v * std::pow(b, static_cast<double>(params.d)), static_cast<double>(n_centers));
  for (std::size_t m = 1; m <= params.d; ++m) {
    const bool free_a = m > k, free_b = m > l;
    double g = 1.0;
    if (free_a && !free_b) {
      g = b * (2.0 - expected_range(k));
    } else if (!free_a && free_b) {
      g = b * (2.0 - expected_range(l));
    } else if (free_a && free_b) {
      // Shared centre s_1 couples the two ranges.
      const double cross = boost::math::quadrature::gauss<double, 30>::integrate(
          [&](double x) { return expected_range_with(x, k - 1) * expected_range_with(x, l - 1); }, 0.0, 1.0);
      g = b * b * (4.0 - 2.0 * expected_range(k) - 2.0 * expected_range(l) + cross);
    }
    total *= g;
  }
  return total;
}

IntegralEstimate i_j_integral(std::size_t j, const ModelParams& params, std::size_t n_samples, Rng& rng) {
  validate(params);
  check_order_range(j, params);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> factors(1);
  for (std::size_t i = 0; i < j; ++i) factors[0].emplace_back(i, i);
  auto est = mc_integral(params, j, factors, n_samples, rng);
  est.closed_form = i_j_closed_form(j, params);
  return est;
}

IntegralEstimate i_kl_integral(std::size_t k, std::size_t l, const ModelParams& params, std::size_t n_samples,
                               Rng& rng) {
  validate(params);
  check_order_range(k, params);
  check_order_range(l, params);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> factors(2);
  for (std::size_t i = 0; i < k; ++i) factors[0].emplace_back(i, i);
  factors[1].emplace_back(0, 0);
  for (std::size_t i = 1; i < l; ++i) factors[1].emplace_back(k + i - 1, i);
  auto est = mc_integral(params, k + l - 1, factors, n_samples, rng);
  est.closed_form = i_kl_closed_form(k, l, params);
  return est;
}

Estimate i_j_value(std::size_t j, const ModelParams& params, const IntegralOptions& opts) {
  if (opts.use_closed_form) {
    if (auto cf = i_j_closed_form(j, params)) return {*cf, 0.0};
  }
  auto rng = make_rng(opts.seed, {1, j});
  const auto est = i_j_integral(j, params, opts.n_samples, rng);
  return {est.value, est.std_error};
}

Estimate i_kl_value(std::size_t k, std::size_t l, const ModelParams& params, const IntegralOptions& opts) {
  if (opts.use_closed_form) {
    if (auto cf = i_kl_closed_form(k, l, params)) return {*cf, 0.0};
  }
  auto rng = make_rng(opts.seed, {2, k, l});
  const auto est = i_kl_integral(k, l, params, opts.n_samples, rng);
  return {est.value, est.std_error};
}

// ---------------------------------------------------------------------------

void CovarianceMatrix::set(std::size_t k, std::size_t l, double value, double se) {
  if (k < 1 || l < 1 || k > d_ || l > d_) throw InvalidArgument("covariance index outside 1..d");
  theta_[(k - 1) * d_ + (l - 1)] = value;
  stderr_[(k - 1) * d_ + (l - 1)] = se;
}

bool CovarianceMatrix::is_symmetric(double tol) const {
  for (std::size_t k = 1; k <= d_; ++k) {
    for (std::size_t l = k + 1; l <= d_; ++l) {
      if (std::abs((*this)(k, l) - (*this)(l, k)) > tol) return false;
    }
  }
  return true;
}

double CovarianceMatrix::min_eigenvalue(std::size_t order_limit) const {
  const std::size_t n = std::min(d_, order_limit == 0 ? 0 : order_limit - 1);
  if (n == 0) return 0.0;
  Eigen::MatrixXd m(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) m(k, l) = (*this)(k + 1, l + 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

namespace {

// theta_kl = weight * C(r,k-1) C(r,l-1) I_kl / d^{k+l-1}, computed for k <= l and mirrored.
CovarianceMatrix assemble_covariance(const ModelParams& params, double weight, long long r,
                                     const IntegralOptions& opts) {
  const std::size_t d = params.d;
  CovarianceMatrix sigma(d);
  for (std::size_t k = 1; k <= d; ++k) {
    for (std::size_t l = k; l <= d; ++l) {
      const double coef = weight * static_cast<double>(binomial(r, static_cast<long long>(k) - 1)) *
                          static_cast<double>(binomial(r, static_cast<long long>(l) - 1)) /
                          std::pow(static_cast<double>(d), static_cast<double>(k + l - 1));
      if (coef == 0.0) continue;
      const auto ikl = i_kl_value(k, l, params, opts);
      sigma.set(k, l, coef * ikl.value, coef * ikl.std_error);
      sigma.set(l, k, coef * ikl.value, coef * ikl.std_error);
    }
  }
  return sigma;
}

}  // namespace

CovarianceMatrix covariance_limit(const ModelParams& params, const IntegralOptions& opts) {
  validate(params);
  const auto c = interaction_order(params);
  if (!c) throw InvalidArgument("covariance_limit needs an interaction order c >= 2 with nu_c < 0");
  return assemble_covariance(params, static_cast<double>(*c - 1), *c - 2, opts);
}

CovarianceMatrix covariance_limit_poisson(const ModelParams& params, const IntegralOptions& opts) {
  validate(params);
  const auto d = static_cast<long long>(params.d);
  return assemble_covariance(params, static_cast<double>(d), d - 1, opts);
}

double asymptotic_mean(std::size_t j, const ModelParams& params, const IntegralOptions& opts) {
  validate(params);
  check_order_range(j, params);
  const auto c = interaction_order(params);
  if (!c) throw InvalidArgument("asymptotic_mean needs an interaction order c >= 2 with nu_c < 0");
  const auto coef = binomial(*c - 1, static_cast<long long>(j));
  if (coef == 0) return 0.0;
  return i_j_value(j, params, opts).value / std::pow(static_cast<double>(params.d), static_cast<double>(j)) *
         static_cast<double>(coef);
}

double asymptotic_mean_poisson(std::size_t j, const ModelParams& params, const IntegralOptions& opts) {
  validate(params);
  check_order_range(j, params);
  const auto coef = binomial(static_cast<long long>(params.d), static_cast<long long>(j));
  return i_j_value(j, params, opts).value / std::pow(static_cast<double>(params.d), static_cast<double>(j)) *
         static_cast<double>(coef);
}

namespace {

void check_wick_indices(std::span<const std::size_t> indices, const CovarianceMatrix& sigma) {
  for (auto i : indices) {
    if (i < 1 || i > sigma.dim()) throw InvalidArgument("Wick index outside 1..d");
  }
}

}  // namespace

double wick_joint_moment(std::span<const std::size_t> indices, const CovarianceMatrix& sigma) {
  check_wick_indices(indices, sigma);
  if (indices.size() % 2 == 1) return 0.0;
  double total = 0.0;
  for (const auto& pairing : enumerate_pairings(indices.size())) {
    double prod = 1.0;
    for (auto [x, y] : pairing) prod *= sigma(indices[x], indices[y]);
    total += prod;
  }
  return total;
}

Estimate wick_joint_moment_estimate(std::span<const std::size_t> indices, const CovarianceMatrix& sigma) {
  check_wick_indices(indices, sigma);
  if (indices.size() % 2 == 1) return {0.0, 0.0};
  // Gradient with respect to each unordered entry theta_{kl}, k <= l.
  std::map<std::pair<std::size_t, std::size_t>, double> grad;
  double total = 0.0;
  for (const auto& pairing : enumerate_pairings(indices.size())) {
    std::vector<double> vals;
    for (auto [x, y] : pairing) vals.push_back(sigma(indices[x], indices[y]));
    total += std::accumulate(vals.begin(), vals.end(), 1.0, std::multiplies<>());
    for (std::size_t q = 0; q < pairing.size(); ++q) {
      double others = 1.0;
      for (std::size_t r = 0; r < vals.size(); ++r) {
        if (r != q) others *= vals[r];
      }
      auto key = std::minmax(indices[pairing[q].first], indices[pairing[q].second]);
      grad[{key.first, key.second}] += others;
    }
  }
  double var = 0.0;
  for (const auto& [key, g] : grad) {
    const double se = sigma.std_error(key.first, key.second);
    var += g * g * se * se;
  }
  return {total, std::sqrt(var)};
}

}  // namespace facets
