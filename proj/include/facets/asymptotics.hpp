#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "facets/geometry.hpp"
#include "facets/model.hpp"
#include "facets/random.hpp"

namespace facets {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Exact binomial coefficient C(n, k); 0 when k > n or k < 0.
std::uint64_t binomial(long long n, long long k);
/// Exact n! for n <= 20.
std::uint64_t factorial(unsigned n);

// ---------------------------------------------------------------------------
// Correlation functions

/// Limit of the correlation function rho_p as a -> infinity when the p
/// points carry k distinct orientations:
///   ((d-k)!/(c-1-k)!) / (d!/(c-1)!)  for k <= c-1, and 0 for k >= c.
double rho_limit(int k, int c, int d);

struct RhoEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double log_numerator = 0.0;    // log E exp(E(eta ∪ points))
  double log_denominator = 0.0;  // log E exp(E(eta))
  double effective_sample_size = 0.0;
};

/// Monte Carlo estimate of rho_p(points) = E exp(E(eta ∪ x)) / E exp(E(eta)),
/// E = sum_{i>=2} nu_i G_i, with common Poisson draws in numerator and
/// denominator and a delta-method standard error. Throws DegenerateEstimate
/// when the denominator weights collapse (effective sample size < 2).
RhoEstimate rho_estimate_mc(const ModelParams& params, std::span<const Facet> points, std::size_t n_samples,
                            Rng& rng);

// ---------------------------------------------------------------------------
// Intersection counts and the multinomial series

/// R^{c,p}(q, d, n) = sum over F ⊂ [d] with c-p <= |F| <= c and
/// |F ∪ [q]| + p - q >= c of prod_{j in F} n_j.
std::uint64_t r_count(int c, int p, int q, int d, std::span<const std::uint64_t> n);

struct SeriesRequest {
  double a = 1.0;
  double nu = -1.0;
  int c = 2;
  int p = 0;
  int d = 2;
  double tail_tolerance = 1e-12;
  std::optional<int> t;  // q argument of R; defaults to p

  void validate() const;
};

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;   // certified upper bound on the discarded mass
  std::size_t cap = 0;       // each n_i ranges over 0..cap-1
};

/// I(a,c,t,d) = sum_{n in N^d} a^{|n|}/prod n_i! * exp(nu R^{c,p}(t,d,n) - a(c-1)),
/// truncated at a per-variable cap certified by a Poisson Chernoff tail bound.
/// Throws ResourceLimit for d > 4 or when cap^d exceeds the evaluation budget.
SeriesValue i_series(const SeriesRequest& req);

/// a -> infinity limit of i_series: C(d-p, c-1-p) (0 for p >= c).
double i_series_limit(int c, int p, int d);

struct RhoBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Diagnostic bracket for rho_p when the p points have distinct orientations
/// e_1..e_p, from the intersection-volume bounds b^{d-c} <= H^{d-c} <= (2b)^{d-c}
/// evaluated through the series machinery. Requires a submodel.
RhoBounds rho_bounds(const ModelParams& params, int p, double tail_tolerance = 1e-12);

// ---------------------------------------------------------------------------
// Integrals

struct IntegralOptions {
  std::size_t n_samples = 1'000'000;
  std::uint64_t seed = 0x5eed;
  bool use_closed_form = true;  // for constant chi
};

struct IntegralEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::optional<double> closed_form;  // present for constant chi
};

/// I_j: integral of H^{d-j} over j centres with orientations e_1..e_j, chi-weighted.
IntegralEstimate i_j_integral(std::size_t j, const ModelParams& params, std::size_t n_samples, Rng& rng);
/// I_kl: first factor uses (s_1,e_1)..(s_k,e_k); second uses (s_1,e_1),
/// (s_{k+1},e_2)..(s_{k+l-1},e_l).
IntegralEstimate i_kl_integral(std::size_t k, std::size_t l, const ModelParams& params, std::size_t n_samples,
                               Rng& rng);

/// Exact values for constant chi (coordinatewise factorisation); empty otherwise.
std::optional<double> i_j_closed_form(std::size_t j, const ModelParams& params);
std::optional<double> i_kl_closed_form(std::size_t k, std::size_t l, const ModelParams& params);

/// Closed form when available and requested, Monte Carlo otherwise.
Estimate i_j_value(std::size_t j, const ModelParams& params, const IntegralOptions& opts = {});
Estimate i_kl_value(std::size_t k, std::size_t l, const ModelParams& params, const IntegralOptions& opts = {});

// ---------------------------------------------------------------------------
// Limit covariance, means, Wick moments

/// Asymptotic covariance Sigma = {theta_kl}, indexed by statistic order 1..d.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(std::size_t d = 0) : d_(d), theta_(d * d, 0.0), stderr_(d * d, 0.0) {}

  std::size_t dim() const noexcept { return d_; }
  double operator()(std::size_t k, std::size_t l) const { return theta_[(k - 1) * d_ + (l - 1)]; }
  double std_error(std::size_t k, std::size_t l) const { return stderr_[(k - 1) * d_ + (l - 1)]; }
  void set(std::size_t k, std::size_t l, double value, double se = 0.0);

  /// |theta_kl - theta_lk| <= tol for all pairs.
  bool is_symmetric(double tol = 0.0) const;
  /// Smallest eigenvalue of the block of orders < order_limit (the whole matrix when order_limit > d).
  double min_eigenvalue(std::size_t order_limit) const;

 private:
  std::size_t d_;
  std::vector<double> theta_;
  std::vector<double> stderr_;
};

/// theta_kl = (c-1)/d^{k+l-1} C(c-2,k-1) C(c-2,l-1) I_kl, zero for k >= c or l >= c.
/// c is interaction_order(params); throws InvalidArgument for a Poisson model.
CovarianceMatrix covariance_limit(const ModelParams& params, const IntegralOptions& opts = {});
/// Reference Poisson process: theta_kl = d/d^{k+l-1} C(d-1,k-1) C(d-1,l-1) I_kl.
CovarianceMatrix covariance_limit_poisson(const ModelParams& params, const IntegralOptions& opts = {});

/// lim G_j/a^j = I_j/d^j C(c-1, j) (0 for j >= c). Requires an interaction order.
double asymptotic_mean(std::size_t j, const ModelParams& params, const IntegralOptions& opts = {});
/// E G_j(eta_a)/a^j = I_j C(d, j)/d^j, exact for every a.
double asymptotic_mean_poisson(std::size_t j, const ModelParams& params, const IntegralOptions& opts = {});

/// Sum over perfect matchings of the index list of prod theta[pair]; 0 for odd length.
/// Indices are statistic orders (1-based).
double wick_joint_moment(std::span<const std::size_t> indices, const CovarianceMatrix& sigma);
/// Wick moment with first-order error propagation from the theta standard errors.
Estimate wick_joint_moment_estimate(std::span<const std::size_t> indices, const CovarianceMatrix& sigma);

}  // namespace facets
