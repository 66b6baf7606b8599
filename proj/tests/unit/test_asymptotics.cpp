#include <cmath>
#include <set>

#include "doctest.h"
#include "facets/asymptotics.hpp"
#include "facets/errors.hpp"
#include "facets/ustats.hpp"

using namespace facets;

namespace {

ModelParams model(std::size_t d, double b = 1.0, std::optional<int> c = std::nullopt, double nu_c = -1.0) {
  ModelParams p;
  p.d = d;
  p.b = b;
  p.nu.assign(d, 0.0);
  if (c) {
    p.c = c;
    p.nu[static_cast<std::size_t>(*c) - 1] = nu_c;
  }
  return p;
}

// Direct reading of the R^{c,p} definition over subsets of [d].
std::uint64_t r_count_reference(int c, int p, int q, int d, const std::vector<std::uint64_t>& n) {
  std::uint64_t total = 0;
  for (int f = 0; f < (1 << d); ++f) {
    std::set<int> F, U;
    for (int j = 0; j < d; ++j) {
      if (f >> j & 1) F.insert(j);
    }
    U = F;
    for (int j = 0; j < q; ++j) U.insert(j);
    const int size = static_cast<int>(F.size());
    if (size < c - p || size > c || static_cast<int>(U.size()) + p - q < c) continue;
    std::uint64_t prod = 1;
    for (int j : F) prod *= n[static_cast<std::size_t>(j)];
    total += prod;
  }
  return total;
}

}  // namespace

TEST_CASE("exact integer helpers") {
  CHECK(binomial(5, 2) == 10);
  CHECK(binomial(3, 5) == 0);
  CHECK(binomial(4, -1) == 0);
  CHECK(binomial(20, 10) == 184756);
  CHECK(factorial(0) == 1);
  CHECK(factorial(20) == 2432902008176640000ULL);
  CHECK_THROWS_AS(factorial(21), InvalidArgument);
}

TEST_CASE("rho limits") {
  CHECK(rho_limit(0, 2, 2) == 1.0);
  CHECK(rho_limit(1, 2, 3) == doctest::Approx(1.0 / 3.0));
  CHECK(rho_limit(2, 2, 3) == 0.0);
  CHECK(rho_limit(1, 2, 2) == 0.5);
  CHECK(rho_limit(2, 3, 4) == doctest::Approx((2.0 / 1.0) / (24.0 / 2.0)));
  for (int d = 2; d <= 6; ++d) {
    for (int c = 2; c <= d; ++c) {
      CHECK(rho_limit(0, c, d) == 1.0);
      for (int k = 1; k <= d; ++k) CHECK(rho_limit(k, c, d) <= rho_limit(k - 1, c, d));
    }
  }
  CHECK_THROWS_AS(rho_limit(0, 1, 2), InvalidArgument);
  CHECK_THROWS_AS(rho_limit(3, 2, 2), InvalidArgument);
}

TEST_CASE("R counts") {
  const std::vector<std::uint64_t> n{3, 4};
  CHECK(r_count(2, 0, 0, 2, n) == 12);
  CHECK(r_count(2, 1, 1, 2, n) == 16);
  const std::vector<std::uint64_t> zero(3, 0);
  CHECK(r_count(3, 1, 1, 3, zero) == 0);
  CHECK(r_count(2, 1, 0, 3, zero) == 0);
  CHECK_THROWS_AS(r_count(2, 0, 1, 2, n), InvalidArgument);
}

TEST_CASE("R counts match the subset definition and intersection counting") {
  for (int d = 1; d <= 4; ++d) {
    std::vector<std::uint64_t> n(static_cast<std::size_t>(d), 0);
    for (int code = 0; code < static_cast<int>(std::pow(6, d)); ++code) {
      int x = code;
      for (auto& v : n) {
        v = static_cast<std::uint64_t>(x % 6);
        x /= 6;
      }
      for (int c = 2; c <= std::max(d, 2); ++c) {
        for (int p = 0; p <= c; ++p) {
          for (int q = 0; q <= std::min(p, d); ++q) CHECK(r_count(c, p, q, d, n) == r_count_reference(c, p, q, d, n));
        }
      }
      if (d < 2) continue;
      // p = 0: distinct-orientation c-subsets. p = 1: the same with one extra e_1 facet.
      for (int c = 2; c <= d; ++c) {
        auto count_subsets = [&](std::vector<std::uint64_t> m) {
          std::uint64_t total = 0;
          for (int f = 0; f < (1 << d); ++f) {
            if (std::popcount(static_cast<unsigned>(f)) != c) continue;
            std::uint64_t prod = 1;
            for (int j = 0; j < d; ++j) {
              if (f >> j & 1) prod *= m[static_cast<std::size_t>(j)];
            }
            total += prod;
          }
          return total;
        };
        CHECK(r_count(c, 0, 0, d, n) == count_subsets(n));
        auto plus = n;
        ++plus[0];
        CHECK(r_count(c, 1, 1, d, n) == count_subsets(plus));
      }
    }
  }
}

TEST_CASE("series values") {
  SeriesRequest r;
  r.a = 30.0;
  const auto v = i_series(r);
  CHECK(v.value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(v.tail_bound < 1e-12);

  SeriesRequest one{25.0, -1.0, 2, 1, 1};
  CHECK(i_series(one).value == doctest::Approx(1.0).epsilon(1e-9));

  SeriesRequest zero{0.0, -1.0, 3, 1, 3};
  CHECK(i_series(zero).value == 1.0);
  CHECK(i_series(zero).tail_bound == 0.0);

  // Frozen oracle values from an independent high-precision summation.
  CHECK(i_series({5.0, -1.0, 2, 0, 2}).value == doctest::Approx(2.31800135889131).epsilon(1e-11));
  CHECK(i_series({5.0, -1.0, 2, 1, 2}).value == doctest::Approx(1.11461450996687).epsilon(1e-11));
  CHECK(i_series({5.0, -1.0, 3, 1, 3}).value == doctest::Approx(1.99857315620757).epsilon(1e-11));
  CHECK(i_series({3.0, -0.5, 2, 0, 3}).value == doctest::Approx(8.90146062291063).epsilon(1e-11));
}

TEST_CASE("series approaches the binomial limit") {
  for (int d = 2; d <= 3; ++d) {
    for (int c = 2; c <= d; ++c) {
      for (int p = 0; p < c; ++p) {
        SeriesRequest r{40.0, -1.0, c, p, d};
        const auto v = i_series(r);
        const double lim = i_series_limit(c, p, d);
        CHECK(std::abs(v.value - lim) <= 1e-5 + v.tail_bound);
      }
    }
  }
  CHECK(i_series_limit(2, 0, 3) == 3.0);
  CHECK(i_series_limit(3, 3, 3) == 0.0);
}

TEST_CASE("series guards") {
  CHECK_THROWS_AS(i_series({5.0, -1.0, 2, 0, 5}), ResourceLimit);
  CHECK_THROWS_AS(i_series({5.0, 1.0, 2, 0, 2}), InvalidArgument);
  CHECK_THROWS_AS(i_series({5.0, -1.0, 2, 3, 2}), InvalidArgument);
  CHECK_THROWS_AS(i_series({500.0, -1.0, 2, 0, 4}), ResourceLimit);
}

TEST_CASE("closed-form integrals") {
  CHECK(*i_j_closed_form(1, model(2)) == doctest::Approx(2.0));
  CHECK(*i_j_closed_form(2, model(2)) == doctest::Approx(1.0));
  CHECK(*i_j_closed_form(1, model(3)) == doctest::Approx(4.0));
  CHECK(*i_kl_closed_form(1, 1, model(2)) == doctest::Approx(4.0));
  CHECK(*i_kl_closed_form(1, 2, model(2)) == doctest::Approx(2.0));
  CHECK(*i_kl_closed_form(2, 2, model(3)) == doctest::Approx(167.0 / 60.0));
  CHECK(*i_kl_closed_form(2, 3, model(4)) == doctest::Approx(451.0 / 108.0));
  for (std::size_t d = 2; d <= 4; ++d) {
    const double b = 0.7;
    CHECK(*i_kl_closed_form(d, d, model(d, b)) ==
          doctest::Approx(std::pow(b, static_cast<double>(d * (2 * d - 1)))));
    CHECK(*i_kl_closed_form(1, 1, model(d, b)) ==
          doctest::Approx(std::pow(2 * b, 2.0 * static_cast<double>(d - 1)) * std::pow(b, static_cast<double>(d))));
  }
  auto p = model(2);
  p.chi = ChiProfile::constant(2.5);
  CHECK(*i_j_closed_form(2, p) == doctest::Approx(2.5 * 2.5));
  p.chi = ChiProfile::product_pwc({{{0.5}, {1.0, 2.0}}, {{}, {1.0}}});
  CHECK_FALSE(i_j_closed_form(1, p).has_value());
}

TEST_CASE("Monte Carlo integrals agree with closed forms") {
  auto rng = make_rng(7);
  for (std::size_t d = 2; d <= 3; ++d) {
    const auto p = model(d, 0.8);
    for (std::size_t j = 1; j <= d; ++j) {
      const auto e = i_j_integral(j, p, 200000, rng);
      REQUIRE(e.closed_form);
      CHECK(std::abs(e.value - *e.closed_form) <= 3.0 * e.std_error + 1e-12);
    }
    for (std::size_t k = 1; k <= d; ++k) {
      for (std::size_t l = 1; l <= d; ++l) {
        const auto e = i_kl_integral(k, l, p, 200000, rng);
        CHECK(std::abs(e.value - *e.closed_form) <= 3.0 * e.std_error + 1e-12);
      }
    }
  }
  const auto p3 = model(3);
  const auto a = i_kl_integral(1, 2, p3, 200000, rng);
  const auto b = i_kl_integral(2, 1, p3, 200000, rng);
  CHECK(std::abs(a.value - b.value) <= 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("covariance matrices") {
  const auto gibbs = covariance_limit(model(2, 1.0, 2));
  CHECK(gibbs(1, 1) == doctest::Approx(2.0));
  CHECK(gibbs(1, 2) == 0.0);
  CHECK(gibbs(2, 2) == 0.0);
  const auto pois = covariance_limit_poisson(model(2));
  CHECK(pois(1, 1) == doctest::Approx(4.0));
  CHECK(pois(1, 2) == doctest::Approx(1.0));
  CHECK(pois(2, 1) == doctest::Approx(1.0));
  CHECK(pois(2, 2) == doctest::Approx(0.25));
  CHECK_THROWS_AS(covariance_limit(model(2)), InvalidArgument);

  for (std::size_t d = 2; d <= 4; ++d) {
    for (int c = 2; c <= static_cast<int>(d); ++c) {
      const auto s = covariance_limit(model(d, 0.9, c));
      CHECK(s.is_symmetric(1e-12));
      for (std::size_t k = 1; k <= d; ++k) {
        for (std::size_t l = 1; l <= d; ++l) {
          if (static_cast<int>(k) >= c || static_cast<int>(l) >= c) CHECK(s(k, l) == 0.0);
        }
      }
      CHECK(s.min_eigenvalue(static_cast<std::size_t>(c)) >= -1e-8);
    }
    CHECK(covariance_limit_poisson(model(d)).min_eigenvalue(d + 1) >= -1e-8);
  }
}

TEST_CASE("estimated covariance is symmetric within error") {
  IntegralOptions o;
  o.use_closed_form = false;
  o.n_samples = 100000;
  const auto s = covariance_limit(model(3, 1.0, 3), o);
  const auto exact = covariance_limit(model(3, 1.0, 3));
  CHECK(s.std_error(1, 2) > 0.0);
  CHECK(std::abs(s(1, 2) - s(2, 1)) <= 3.0 * std::hypot(s.std_error(1, 2), s.std_error(2, 1)));
  for (std::size_t k = 1; k <= 2; ++k) {
    for (std::size_t l = 1; l <= 2; ++l) CHECK(std::abs(s(k, l) - exact(k, l)) <= 3.0 * s.std_error(k, l) + 1e-12);
  }
}

TEST_CASE("asymptotic means") {
  CHECK(asymptotic_mean(1, model(2, 1.0, 2)) == doctest::Approx(1.0));
  CHECK(asymptotic_mean(2, model(2, 1.0, 2)) == 0.0);
  CHECK(asymptotic_mean(3, model(3, 1.0, 2)) == 0.0);
  CHECK(asymptotic_mean_poisson(2, model(2)) == doctest::Approx(0.25));
  CHECK(asymptotic_mean_poisson(1, model(2)) == doctest::Approx(2.0));
}

TEST_CASE("Wick moments") {
  const auto s = covariance_limit_poisson(model(2));
  const std::vector<std::size_t> two{1, 1}, four{1, 1, 1, 1}, three{1, 1, 1}, mixed{1, 2, 1, 2};
  CHECK(wick_joint_moment(two, s) == doctest::Approx(4.0));
  CHECK(wick_joint_moment(four, s) == doctest::Approx(3.0 * 16.0));
  CHECK(wick_joint_moment(three, s) == 0.0);
  // theta_11 theta_22 + 2 theta_12^2
  CHECK(wick_joint_moment(mixed, s) == doctest::Approx(4.0 * 0.25 + 2.0 * 1.0));

  CovarianceMatrix noisy(2);
  noisy.set(1, 1, 2.0, 0.1);
  const auto e = wick_joint_moment_estimate(four, noisy);
  CHECK(e.value == doctest::Approx(12.0));
  CHECK(e.std_error == doctest::Approx(6.0 * 2.0 * 0.1));  // d(3 t^2)/dt = 6t
}

TEST_CASE("correlation function estimate") {
  auto p = model(2, 1.0);
  p.a = 4.0;
  const std::vector<Facet> pt{{{0.5, 0.5}, 0}};
  auto rng = make_rng(11);
  const auto flat = rho_estimate_mc(p, pt, 1000, rng);
  CHECK(flat.value == 1.0);
  CHECK(flat.std_error == 0.0);

  p.c = 2;
  p.nu = {0.0, -0.2};
  const auto est = rho_estimate_mc(p, pt, 100000, rng);
  // Exact value from the d = 2 series ratio.
  CHECK(std::abs(est.value - 0.760582138442) <= 3.0 * est.std_error);
  const auto br = rho_bounds(p, 1);
  CHECK(br.lower == doctest::Approx(0.760582138442).epsilon(1e-9));
  CHECK(br.upper == doctest::Approx(0.760582138442).epsilon(1e-9));

  auto p3 = model(3, 1.0, 2, -0.3);
  p3.a = 3.0;
  const auto b3 = rho_bounds(p3, 1);
  CHECK(b3.lower <= b3.upper);
  const std::vector<Facet> pt3{{{0.5, 0.5, 0.5}, 0}};
  const auto e3 = rho_estimate_mc(p3, pt3, 50000, rng);
  CHECK(e3.value >= b3.lower - 3.0 * e3.std_error);
  CHECK(e3.value <= b3.upper + 3.0 * e3.std_error);
}

TEST_CASE("degenerate weights are reported") {
  auto p = model(2, 1.0, 2, -50.0);
  p.a = 200.0;
  const std::vector<Facet> pt{{{0.5, 0.5}, 0}};
  auto rng = make_rng(13);
  CHECK_THROWS_AS(rho_estimate_mc(p, pt, 5, rng), DegenerateEstimate);
}
