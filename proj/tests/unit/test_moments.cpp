#include <cmath>

#include "doctest.h"
#include "facets/errors.hpp"
#include "facets/moments.hpp"
#include "facets/samplers.hpp"

using namespace facets;

namespace {

ModelParams model(std::size_t d, double a = 1.0, std::optional<int> c = std::nullopt) {
  ModelParams p;
  p.d = d;
  p.a = a;
  p.nu.assign(d, 0.0);
  if (c) {
    p.c = c;
    p.nu[static_cast<std::size_t>(*c) - 1] = -0.5;
  }
  return p;
}

RowPartition singletons(std::vector<std::size_t> rows) {
  RowPartition p{{rows}, {}};
  for (std::size_t e = 0; e < p.shape.total(); ++e) p.blocks.push_back({e});
  return p;
}

MomentOptions small_opts(std::size_t n = 40000) {
  MomentOptions o;
  o.n_samples = n;
  return o;
}

}  // namespace

TEST_CASE("partition integrals") {
  const auto p = model(2);
  const auto single = partition_integral(singletons({1}), p, false);
  CHECK(single.value == doctest::Approx(2.0));
  const RowPartition merged{{{1, 1}}, {{0, 1}}};
  CHECK(partition_integral(merged, p, false).value == doctest::Approx(4.0));
  CHECK(partition_integral(singletons({1, 1}), p, false).value == doctest::Approx(4.0));
  // Two orientations per pair: half the pairs cross, each in one point.
  const auto cross = partition_integral(singletons({2}), p, false, small_opts());
  CHECK(std::abs(cross.value - 0.5) <= 3.0 * cross.std_error);
  // Restricted to e_1 only (c = 2): no pair of distinct orientations exists.
  CHECK(partition_integral(singletons({2}), model(2, 1.0, 2), true).value == 0.0);
}

TEST_CASE("partition integral guards") {
  const auto p = model(3);
  CHECK_THROWS_AS(partition_integral(singletons(std::vector<std::size_t>(14, 1)), p, false), ResourceLimit);
  const RowPartition bad{{{2}}, {{0, 1}}};
  CHECK_THROWS_AS(partition_integral(bad, p, false), InvalidArgument);
  CHECK_THROWS_AS(poisson_mixed_moment({{9}}, p), ResourceLimit);
  CHECK_THROWS_AS(poisson_mixed_moment({{0, 0, 0, 1}}, p), InvalidArgument);
}

TEST_CASE("Poisson mixed moments: exact values") {
  const auto p = model(2, 5.0);
  CHECK(poisson_mixed_moment({{1}}, p).value == doctest::Approx(10.0));
  CHECK(poisson_mixed_moment({{2}}, p).value == doctest::Approx(4 * 25.0 + 4 * 5.0));
  // E[2N n1 n2] = 4 (lam + lam^2) lam, lam = a/2.
  const auto mixed = poisson_mixed_moment({{1, 1}}, p, small_opts(100000));
  CHECK(std::abs(mixed.value - 87.5) <= 3.0 * mixed.std_error);
  const auto g2 = poisson_mixed_moment({{0, 1}}, p, small_opts(100000));
  CHECK(std::abs(g2.value - 6.25) <= 3.0 * g2.std_error);
}

TEST_CASE("Poisson mixed moments match simulation") {
  for (double a : {2.0, 5.0}) {
    const auto p = model(2, a);
    auto rng = make_rng(41, {static_cast<std::uint64_t>(a)});
    std::vector<double> g1, g2;
    for (int s = 0; s < 10000; ++s) {
      const auto cfg = sample_poisson(p, rng);
      const auto g = g_stat_all(cfg, 2, p);
      g1.push_back(g[0]);
      g2.push_back(g[1]);
    }
    auto check = [&](const MomentRequest& req, auto f) {
      double m = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < g1.size(); ++i) {
        const double v = f(g1[i], g2[i]);
        m += v;
        m2 += v * v;
      }
      const double n = static_cast<double>(g1.size());
      m /= n;
      const double se = std::sqrt((m2 / n - m * m) / n);
      const auto e = poisson_mixed_moment(req, p, small_opts(100000));
      CHECK(std::abs(e.value - m) <= 3.0 * std::hypot(se, e.std_error));
    };
    check({{1}}, [](double x, double) { return x; });
    check({{2}}, [](double x, double) { return x * x; });
    check({{1, 1}}, [](double x, double y) { return x * y; });
  }
}

TEST_CASE("leading centred moments") {
  const auto p = model(2, 1.0, 2);
  CHECK(centered_moment_leading({{2}}, p).value == doctest::Approx(2.0));
  CHECK(centered_moment_leading({{4}}, p).value == doctest::Approx(12.0));
  CHECK(centered_moment_leading({{3}}, p).value == 0.0);
  CHECK(centered_moment_leading({{1}}, p).value == 0.0);
  CHECK_THROWS_AS(centered_moment_leading({{0, 1}}, p), InvalidArgument);
  CHECK_THROWS_AS(centered_moment_leading({{2}}, model(2)), InvalidArgument);

  const auto p3 = model(3, 1.0, 3);
  const auto sigma = covariance_limit(p3);
  CHECK(centered_moment_leading({{1, 1}}, p3).value == sigma(1, 2));
  CHECK(centered_moment_leading({{0, 2}}, p3).value == sigma(2, 2));
  CHECK(centered_moment_leading({{2}}, p3).value == sigma(1, 1));
  CHECK(centered_moment_leading({{2, 1}}, p3).value == 0.0);
}

TEST_CASE("restricted assembly: cancellation and leading coefficient") {
  // d = 2, c = 2: G_1 restricted to e_1 is 2 Pois(a/2); E (G-EG)^4 = 12 a^2 + 8 a.
  const auto asm4 = restricted_assembly({{4}}, model(2, 1.0, 2));
  CHECK(asm4.leading().value == doctest::Approx(12.0));
  CHECK(asm4.coefficients.at(1).value == doctest::Approx(8.0));
  CHECK(asm4.max_excess() <= 1e-12 * asm4.term_scale);
  CHECK(asm4.value_at(10.0) == doctest::Approx(12.0 + 0.8));

  const auto p3 = model(3, 1.0, 3);
  const MomentOptions o = small_opts(64000);
  for (const MomentRequest& req : {MomentRequest{{2}}, MomentRequest{{1, 1}}, MomentRequest{{0, 2}},
                                   MomentRequest{{3}}, MomentRequest{{2, 1}}, MomentRequest{{4}},
                                   MomentRequest{{2, 2}}, MomentRequest{{1, 3}}}) {
    CAPTURE(req.m);
    const auto a = restricted_assembly(req, p3, o);
    REQUIRE_FALSE(a.skeleton_sums.empty());
    for (double s : a.skeleton_sums) CHECK(std::abs(s) <= 1e-12 * a.term_scale);
    CHECK(a.max_excess() <= 1e-12 * a.term_scale);
    const auto wick = centered_moment_leading(req, p3);
    const auto lead = a.leading();
    if (req.K() % 2 == 1) {
      CHECK(lead.value == 0.0);
      CHECK(wick.value == 0.0);
    } else {
      CHECK(std::abs(lead.value - wick.value) <= 3.0 * lead.std_error + 1e-9 * std::abs(wick.value));
    }
  }
}

TEST_CASE("retained orientation choice does not matter") {
  const auto p = model(3, 1.0, 3);
  std::vector<double> values;
  std::vector<double> errors;
  for (std::vector<std::size_t> keep : {std::vector<std::size_t>{0, 1}, {1, 2}, {2, 0}}) {
    MomentOptions o = small_opts(64000);
    o.retained = keep;
    const auto lead = restricted_assembly({{1, 1}}, p, o).leading();
    values.push_back(lead.value);
    errors.push_back(lead.std_error);
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    CHECK(std::abs(values[i] - values[0]) <= 3.0 * std::hypot(errors[i], errors[0]) + 1e-12);
  }
  MomentOptions bad;
  bad.retained = {0, 0};
  CHECK_THROWS_AS(MomentEngine(p, bad), InvalidArgument);
}

TEST_CASE("expected G") {
  CHECK(expected_g(2, model(2, 4.0), ExpectedMode::poisson_exact) == doctest::Approx(4.0));
  CHECK(expected_g(1, model(2, 10.0, 2), ExpectedMode::gibbs_limit) == doctest::Approx(10.0));
  CHECK(expected_g(2, model(2, 10.0, 2), ExpectedMode::gibbs_limit) == 0.0);
  auto p = model(2, 3.0);
  p.chi = ChiProfile::product_pwc({{{0.5}, {1.0, 3.0}}, {{}, {1.0}}});
  // Campbell: E G_1 = a (2b)^{d-1} T with T = 2.
  CHECK(expected_g(1, p, ExpectedMode::poisson_exact, small_opts()) == doctest::Approx(12.0));
}

TEST_CASE("moment request bookkeeping") {
  const MomentRequest r{{2, 1}};
  CHECK(r.K() == 3);
  CHECK(r.M() == doctest::Approx(2.5));
  CHECK(r.orders() == std::vector<std::size_t>{1, 1, 2});
  CHECK_THROWS_AS(MomentRequest{{0}}.validate(2), InvalidArgument);
}
