#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "facets/errors.hpp"
#include "facets/ustats.hpp"
#include "oracles.hpp"

using namespace facets;

namespace {

ModelParams params_for(std::size_t d, double b = 1.0) {
  ModelParams p;
  p.d = d;
  p.b = b;
  p.nu.assign(d, 0.0);
  return p;
}

Facet random_facet(std::size_t d, double b, std::mt19937_64& rng, std::size_t max_axis = 0) {
  std::uniform_real_distribution<double> u(0.0, b);
  std::uniform_int_distribution<std::size_t> ax(0, (max_axis ? max_axis : d) - 1);
  Facet f{std::vector<double>(d), ax(rng)};
  for (auto& x : f.center) x = u(rng);
  return f;
}

std::vector<Facet> random_facets(std::size_t n, std::size_t d, double b, std::mt19937_64& rng) {
  std::vector<Facet> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_facet(d, b, rng));
  return out;
}

const std::vector<Facet> kCrossing{{{0.2, 0.7}, 0}, {{0.9, 0.1}, 1}};

}  // namespace

TEST_CASE("empty configuration") {
  const auto p = params_for(3);
  Configuration empty(3);
  for (std::size_t j = 1; j <= 3; ++j) CHECK(g_stat(empty, j, p) == 0.0);
}

TEST_CASE("two crossing segments") {
  const auto p = params_for(2);
  Configuration cfg(2, kCrossing);
  CHECK(g_stat(cfg, 1, p) == doctest::Approx(4.0));
  CHECK(g_stat(cfg, 2, p) == 1.0);
  const auto all = g_stat_all(cfg, 2, p);
  CHECK(all[0] == g_stat(cfg, 1, p));
  CHECK(all[1] == g_stat(cfg, 2, p));
}

TEST_CASE("G_2 counts cross pairs in d=2") {
  const auto p = params_for(2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n1 = 0; n1 <= 4; ++n1) {
    for (std::size_t n2 = 0; n2 <= 4; ++n2) {
      Configuration cfg(2);
      for (std::size_t i = 0; i < n1; ++i) cfg.add({{u(rng), u(rng)}, 0});
      for (std::size_t i = 0; i < n2; ++i) cfg.add({{u(rng), u(rng)}, 1});
      CHECK(g_stat(cfg, 2, p) == static_cast<double>(n1 * n2));
    }
  }
}

TEST_CASE("single orientation has no higher interactions") {
  const auto p = params_for(3);
  std::mt19937_64 rng(5);
  Configuration cfg(3);
  for (int i = 0; i < 7; ++i) cfg.add(random_facet(3, 1.0, rng, 1));
  const auto g = g_stat_all(cfg, 3, p);
  CHECK(g[0] == doctest::Approx(7 * 4.0));
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
}

TEST_CASE("delta_g examples") {
  const auto p = params_for(2);
  Configuration empty(2);
  const Facet u{{0.3, 0.3}, 1};
  CHECK(delta_g(empty, u, 1, p) == doctest::Approx(2.0));
  CHECK(delta_g(empty, u, 2, p) == 0.0);
  Configuration one(2, {kCrossing[0]});
  CHECK(delta_g(one, kCrossing[1], 2, p) == 1.0);
}

TEST_CASE("energy examples") {
  auto p = params_for(2);
  Configuration cfg(2, kCrossing);
  CHECK(energy(cfg, p) == 0.0);
  p.nu = {0.0, -1.0};
  p.c = 2;
  CHECK(energy(cfg, p) == doctest::Approx(-1.0));
  Configuration single(2, {{{0.1, 0.2}, 0}, {{0.5, 0.5}, 0}});
  CHECK(energy(single, p) == 0.0);
  p.nu = {-0.5, -1.0};
  CHECK(energy(cfg, p) == doctest::Approx(-0.5 * 4.0 - 1.0));
  CHECK(interaction_energy(cfg, p) == doctest::Approx(-1.0));
}

TEST_CASE("order out of range") {
  const auto p = params_for(2);
  Configuration cfg(2, kCrossing);
  CHECK_THROWS_AS(g_stat(cfg, 0, p), InvalidArgument);
  CHECK_THROWS_AS(g_stat(cfg, 3, p), InvalidArgument);
  CHECK_THROWS_AS(delta_g(cfg, kCrossing[0], 3, p), InvalidArgument);
}

TEST_CASE("bucket pruning equals naive enumeration") {
  std::mt19937_64 rng(7);
  for (std::size_t d = 2; d <= 4; ++d) {
    const auto p = params_for(d, 0.8);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = 1 + static_cast<std::size_t>(rep) % 12;
      const auto fs = random_facets(n, d, 0.8, rng);
      Configuration cfg(d, fs);
      const auto all = g_stat_all(cfg, d, p);
      for (std::size_t j = 1; j <= d; ++j) {
        const double naive = oracle::naive_g(fs, j, d, 0.8);
        CHECK(all[j - 1] == doctest::Approx(naive).epsilon(1e-12));
        CHECK(g_stat(cfg, j, p) == all[j - 1]);
      }
    }
  }
}

TEST_CASE("incremental consistency") {
  std::mt19937_64 rng(11);
  for (std::size_t d = 2; d <= 4; ++d) {
    const auto p = params_for(d);
    for (int rep = 0; rep < 30; ++rep) {
      Configuration cfg(d, random_facets(static_cast<std::size_t>(rep) % 15, d, 1.0, rng));
      const Facet u = random_facet(d, 1.0, rng);
      Configuration bigger = cfg;
      bigger.add(u);
      const auto before = g_stat_all(cfg, d, p);
      const auto after = g_stat_all(bigger, d, p);
      const auto delta = delta_g_all(cfg, u, d, p);
      for (std::size_t j = 1; j <= d; ++j) {
        CHECK(after[j - 1] - before[j - 1] == doctest::Approx(delta[j - 1]).epsilon(1e-9).scale(1.0));
        CHECK(delta_g(cfg, u, j, p) == delta[j - 1]);
      }
    }
  }
}

TEST_CASE("exclusion treats a member as absent") {
  std::mt19937_64 rng(13);
  const auto p = params_for(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto fs = random_facets(8, 3, 1.0, rng);
    Configuration cfg(3, fs);
    const std::size_t k = static_cast<std::size_t>(rep) % fs.size();
    Configuration without = cfg;
    without.remove(k);
    const Facet u = random_facet(3, 1.0, rng);
    const auto excl = delta_g_all(cfg, u, 3, p, k);
    const auto ref = delta_g_all(without, u, 3, p);
    for (std::size_t j = 0; j < 3; ++j) CHECK(excl[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}

TEST_CASE("zero below the orientation count and order invariance") {
  std::mt19937_64 rng(17);
  const auto p = params_for(4);
  for (int rep = 0; rep < 30; ++rep) {
    auto fs = random_facets(9, 4, 1.0, rng);
    Configuration cfg(4, fs);
    const auto g = g_stat_all(cfg, 4, p);
    for (std::size_t j = cfg.distinct_orientations() + 1; j <= 4; ++j) CHECK(g[j - 1] == 0.0);
    std::shuffle(fs.begin(), fs.end(), rng);
    const auto h = g_stat_all(Configuration(4, fs), 4, p);
    for (std::size_t j = 0; j < 4; ++j) CHECK(h[j] == doctest::Approx(g[j]).epsilon(1e-12));
  }
}

TEST_CASE("buckets stay a partition under edits") {
  std::mt19937_64 rng(19);
  Configuration cfg(3);
  for (int step = 0; step < 500; ++step) {
    if (cfg.empty() || rng() % 3 != 0) {
      cfg.add(random_facet(3, 1.0, rng));
    } else {
      cfg.remove(rng() % cfg.size());
    }
    std::vector<int> seen(cfg.size(), 0);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      for (auto i : cfg.bucket(axis)) {
        REQUIRE(i < cfg.size());
        CHECK(cfg[i].axis == axis);
        ++seen[i];
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }
}
