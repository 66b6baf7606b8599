// facets: command-line front end for sampling, statistics and CLT runs.
#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "facets/asymptotics.hpp"
#include "facets/combinatorics.hpp"
#include "facets/errors.hpp"
#include "facets/harness.hpp"
#include "facets/moments.hpp"
#include "facets/samplers.hpp"
#include "facets/ustats.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace facets;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
};

std::uint64_t seed_of(const Common& o, const json& j) {
  return o.seed.value_or(j.value("master_seed", j.value("seed", std::uint64_t{0})));
}

void emit(const Common& o, const std::string& name, const json& result) {
  std::cout << result.dump(2) << '\n';
  if (o.out) {
    std::filesystem::create_directories(*o.out);
    std::ofstream(std::filesystem::path(*o.out) / (name + ".json"), std::ios::binary) << result.dump(2) << '\n';
  }
}

Facet parse_facet(const json& f, std::size_t d) {
  const auto orientation = f.at("orientation").get<long long>();
  if (orientation < 1 || orientation > static_cast<long long>(d)) {
    throw ValidationError("facet orientation must lie in 1..d");
  }
  return {f.at("center").get<std::vector<double>>(), static_cast<std::size_t>(orientation - 1)};
}

json facet_json(const Facet& f) { return {{"center", f.center}, {"orientation", f.axis + 1}}; }

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"std_error", e.std_error}}; }

IntegralOptions integral_options(const json& j, std::uint64_t seed) {
  IntegralOptions o;
  o.seed = seed;
  if (j.contains("integrals")) {
    const auto& in = j.at("integrals");
    o.n_samples = in.value("n_samples", o.n_samples);
    o.use_closed_form = in.value("use_closed_form", o.use_closed_form);
  }
  return o;
}

int cmd_sample(const Common& o) {
  const auto j = load_json(o.config);
  const auto params = parse_params(j);
  auto sampler = j.contains("sampler") ? parse_sampler(j.at("sampler")) : SamplerOptions{};
  const std::size_t count = j.value("samples", std::size_t{1});
  const auto seed = seed_of(o, j);
  json samples = json::array();
  for (std::size_t s = 0; s < count; ++s) {
    auto rng = make_rng(seed, {s});
    Configuration cfg(params.d);
    json extra = json::object();
    switch (sampler.method) {
      case SamplerMethod::poisson:
        cfg = sample_poisson(params, rng);
        break;
      case SamplerMethod::rejection: {
        auto r = sample_gibbs_rejection(params, sampler, rng);
        cfg = std::move(r.config);
        extra = {{"attempts", r.attempts}, {"acceptance_rate", r.acceptance_rate}};
        break;
      }
      case SamplerMethod::mcmc: {
        auto r = sample_gibbs_mcmc(params, sampler, rng);
        cfg = std::move(r.config);
        extra = {{"acc_birth", r.stats.birth.rate()}, {"acc_death", r.stats.death.rate()},
                 {"acc_move", r.stats.move.rate()}};
        break;
      }
    }
    json facets_out = json::array();
    for (const auto& f : cfg.facets()) facets_out.push_back(facet_json(f));
    samples.push_back({{"N", cfg.size()},
                       {"g", g_stat_all(cfg, params.d, params)},
                       {"occupancy", cfg.orientation_counts()},
                       {"diagnostics", extra},
                       {"facets", facets_out}});
  }
  emit(o, "sample", {{"method", std::string(to_string(sampler.method))}, {"samples", samples}});
  return 0;
}

int cmd_ustat(const Common& o) {
  const auto j = load_json(o.config);
  const auto params = parse_params(j);
  std::vector<Facet> fs;
  for (const auto& f : j.at("facets")) fs.push_back(parse_facet(f, params.d));
  for (const auto& f : fs) check_facet(f, params.d, params.b);
  const Configuration cfg(params.d, fs);
  emit(o, "ustat",
       {{"N", cfg.size()},
        {"g", g_stat_all(cfg, params.d, params)},
        {"energy", energy(cfg, params)},
        {"interaction_energy", interaction_energy(cfg, params)}});
  return 0;
}

int cmd_rho(const Common& o) {
  const auto j = load_json(o.config);
  const auto params = parse_params(j);
  std::vector<Facet> pts;
  for (const auto& f : j.at("points")) pts.push_back(parse_facet(f, params.d));
  const std::size_t n = j.value("samples", std::size_t{100000});
  auto rng = make_rng(seed_of(o, j), {0});
  const auto est = rho_estimate_mc(params, pts, n, rng);

  std::vector<char> seen(params.d, 0);
  for (const auto& p : pts) seen[p.axis] = 1;
  const int k = static_cast<int>(std::count(seen.begin(), seen.end(), 1));
  json out = {{"rho", est.value},
              {"std_error", est.std_error},
              {"log_numerator", est.log_numerator},
              {"log_denominator", est.log_denominator},
              {"effective_sample_size", est.effective_sample_size},
              {"distinct_orientations", k}};
  if (const auto c = interaction_order(params)) {
    out["limit"] = rho_limit(k, *c, static_cast<int>(params.d));
    // The bracket is stated for p points with orientations e_1..e_p.
    bool canonical = static_cast<std::size_t>(k) == pts.size();
    for (std::size_t i = 0; i < pts.size() && canonical; ++i) canonical = seen[i] != 0;
    if (canonical && static_cast<int>(pts.size()) <= *c && params.d <= 4) {
      const auto b = rho_bounds(params, static_cast<int>(pts.size()));
      out["bounds"] = {{"lower", b.lower}, {"upper", b.upper}};
    }
  }
  emit(o, "rho", out);
  return 0;
}

int cmd_asymptotics(const Common& o) {
  const auto j = load_json(o.config);
  const auto params = parse_params(j);
  const auto opts = integral_options(j, seed_of(o, j));
  const std::size_t d = params.d;
  auto matrix = [&](const CovarianceMatrix& s) {
    std::vector<std::vector<double>> m(d, std::vector<double>(d));
    for (std::size_t k = 1; k <= d; ++k) {
      for (std::size_t l = 1; l <= d; ++l) m[k - 1][l - 1] = s(k, l);
    }
    return json(m);
  };
  json out;
  json ij = json::array();
  json mean_p = json::array();
  for (std::size_t k = 1; k <= d; ++k) {
    ij.push_back(estimate_json(i_j_value(k, params, opts)));
    mean_p.push_back(asymptotic_mean_poisson(k, params, opts));
  }
  out["I_j"] = ij;
  out["asymptotic_mean_poisson"] = mean_p;
  out["sigma_poisson"] = matrix(covariance_limit_poisson(params, opts));
  if (const auto c = interaction_order(params)) {
    out["c"] = *c;
    const auto sigma = covariance_limit(params, opts);
    out["sigma"] = matrix(sigma);
    out["sigma_min_eigenvalue"] = sigma.min_eigenvalue(static_cast<std::size_t>(*c));
    json mean = json::array();
    for (std::size_t k = 1; k <= d; ++k) mean.push_back(asymptotic_mean(k, params, opts));
    out["asymptotic_mean"] = mean;
  }
  if (j.contains("series")) {
    const auto& s = j.at("series");
    SeriesRequest req;
    req.a = s.value("a", req.a);
    req.nu = s.value("nu", req.nu);
    req.c = s.value("c", req.c);
    req.p = s.value("p", req.p);
    req.d = s.value("d", req.d);
    req.tail_tolerance = s.value("tail_tolerance", req.tail_tolerance);
    if (s.contains("t")) req.t = s.at("t").get<int>();
    const auto v = i_series(req);
    out["series"] = {{"value", v.value},
                     {"tail_bound", v.tail_bound},
                     {"cap", v.cap},
                     {"limit", i_series_limit(req.c, req.p, req.d)}};
  }
  emit(o, "asymptotics", out);
  return 0;
}

int cmd_partitions(const Common& o) {
  const auto j = load_json(o.config);
  const RowShape shape{j.at("rows").get<std::vector<std::size_t>>()};
  const bool list = j.value("list", false);
  std::size_t count = 0, without_singleton_rows = 0;
  json parts = json::array();
  for_each_row_partition(shape, [&](const RowPartition& p) {
    ++count;
    if (singleton_row_count(p) == 0) ++without_singleton_rows;
    if (list) parts.push_back(p.blocks);
  });
  json out = {{"rows", shape.rows}, {"count", count}, {"without_singleton_rows", without_singleton_rows}};
  if (list) out["partitions"] = parts;
  if (shape.rows.size() <= kMaxPairingRows) out["pairings"] = enumerate_pairings(shape.rows.size()).size();
  emit(o, "partitions", out);
  return 0;
}

int cmd_moments(const Common& o) {
  const auto j = load_json(o.config);
  const auto params = parse_params(j);
  const MomentRequest req{j.at("m").get<std::vector<std::size_t>>()};
  MomentOptions mo;
  mo.seed = seed_of(o, j);
  mo.n_samples = j.value("samples", mo.n_samples);
  if (j.contains("retained")) {
    for (auto l : j.at("retained").get<std::vector<std::size_t>>()) {
      if (l < 1) throw ValidationError("retained orientations are 1-based");
      mo.retained.push_back(l - 1);
    }
  }
  const auto mode = j.value("mode", std::string("poisson"));
  json out = {{"m", req.m}, {"K", req.K()}, {"M", req.M()}, {"mode", mode}};
  if (mode == "poisson") {
    out["moment"] = estimate_json(poisson_mixed_moment(req, params, mo));
  } else if (mode == "centered") {
    out["moment"] = estimate_json(centered_moment_leading(req, params, integral_options(j, mo.seed)));
  } else if (mode == "assembly") {
    const auto asmb = restricted_assembly(req, params, mo);
    json coef = json::object();
    for (const auto& [p, e] : asmb.coefficients) coef[std::to_string(p)] = estimate_json(e);
    double worst = 0.0;
    for (double s : asmb.skeleton_sums) worst = std::max(worst, std::abs(s));
    out["coefficients"] = coef;
    out["leading"] = estimate_json(asmb.leading());
    out["max_excess"] = asmb.max_excess();
    out["max_skeleton_sum"] = worst;
    out["term_scale"] = asmb.term_scale;
    out["wick"] = estimate_json(centered_moment_leading(req, params, integral_options(j, mo.seed)));
  } else {
    throw ValidationError("moments mode must be poisson, centered or assembly");
  }
  emit(o, "moments", out);
  return 0;
}

int cmd_verify_clt(const Common& o) {
  const auto j = load_json(o.config);
  auto cfg = parse_config(j);
  if (cfg.replicates < 100) throw ValidationError("verify-clt needs at least 100 replicates");
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.out) cfg.output_dir = *o.out;
  const auto rep = run_experiment(cfg, true);
  json brief = {{"output_dir", cfg.output_dir}, {"checks", rep.summary.at("checks")},
                {"degeneration", rep.summary.at("degeneration")}};
  std::cout << brief.dump(2) << '\n';
  return 0;
}

int exit_code_for(const std::exception& e) {
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    return exit_code_for(inner);
  }
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const InvalidArgument*>(&e)) return 2;
  if (dynamic_cast<const AcceptanceStarvation*>(&e)) return 3;
  return 1;
}

void print_chain(const std::exception& e, int depth = 0) {
  std::cerr << (depth ? "  caused by: " : "error: ") << e.what() << '\n';
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_chain(inner, depth + 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbsian facet processes: sampling, U-statistics, asymptotics and CLT checks"};
  app.require_subcommand(1);
  Common opts;
  int (*handler)(const Common&) = nullptr;

  auto add = [&](const std::string& name, const std::string& help, int (*fn)(const Common&)) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON config file")->required();
    sub->add_option("--seed", opts.seed, "master seed (overrides the config)");
    sub->add_option("--threads", opts.threads, "worker threads");
    sub->add_option("--out", opts.out, "output directory");
    sub->callback([&handler, fn] { handler = fn; });
  };
  add("sample", "draw facet configurations", cmd_sample);
  add("ustat", "evaluate G_1..G_d of a listed configuration", cmd_ustat);
  add("rho", "estimate a correlation function", cmd_rho);
  add("asymptotics", "limit covariance, means, integrals and series", cmd_asymptotics);
  add("partitions", "count row-constrained partitions", cmd_partitions);
  add("moments", "mixed and centred moments via partitions", cmd_moments);
  add("verify-clt", "replicate experiment over an a-grid", cmd_verify_clt);

  CLI11_PARSE(app, argc, argv);
  try {
    return handler(opts);
  } catch (const std::exception& e) {
    print_chain(e);
    return exit_code_for(e);
  }
}
