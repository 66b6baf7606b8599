#include "facets/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <numbers>
#include <sstream>
#include <thread>

#include "facets/errors.hpp"
#include "facets/moments.hpp"

namespace facets {

using nlohmann::json;

double standardize(double g, std::size_t j, double a, double mean_estimate) {
  if (!(a >= 1.0)) throw InvalidArgument("standardize needs a >= 1");
  if (j < 1) throw InvalidArgument("standardize needs j >= 1");
  return (g - mean_estimate) / std::pow(a, static_cast<double>(j) - 0.5);
}

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (x < 1.18) {
    // Jacobi-transformed series; fast for small x.
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double t = std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * pi * pi / (8.0 * x * x));
      cdf += t;
      if (t < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = std::exp(-2.0 * k * k * x * x);
    q += (k % 2 == 1 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

namespace {

double ks_p(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  return kolmogorov_survival((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

KsResult ks_normality(std::span<const double> samples, double variance) {
  if (!(variance > 0.0)) throw InvalidArgument("ks_normality needs a positive variance");
  if (samples.size() < 100) throw InvalidArgument("ks_normality needs at least 100 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double scale = std::sqrt(2.0 * variance);
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 0.5 * std::erfc(-x[i] / scale);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, ks_p(d, n), x.size()};
}

KsResult ks_two_sample(std::span<const double> x_in, std::span<const double> y_in) {
  if (x_in.empty() || y_in.empty()) throw InvalidArgument("ks_two_sample needs non-empty samples");
  std::vector<double> x(x_in.begin(), x_in.end()), y(y_in.begin(), y_in.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, k = 0;
  double d = 0.0;
  while (i < x.size() && k < y.size()) {
    const double v = std::min(x[i], y[k]);
    while (i < x.size() && x[i] == v) ++i;
    while (k < y.size() && y[k] == v) ++k;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(k) / m));
  }
  return {d, ks_p(d, n * m / (n + m)), x.size() + y.size()};
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2) {
    throw InvalidArgument("chi_square_gof needs matching count vectors with at least two cells");
  }
  ChiSquareResult out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw InvalidArgument("chi_square_gof needs positive expected counts");
    out.statistic += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  out.dof = static_cast<double>(observed.size() - 1);
  out.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.dof), out.statistic));
  return out;
}

// ---------------------------------------------------------------------------

ModelParams parse_params(const json& j) {
  try {
    ModelParams p;
    p.d = j.value("d", std::size_t{2});
    p.b = j.value("b", 1.0);
    if (j.contains("a")) {
      p.a = j.at("a").get<double>();
    } else if (j.contains("a_grid") && j.at("a_grid").is_array() && !j.at("a_grid").empty()) {
      p.a = j.at("a_grid").front().get<double>();
    }
    p.nu = j.contains("nu") ? j.at("nu").get<std::vector<double>>() : std::vector<double>(p.d, 0.0);
    if (j.contains("c") && !j.at("c").is_null()) p.c = j.at("c").get<int>();
    if (j.contains("chi")) {
      const auto& chi = j.at("chi");
      const auto type = chi.value("type", std::string("constant"));
      if (type == "constant") {
        p.chi = ChiProfile::constant(chi.value("value", 1.0));
      } else if (type == "product_pwc") {
        std::vector<ChiProfile::Axis> axes;
        for (const auto& ax : chi.at("axes")) {
          axes.push_back({ax.value("breakpoints", std::vector<double>{}), ax.at("values").get<std::vector<double>>()});
        }
        p.chi = ChiProfile::product_pwc(std::move(axes));
      } else {
        throw ValidationError("unknown chi type \"" + type + "\"");
      }
    }
    validate(p);
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model config: ") + e.what());
  }
}

SamplerOptions parse_sampler(const json& j) {
  try {
    SamplerOptions s;
    if (j.contains("method")) s.method = parse_sampler_method(j.at("method").get<std::string>());
    s.max_attempts = j.value("max_attempts", s.max_attempts);
    if (j.contains("burn_in") && !j.at("burn_in").is_null()) s.burn_in = j.at("burn_in").get<std::size_t>();
    if (j.contains("sweeps") && !j.at("sweeps").is_null()) s.sweeps = j.at("sweeps").get<std::size_t>();
    if (j.contains("proposal_probs")) {
      const auto& pp = j.at("proposal_probs");
      if (pp.is_array()) {
        const auto v = pp.get<std::vector<double>>();
        if (v.size() != 3) throw ValidationError("proposal_probs needs three entries (birth, death, move)");
        s.proposal_probs = {v[0], v[1], v[2]};
      } else {
        s.proposal_probs = {pp.value("birth", 1.0 / 3.0), pp.value("death", 1.0 / 3.0), pp.value("move", 1.0 / 3.0)};
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed sampler config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.params = parse_params(j);
  try {
    if (j.contains("a_grid")) {
      cfg.a_grid = j.at("a_grid").get<std::vector<double>>();
    } else {
      cfg.a_grid = {cfg.params.a};
    }
    cfg.replicates = j.value("replicates", cfg.replicates);
    if (j.contains("sampler")) cfg.sampler = parse_sampler(j.at("sampler"));
    if (j.contains("tests")) {
      const auto& t = j.at("tests");
      cfg.tests.ks_level = t.value("ks_level", cfg.tests.ks_level);
      if (t.contains("moment_tolerances")) {
        const auto& m = t.at("moment_tolerances");
        cfg.tests.variance_tolerance = m.value("variance", cfg.tests.variance_tolerance);
        cfg.tests.fourth_moment_tolerance = m.value("fourth_moment", cfg.tests.fourth_moment_tolerance);
      }
      cfg.tests.degeneration_ratio = t.value("degeneration_ratio", cfg.tests.degeneration_ratio);
    }
    const auto mode = j.value("mean_mode", std::string("empirical"));
    if (mode == "empirical") {
      cfg.mean_mode = MeanMode::empirical;
    } else if (mode == "asymptotic") {
      cfg.mean_mode = MeanMode::asymptotic;
    } else {
      throw ValidationError("mean_mode must be \"empirical\" or \"asymptotic\"");
    }
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("integrals")) {
      const auto& in = j.at("integrals");
      cfg.integrals.n_samples = in.value("n_samples", cfg.integrals.n_samples);
      cfg.integrals.seed = in.value("seed", cfg.integrals.seed);
      cfg.integrals.use_closed_form = in.value("use_closed_form", cfg.integrals.use_closed_form);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

void ExperimentConfig::validate() const {
  if (a_grid.empty()) throw ValidationError("a_grid must not be empty");
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    if (i > 0 && !(a_grid[i] > a_grid[i - 1])) throw ValidationError("a_grid must be strictly ascending");
    ModelParams p = params;
    p.a = a_grid[i];
    facets::validate(p);
  }
  if (replicates < 1) throw ValidationError("replicates must be positive");
  if (!(tests.ks_level > 0.0 && tests.ks_level < 1.0)) throw ValidationError("ks_level must lie in (0,1)");
  try {
    sampler.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
}

// ---------------------------------------------------------------------------

RunRecord draw_replicate(const ExperimentConfig& config, double a, std::size_t a_index, std::size_t rep) {
  ModelParams p = config.params;
  p.a = a;
  auto rng = make_rng(config.master_seed, {a_index, rep});
  RunRecord r;
  r.a = a;
  r.rep = rep;
  const std::size_t d = p.d;

  auto fill = [&](const Configuration& cfg) {
    r.n = cfg.size();
    r.occupancy = cfg.orientation_counts();
  };
  switch (config.sampler.method) {
    case SamplerMethod::poisson: {
      const auto cfg = sample_poisson(p, rng);
      fill(cfg);
      r.g = g_stat_all(cfg, d, p);
      break;
    }
    case SamplerMethod::rejection: {
      const auto s = sample_gibbs_rejection(p, config.sampler, rng);
      fill(s.config);
      r.g = g_stat_all(s.config, d, p);
      break;
    }
    case SamplerMethod::mcmc: {
      const auto s = sample_gibbs_mcmc(p, config.sampler, rng);
      fill(s.config);
      r.g = s.g;
      r.acc_birth = s.stats.birth.rate();
      r.acc_death = s.stats.death.rate();
      r.acc_move = s.stats.move.rate();
      break;
    }
  }

  std::size_t distinct = 0;
  for (auto k : r.occupancy) distinct += k > 0 ? 1 : 0;
  for (std::size_t j = 1; j <= d; ++j) {
    if (r.g[j - 1] < 0.0 || (j > distinct && r.g[j - 1] != 0.0)) {
      throw std::logic_error("run record violates G_j invariants at j=" + std::to_string(j));
    }
  }
  return r;
}

std::vector<RunRecord> draw_replicates(const ExperimentConfig& config, std::size_t a_index) {
  const double a = config.a_grid.at(a_index);
  const std::size_t n = config.replicates;
  std::size_t threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, n);

  std::vector<RunRecord> out(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t failed_rep = n;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n || failed.load()) return;
      try {
        out[r] = draw_replicate(config, a, a_index, r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (r < failed_rep) {
          failed_rep = r;
          error = std::current_exception();
        }
        failed = true;
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (...) {
      std::ostringstream msg;
      msg << "sampling failed at a=" << a << ", replicate " << failed_rep;
      std::throw_with_nested(std::runtime_error(msg.str()));
    }
  }
  return out;
}

GridSummary summarize(const ExperimentConfig& config, double a, std::span<const RunRecord> runs,
                      const CovarianceMatrix& sigma) {
  if (runs.size() < 2) throw InvalidArgument("summaries need at least two replicates");
  ModelParams p = config.params;
  p.a = a;
  const std::size_t d = p.d;
  const double n = static_cast<double>(runs.size());
  const auto c = interaction_order(p);

  GridSummary s;
  s.a = a;
  s.mean_g.assign(d, 0.0);
  s.mean_g_se.assign(d, 0.0);
  s.poisson_mean_g.assign(d, 0.0);
  s.centering.assign(d, 0.0);
  for (const auto& r : runs) s.mean_n += static_cast<double>(r.n) / n;

  std::vector<std::vector<double>> z(d, std::vector<double>(runs.size()));
  for (std::size_t j = 1; j <= d; ++j) {
    double sum = 0.0, sq = 0.0;
    for (const auto& r : runs) sum += r.g[j - 1];
    const double mean = sum / n;
    for (const auto& r : runs) sq += (r.g[j - 1] - mean) * (r.g[j - 1] - mean);
    s.mean_g[j - 1] = mean;
    s.mean_g_se[j - 1] = std::sqrt(sq / (n - 1.0) / n);
    s.poisson_mean_g[j - 1] = expected_g(j, p, ExpectedMode::poisson_exact);
    if (config.mean_mode == MeanMode::empirical) {
      s.centering[j - 1] = mean;
    } else {
      const double aj = std::pow(effective_intensity(p), static_cast<double>(j));
      s.centering[j - 1] = c ? aj * asymptotic_mean(j, p, config.integrals) : s.poisson_mean_g[j - 1];
    }
    for (std::size_t i = 0; i < runs.size(); ++i) z[j - 1][i] = standardize(runs[i].g[j - 1], j, a, s.centering[j - 1]);
  }

  std::vector<double> zbar(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) zbar[j] = std::accumulate(z[j].begin(), z[j].end(), 0.0) / n;
  s.covariance.assign(d, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = k; l < d; ++l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < runs.size(); ++i) acc += (z[k][i] - zbar[k]) * (z[l][i] - zbar[l]);
      s.covariance[k][l] = s.covariance[l][k] = acc / (n - 1.0);
    }
  }
  s.variance_se.assign(d, 0.0);
  s.fourth_moment.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m4 = 0.0;
    for (double v : z[j]) m4 += std::pow(v - zbar[j], 4) / n;
    s.fourth_moment[j] = m4;
    const double var = s.covariance[j][j];
    s.variance_se[j] = std::sqrt(std::max(0.0, m4 - var * var) / n);
    const double theta = sigma(j + 1, j + 1);
    if (theta > 0.0 && runs.size() >= 100) {
      MarginalTest t{j + 1, theta, ks_normality(z[j], theta), false};
      t.pass = t.ks.p_value > config.tests.ks_level;
      s.ks.push_back(t);
    }
  }

  Eigen::MatrixXd m(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = 0; l < d; ++l) m(k, l) = s.covariance[k][l];
  }
  s.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json matrix_json(const std::vector<std::vector<double>>& m) { return json(m); }

json sigma_json(const CovarianceMatrix& s, bool errors) {
  std::vector<std::vector<double>> m(s.dim(), std::vector<double>(s.dim()));
  for (std::size_t k = 1; k <= s.dim(); ++k) {
    for (std::size_t l = 1; l <= s.dim(); ++l) m[k - 1][l - 1] = errors ? s.std_error(k, l) : s(k, l);
  }
  return matrix_json(m);
}

void write_runs(const std::filesystem::path& dir, std::size_t d, const std::vector<RunRecord>& runs) {
  std::ofstream out(dir / "runs.csv", std::ios::binary);
  out << runs_csv_header(d) << '\n';
  for (const auto& r : runs) out << runs_csv_row(r) << '\n';
}

json grid_json(const GridSummary& g, std::size_t d) {
  json ks = json::array();
  for (const auto& t : g.ks) {
    ks.push_back({{"j", t.j}, {"theta", t.theta}, {"statistic", t.ks.statistic}, {"p_value", t.ks.p_value},
                  {"pass", t.pass}});
  }
  std::vector<double> mean_over_aj(d), ratio(d);
  for (std::size_t j = 0; j < d; ++j) {
    mean_over_aj[j] = g.mean_g[j] / std::pow(g.a, static_cast<double>(j + 1));
    ratio[j] = g.poisson_mean_g[j] > 0.0 ? g.mean_g[j] / g.poisson_mean_g[j] : 0.0;
  }
  return {{"a", g.a},
          {"mean_n", g.mean_n},
          {"mean_g", g.mean_g},
          {"mean_g_se", g.mean_g_se},
          {"mean_g_over_a_pow_j", mean_over_aj},
          {"poisson_mean_g", g.poisson_mean_g},
          {"ratio_to_poisson", ratio},
          {"centering", g.centering},
          {"covariance", matrix_json(g.covariance)},
          {"variance_se", g.variance_se},
          {"fourth_moment", g.fourth_moment},
          {"ks", ks},
          {"min_eigenvalue", g.min_eigenvalue}};
}

}  // namespace

std::string runs_csv_header(std::size_t d) {
  std::string h = "a,rep,N";
  for (std::size_t j = 1; j <= d; ++j) h += ",G_" + std::to_string(j);
  return h + ",acc_birth,acc_death,acc_move,orient_occupancy";
}

std::string runs_csv_row(const RunRecord& r) {
  std::string row = fmt(r.a) + "," + std::to_string(r.rep) + "," + std::to_string(r.n);
  for (double g : r.g) row += "," + fmt(g);
  for (const auto& acc : {r.acc_birth, r.acc_death, r.acc_move}) row += "," + (acc ? fmt(*acc) : std::string());
  row += ",";
  for (std::size_t i = 0; i < r.occupancy.size(); ++i) row += (i ? ";" : "") + std::to_string(r.occupancy[i]);
  return row;
}

ExperimentReport run_experiment(const ExperimentConfig& config, bool write_files) {
  config.validate();
  ExperimentReport rep;
  const auto& params = config.params;
  const std::size_t d = params.d;
  rep.c = interaction_order(params);
  rep.sigma = rep.c ? covariance_limit(params, config.integrals) : covariance_limit_poisson(params, config.integrals);

  const std::filesystem::path dir = config.output_dir;
  if (write_files) std::filesystem::create_directories(dir);

  for (std::size_t i = 0; i < config.a_grid.size(); ++i) {
    std::vector<RunRecord> runs;
    try {
      runs = draw_replicates(config, i);
    } catch (...) {
      if (write_files) write_runs(dir, d, rep.runs);
      throw;
    }
    rep.grid.push_back(summarize(config, config.a_grid[i], runs, rep.sigma));
    rep.runs.insert(rep.runs.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
  }

  // Checks at the largest a; trends across the grid.
  const auto& last = rep.grid.back();
  json checks = json::array();
  for (std::size_t j = 1; j <= d; ++j) {
    const double theta = rep.sigma(j, j);
    if (theta <= 0.0) continue;
    const double var = last.covariance[j - 1][j - 1];
    const double m4 = last.fourth_moment[j - 1];
    json ks_pass = nullptr;
    for (const auto& t : last.ks) {
      if (t.j == j) ks_pass = t.pass;
    }
    checks.push_back({{"j", j},
                      {"variance", var},
                      {"theta", theta},
                      {"variance_rel_error", std::abs(var - theta) / theta},
                      {"variance_pass", std::abs(var - theta) <= config.tests.variance_tolerance * theta},
                      {"ks_pass", ks_pass},
                      {"fourth_moment_ratio", m4 / (3.0 * var * var)},
                      {"fourth_moment_pass",
                       std::abs(m4 - 3.0 * var * var) <= config.tests.fourth_moment_tolerance * 3.0 * var * var}});
  }
  json degeneration = json::array();
  if (rep.c) {
    for (std::size_t j = static_cast<std::size_t>(*rep.c); j <= d; ++j) {
      bool decreasing = true;
      std::vector<double> means;
      for (std::size_t i = 0; i < rep.grid.size(); ++i) {
        means.push_back(rep.grid[i].mean_g[j - 1]);
        if (i > 0 && !(rep.grid[i].mean_g[j - 1] < rep.grid[i - 1].mean_g[j - 1])) decreasing = false;
      }
      const double ratio = last.poisson_mean_g[j - 1] > 0.0 ? last.mean_g[j - 1] / last.poisson_mean_g[j - 1] : 0.0;
      degeneration.push_back({{"j", j},
                              {"mean_g", means},
                              {"strictly_decreasing", decreasing},
                              {"ratio_to_poisson", ratio},
                              {"ratio_pass", ratio < config.tests.degeneration_ratio}});
    }
  }
  json asym = json::array();
  for (std::size_t j = 1; j <= d; ++j) {
    asym.push_back(rep.c ? asymptotic_mean(j, params, config.integrals)
                         : asymptotic_mean_poisson(j, params, config.integrals));
  }

  json grid = json::array();
  for (const auto& g : rep.grid) grid.push_back(grid_json(g, d));
  rep.summary = {
      {"model",
       {{"d", d},
        {"b", params.b},
        {"nu", params.nu},
        {"c", rep.c ? json(*rep.c) : json(nullptr)},
        {"chi_constant", params.chi.is_constant()},
        {"T", total_mass(params)}}},
      {"sampler", std::string(to_string(config.sampler.method))},
      {"replicates", config.replicates},
      {"master_seed", config.master_seed},
      {"mean_mode", config.mean_mode == MeanMode::empirical ? "empirical" : "asymptotic"},
      {"tolerances",
       {{"ks_level", config.tests.ks_level},
        {"variance", config.tests.variance_tolerance},
        {"fourth_moment", config.tests.fourth_moment_tolerance},
        {"degeneration_ratio", config.tests.degeneration_ratio}}},
      {"theory",
       {{"sigma", sigma_json(rep.sigma, false)},
        {"sigma_se", sigma_json(rep.sigma, true)},
        {"asymptotic_mean", asym}}},
      {"grid", grid},
      {"checks", checks},
      {"degeneration", degeneration},
  };

  if (write_files) {
    write_runs(dir, d, rep.runs);
    std::ofstream(dir / "summary.json", std::ios::binary) << rep.summary.dump(2) << '\n';
    std::ofstream sig(dir / "sigma.csv", std::ios::binary);
    for (std::size_t k = 1; k <= d; ++k) {
      for (std::size_t l = 1; l <= d; ++l) sig << (l > 1 ? "," : "") << fmt(rep.sigma(k, l));
      sig << '\n';
    }
  }
  return rep;
}

}  // namespace facets
