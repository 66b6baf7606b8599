#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facets/asymptotics.hpp"
#include "facets/model.hpp"
#include "facets/samplers.hpp"
#include "json.hpp"

namespace facets {

// ---------------------------------------------------------------------------
// Statistics

/// (g - mean_estimate) / a^{j - 1/2}. Throws InvalidArgument for a < 1.
double standardize(double g, std::size_t j, double a, double mean_estimate);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};

/// P(sup|B| > x) for the Brownian bridge (Kolmogorov limit law).
double kolmogorov_survival(double x);

/// One-sample KS against N(0, variance) with the asymptotic p-value.
/// Needs at least 100 samples and variance > 0.
KsResult ks_normality(std::span<const double> samples, double variance);
/// Two-sample KS with the asymptotic p-value on the effective size nm/(n+m).
KsResult ks_two_sample(std::span<const double> x, std::span<const double> y);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 0.0;
};
/// Pearson goodness of fit of counts against expected counts (same total).
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected);

// ---------------------------------------------------------------------------
// Configuration

enum class MeanMode { empirical, asymptotic };

struct TestSettings {
  double ks_level = 0.01;
  double variance_tolerance = 0.15;       // relative, against theta_jj
  double fourth_moment_tolerance = 0.20;  // relative, against 3 Var^2
  double degeneration_ratio = 0.1;        // E G_j(Gibbs) / E G_j(Poisson) at the largest a
};

struct ExperimentConfig {
  ModelParams params;
  std::vector<double> a_grid;
  std::size_t replicates = 100;
  SamplerOptions sampler;
  TestSettings tests;
  MeanMode mean_mode = MeanMode::empirical;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  std::size_t threads = 0;  // 0: hardware concurrency
  IntegralOptions integrals;

  void validate() const;
};

/// Model block of a JSON config: d, b, a, nu, c, chi. Throws ValidationError.
ModelParams parse_params(const nlohmann::json& j);
SamplerOptions parse_sampler(const nlohmann::json& j);
/// Full experiment config; a single "a" stands for a one-point grid.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Runs

struct RunRecord {
  double a = 0.0;
  std::size_t rep = 0;
  std::size_t n = 0;
  std::vector<double> g;  // G_1..G_d
  std::optional<double> acc_birth, acc_death, acc_move;  // MCMC only
  std::vector<std::size_t> occupancy;                    // facets per orientation
};

/// Draws one replicate at intensity multiplier a with the configured sampler.
RunRecord draw_replicate(const ExperimentConfig& config, double a, std::size_t a_index, std::size_t rep);

/// All replicates for one grid point, in replicate order regardless of thread count.
std::vector<RunRecord> draw_replicates(const ExperimentConfig& config, std::size_t a_index);

struct MarginalTest {
  std::size_t j = 0;
  double theta = 0.0;
  KsResult ks;
  bool pass = false;
};

struct GridSummary {
  double a = 0.0;
  std::vector<double> mean_g, mean_g_se;
  std::vector<double> poisson_mean_g;  // exact E G_j of the Poisson process at this a
  std::vector<double> centering;       // mean used for standardisation
  std::vector<std::vector<double>> covariance;  // of the standardised vector
  std::vector<double> variance_se;
  std::vector<double> fourth_moment;  // central, standardised
  std::vector<MarginalTest> ks;
  double min_eigenvalue = 0.0;
  double mean_n = 0.0;
};

GridSummary summarize(const ExperimentConfig& config, double a, std::span<const RunRecord> runs,
                      const CovarianceMatrix& sigma);

struct ExperimentReport {
  std::vector<RunRecord> runs;
  std::vector<GridSummary> grid;
  CovarianceMatrix sigma;
  std::optional<int> c;
  nlohmann::json summary;
};

/// Runs the whole grid. When `write_files` is set, writes runs.csv,
/// summary.json and sigma.csv into config.output_dir; runs.csv is flushed
/// with every completed grid point before a sampler error propagates.
ExperimentReport run_experiment(const ExperimentConfig& config, bool write_files = true);

std::string runs_csv_header(std::size_t d);
std::string runs_csv_row(const RunRecord& r);

}  // namespace facets
