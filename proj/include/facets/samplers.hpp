#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "facets/model.hpp"
#include "facets/random.hpp"
#include "facets/ustats.hpp"

namespace facets {

enum class SamplerMethod { poisson, rejection, mcmc };

SamplerMethod parse_sampler_method(std::string_view name);
std::string_view to_string(SamplerMethod m) noexcept;

struct ProposalProbs {
  double birth = 1.0 / 3.0;
  double death = 1.0 / 3.0;
  double move = 1.0 / 3.0;
};

struct SamplerOptions {
  SamplerMethod method = SamplerMethod::mcmc;
  std::size_t max_attempts = 100000;
  std::optional<std::size_t> burn_in;  // default 10 aT proposals
  std::optional<std::size_t> sweeps;   // default 50 aT proposals
  ProposalProbs proposal_probs;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t burn_in_for(const ModelParams& params) const;
  std::size_t sweeps_for(const ModelParams& params) const;
};

/// One facet from lambda/T: centre with density chi/T, orientation uniform.
Facet draw_facet(const ModelParams& params, Rng& rng);

/// Poisson facet process with mean effective_intensity(params) * T.
/// With nu_1 = 0 this is the reference process eta_a.
Configuration sample_poisson(const ModelParams& params, Rng& rng);

struct RejectionSample {
  Configuration config;
  std::size_t attempts = 0;
  /// Mean acceptance probability exp(sum_{i>=2} nu_i G_i) over the attempts.
  double acceptance_rate = 0.0;
};

/// Exact Gibbs sample: Poisson proposals accepted with probability
/// exp(sum_{i>=2} nu_i G_i) <= 1. Throws AcceptanceStarvation after max_attempts.
RejectionSample sample_gibbs_rejection(const ModelParams& params, const SamplerOptions& opts, Rng& rng);

struct MoveCounter {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double rate() const noexcept { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct ChainStats {
  MoveCounter birth, death, move;
};

/// Birth-death-move Metropolis-Hastings chain targeting the Gibbs density
/// with respect to the Poisson process. The normalising constant never
/// enters. G_1..G_d of the current state are maintained incrementally.
class BirthDeathMoveChain {
 public:
  BirthDeathMoveChain(ModelParams params, ProposalProbs probs, Configuration start);

  void step(Rng& rng);
  void advance(std::size_t proposals, Rng& rng);

  const Configuration& state() const noexcept { return state_; }
  const std::vector<double>& g_values() const noexcept { return g_; }
  const ChainStats& stats() const noexcept { return stats_; }
  std::size_t steps() const noexcept { return steps_; }

  /// Recompute G from scratch every `interval` steps and throw std::logic_error
  /// if the maintained values drift by more than 1e-7 (relative). 0 disables.
  void set_bookkeeping_check(std::size_t interval) noexcept { check_interval_ = interval; }
  /// Largest relative difference between maintained and recomputed G.
  double bookkeeping_error() const;

 private:
  double delta_energy(const std::vector<double>& dg) const;
  void apply(const std::vector<double>& dg, double sign);

  ModelParams params_;
  ProposalProbs probs_;
  Configuration state_;
  std::vector<double> g_;
  double mean_count_;  // a_eff * T
  ChainStats stats_;
  std::size_t steps_ = 0;
  std::size_t check_interval_;
};

struct McmcSample {
  Configuration config;
  std::vector<double> g;
  ChainStats stats;
};

/// Runs a chain from a fresh Poisson draw for burn_in + sweeps proposals.
McmcSample sample_gibbs_mcmc(const ModelParams& params, const SamplerOptions& opts, Rng& rng);

}  // namespace facets
