#include "facets/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "facets/errors.hpp"

namespace facets {

SamplerMethod parse_sampler_method(std::string_view name) {
  if (name == "poisson") return SamplerMethod::poisson;
  if (name == "rejection") return SamplerMethod::rejection;
  if (name == "mcmc") return SamplerMethod::mcmc;
  throw ValidationError("unknown sampler method \"" + std::string(name) + "\"");
}

std::string_view to_string(SamplerMethod m) noexcept {
  switch (m) {
    case SamplerMethod::poisson: return "poisson";
    case SamplerMethod::rejection: return "rejection";
    case SamplerMethod::mcmc: return "mcmc";
  }
  return "?";
}

void SamplerOptions::validate() const {
  const auto& p = proposal_probs;
  if (p.birth < 0.0 || p.death < 0.0 || p.move < 0.0) throw ValidationError("proposal probabilities must be >= 0");
  if (std::abs(p.birth + p.death + p.move - 1.0) > 1e-9) throw ValidationError("proposal probabilities must sum to 1");
  if ((p.birth > 0.0) != (p.death > 0.0)) {
    throw ValidationError("birth and death proposals must both be enabled or both disabled");
  }
  if (max_attempts == 0) throw ValidationError("max_attempts must be positive");
}

std::size_t SamplerOptions::burn_in_for(const ModelParams& params) const {
  if (burn_in) return *burn_in;
  return static_cast<std::size_t>(std::ceil(10.0 * effective_intensity(params) * total_mass(params)));
}

std::size_t SamplerOptions::sweeps_for(const ModelParams& params) const {
  if (sweeps) return *sweeps;
  return static_cast<std::size_t>(std::ceil(50.0 * effective_intensity(params) * total_mass(params)));
}

Facet draw_facet(const ModelParams& params, Rng& rng) {
  Facet f;
  f.center.resize(params.d);
  params.chi.sample_center(rng, params.b, f.center);
  f.axis = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(params.d)), params.d - 1);
  return f;
}

Configuration sample_poisson(const ModelParams& params, Rng& rng) {
  validate(params);
  const double mean = effective_intensity(params) * total_mass(params);
  std::poisson_distribution<std::size_t> count(mean);
  const std::size_t n = count(rng);
  Configuration config(params.d);
  for (std::size_t i = 0; i < n; ++i) config.add(draw_facet(params, rng));
  return config;
}

RejectionSample sample_gibbs_rejection(const ModelParams& params, const SamplerOptions& opts, Rng& rng) {
  validate(params);
  opts.validate();
  double sum_prob = 0.0;
  for (std::size_t attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    Configuration eta = sample_poisson(params, rng);
    const double p_accept = std::exp(interaction_energy(eta, params));
    sum_prob += p_accept;
    if (uniform01(rng) < p_accept) {
      return {std::move(eta), attempt, sum_prob / static_cast<double>(attempt)};
    }
  }
  throw AcceptanceStarvation(opts.max_attempts, sum_prob / static_cast<double>(opts.max_attempts));
}

BirthDeathMoveChain::BirthDeathMoveChain(ModelParams params, ProposalProbs probs, Configuration start)
    : params_(std::move(params)),
      probs_(probs),
      state_(std::move(start)),
      mean_count_(0.0),
#ifdef NDEBUG
      check_interval_(0)
#else
      check_interval_(1000)
#endif
{
  validate(params_);
  SamplerOptions{SamplerMethod::mcmc, 1, {}, {}, probs_, 0}.validate();
  mean_count_ = effective_intensity(params_) * total_mass(params_);
  g_ = g_stat_all(state_, params_.d, params_);
}

double BirthDeathMoveChain::delta_energy(const std::vector<double>& dg) const {
  double e = 0.0;
  for (std::size_t i = 2; i <= params_.d; ++i) e += params_.nu_at(i) * dg[i - 1];
  return e;
}

void BirthDeathMoveChain::apply(const std::vector<double>& dg, double sign) {
  for (std::size_t i = 0; i < g_.size(); ++i) g_[i] += sign * dg[i];
}

void BirthDeathMoveChain::step(Rng& rng) {
  ++steps_;
  const double u = uniform01(rng);
  const std::size_t n = state_.size();
  const std::size_t d = params_.d;

  if (u < probs_.birth) {
    ++stats_.birth.proposed;
    Facet f = draw_facet(params_, rng);
    const auto dg = delta_g_all(state_, f, d, params_);
    const double log_ratio = std::log(mean_count_ / static_cast<double>(n + 1)) +
                             std::log(probs_.death / probs_.birth) + delta_energy(dg);
    if (std::log(uniform01(rng)) < log_ratio) {
      state_.add(std::move(f));
      apply(dg, +1.0);
      ++stats_.birth.accepted;
    }
  } else if (u < probs_.birth + probs_.death) {
    ++stats_.death.proposed;
    if (n > 0) {
      const auto i = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
      const auto dg = delta_g_all(state_, state_[i], d, params_, i);
      const double log_ratio = std::log(static_cast<double>(n) / mean_count_) +
                               std::log(probs_.birth / probs_.death) - delta_energy(dg);
      if (std::log(uniform01(rng)) < log_ratio) {
        state_.remove(i);
        apply(dg, -1.0);
        ++stats_.death.accepted;
      }
    }
  } else {
    ++stats_.move.proposed;
    if (n > 0) {
      const auto i = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
      Facet moved{std::vector<double>(d), state_[i].axis};
      params_.chi.sample_center(rng, params_.b, moved.center);
      const auto dg_old = delta_g_all(state_, state_[i], d, params_, i);
      const auto dg_new = delta_g_all(state_, moved, d, params_, i);
      const double log_ratio = delta_energy(dg_new) - delta_energy(dg_old);
      if (std::log(uniform01(rng)) < log_ratio) {
        state_.set_center(i, moved.center);
        apply(dg_old, -1.0);
        apply(dg_new, +1.0);
        ++stats_.move.accepted;
      }
    }
  }

  if (check_interval_ && steps_ % check_interval_ == 0) {
    if (bookkeeping_error() > 1e-7) {
      throw std::logic_error("MCMC energy bookkeeping drifted from recomputed U-statistics");
    }
  }
}

void BirthDeathMoveChain::advance(std::size_t proposals, Rng& rng) {
  for (std::size_t s = 0; s < proposals; ++s) step(rng);
}

double BirthDeathMoveChain::bookkeeping_error() const {
  const auto fresh = g_stat_all(state_, params_.d, params_);
  double worst = 0.0;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const double scale = std::max(1.0, std::abs(fresh[i]));
    worst = std::max(worst, std::abs(fresh[i] - g_[i]) / scale);
  }
  return worst;
}

McmcSample sample_gibbs_mcmc(const ModelParams& params, const SamplerOptions& opts, Rng& rng) {
  validate(params);
  opts.validate();
  BirthDeathMoveChain chain(params, opts.proposal_probs, sample_poisson(params, rng));
  chain.advance(opts.burn_in_for(params) + opts.sweeps_for(params), rng);
  // Report freshly computed statistics rather than the running sums.
  auto g = g_stat_all(chain.state(), params.d, params);
  return {chain.state(), std::move(g), chain.stats()};
}

}  // namespace facets
