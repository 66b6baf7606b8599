#include "facets/moments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "facets/errors.hpp"
#include "facets/geometry.hpp"

namespace facets {

std::size_t MomentRequest::K() const noexcept { return std::accumulate(m.begin(), m.end(), std::size_t{0}); }

double MomentRequest::M() const noexcept {
  double total = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) total += (static_cast<double>(j) + 0.5) * static_cast<double>(m[j]);
  return total;
}

std::vector<std::size_t> MomentRequest::orders() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m.size(); ++j) out.insert(out.end(), m[j], j + 1);
  return out;
}

void MomentRequest::validate(std::size_t max_order) const {
  const std::size_t k = K();
  if (k < 1) throw InvalidArgument("moment request needs at least one row");
  if (k > kMaxMomentRows) {
    throw ResourceLimit("moment request has " + std::to_string(k) + " rows; at most " +
                        std::to_string(kMaxMomentRows) + " are enumerated");
  }
  for (std::size_t j = max_order; j < m.size(); ++j) {
    if (m[j] != 0) throw InvalidArgument("moment request uses order " + std::to_string(j + 1) + " above " +
                                         std::to_string(max_order));
  }
}

namespace {

double batch_se(const std::vector<double>& batches) {
  const double n = static_cast<double>(batches.size());
  if (batches.size() < 2) return 0.0;
  const double mean = std::accumulate(batches.begin(), batches.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : batches) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

double inv_factorial(std::size_t j) { return 1.0 / static_cast<double>(factorial(static_cast<unsigned>(j))); }

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

MomentEngine::MomentEngine(ModelParams params, MomentOptions opts) : params_(std::move(params)), opts_(std::move(opts)) {
  validate(params_);
  if (opts_.n_samples < opts_.batches || opts_.batches < 2) {
    throw InvalidArgument("moment engine needs at least 2 batches and one sample per batch");
  }
  retained_ = opts_.retained;
  if (retained_.empty()) {
    if (auto c = interaction_order(params_)) {
      for (int i = 0; i + 1 < *c; ++i) retained_.push_back(static_cast<std::size_t>(i));
    }
  }
  std::set<std::size_t> seen(retained_.begin(), retained_.end());
  if (seen.size() != retained_.size() || (!retained_.empty() && *seen.rbegin() >= params_.d)) {
    throw InvalidArgument("retained orientations must be distinct axes below d");
  }
}

const std::vector<double>& MomentEngine::component(const std::vector<std::size_t>& orders,
                                                   const std::vector<std::vector<std::size_t>>& row_blocks,
                                                   std::size_t n_blocks, bool restricted) {
  std::vector<std::size_t> key{restricted ? 1U : 0U, n_blocks};
  for (std::size_t r = 0; r < orders.size(); ++r) {
    key.push_back(orders[r]);
    key.insert(key.end(), row_blocks[r].begin(), row_blocks[r].end());
  }
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  const std::size_t d = params_.d;
  const std::size_t n_orient = restricted ? retained_.size() : d;
  if (n_orient == 0) throw InvalidArgument("restricted integral needs an interaction order c");
  const double weight =
      std::pow(total_mass(params_) * static_cast<double>(n_orient) / static_cast<double>(d), static_cast<double>(n_blocks));
  const std::size_t per_batch = (opts_.n_samples + opts_.batches - 1) / opts_.batches;

  std::vector<double> centers(n_blocks * d);
  std::vector<std::size_t> axes(n_blocks);
  IntersectionAccumulator acc(d, params_.b);
  std::vector<double> out(opts_.batches);
  for (std::size_t k = 0; k < opts_.batches; ++k) {
    // Stream depends only on (n_blocks, batch): shared by every component of this size.
    auto rng = make_rng(opts_.seed, {n_blocks, k});
    double sum = 0.0;
    for (std::size_t s = 0; s < per_batch; ++s) {
      for (std::size_t i = 0; i < n_blocks; ++i) {
        params_.chi.sample_center(rng, params_.b, std::span<double>(centers).subspan(i * d, d));
        const double u = uniform01(rng);
        const auto slot = std::min(static_cast<std::size_t>(u * static_cast<double>(n_orient)), n_orient - 1);
        axes[i] = restricted ? retained_[slot] : slot;
      }
      double v = 1.0;
      for (const auto& blocks : row_blocks) {
        acc.reset();
        for (auto blk : blocks) {
          if (!acc.add(std::span<const double>(centers).subspan(blk * d, d), axes[blk])) break;
        }
        v *= acc.measure();
        if (v == 0.0) break;
      }
      sum += v;
    }
    out[k] = weight * sum / static_cast<double>(per_batch);
  }
  return cache_.emplace(std::move(key), std::move(out)).first->second;
}

MomentEngine::Evaluation MomentEngine::evaluate(const RowPartition& sigma, bool restricted) {
  if (!sigma.is_valid()) throw InvalidArgument("partition violates the row constraint");
  if (sigma.size() * params_.d > kMaxMcDimension) {
    throw ResourceLimit("partition integral has MC dimension " + std::to_string(sigma.size() * params_.d) +
                        " > " + std::to_string(kMaxMcDimension));
  }
  const auto& orders = sigma.shape.rows;
  const auto block_of = sigma.block_of_element();
  const auto rows = sigma.shape.row_elements();

  std::vector<std::size_t> parent(sigma.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 1; i < row.size(); ++i) {
      parent[find_root(parent, block_of[row[i]])] = find_root(parent, block_of[row[0]]);
    }
  }

  Evaluation ev{1.0, std::vector<double>(opts_.batches, 1.0)};
  std::vector<char> done(rows.size(), 0);
  for (std::size_t r0 = 0; r0 < rows.size(); ++r0) {
    if (done[r0]) continue;
    const std::size_t root = find_root(parent, block_of[rows[r0][0]]);
    // Relabel the component's blocks in order of first appearance.
    std::vector<std::size_t> comp_orders;
    std::vector<std::vector<std::size_t>> comp_rows;
    std::map<std::size_t, std::size_t> relabel;
    for (std::size_t r = r0; r < rows.size(); ++r) {
      if (done[r] || find_root(parent, block_of[rows[r][0]]) != root) continue;
      done[r] = 1;
      comp_orders.push_back(orders[r]);
      auto& out = comp_rows.emplace_back();
      for (auto e : rows[r]) {
        auto [it, fresh] = relabel.emplace(block_of[e], relabel.size());
        out.push_back(it->second);
      }
    }
    const auto& batches = component(comp_orders, comp_rows, relabel.size(), restricted);
    ev.value *= std::accumulate(batches.begin(), batches.end(), 0.0) / static_cast<double>(batches.size());
    for (std::size_t k = 0; k < batches.size(); ++k) ev.batches[k] *= batches[k];
  }
  return ev;
}

Estimate MomentEngine::partition_integral(const RowPartition& sigma, bool restricted) {
  const auto ev = evaluate(sigma, restricted);
  return {ev.value, batch_se(ev.batches)};
}

Estimate partition_integral(const RowPartition& sigma, const ModelParams& params, bool restricted,
                            const MomentOptions& opts) {
  MomentEngine engine(params, opts);
  return engine.partition_integral(sigma, restricted);
}

Estimate poisson_mixed_moment(const MomentRequest& req, const ModelParams& params, const MomentOptions& opts) {
  validate(params);
  req.validate(params.d);
  MomentEngine engine(params, opts);
  const RowShape shape{req.orders()};
  const double a = effective_intensity(params);
  double coef = 1.0;
  for (auto j : shape.rows) coef *= inv_factorial(j);

  double total = 0.0;
  std::vector<double> batches(opts.batches, 0.0);
  for_each_row_partition(shape, [&](const RowPartition& sigma) {
    const auto ev = engine.evaluate(sigma, false);
    const double w = coef * std::pow(a, static_cast<double>(sigma.size()));
    total += w * ev.value;
    for (std::size_t k = 0; k < batches.size(); ++k) batches[k] += w * ev.batches[k];
  });
  return {total, batch_se(batches)};
}

Estimate centered_moment_leading(const MomentRequest& req, const ModelParams& params, const IntegralOptions& opts) {
  validate(params);
  const auto c = interaction_order(params);
  if (!c) throw InvalidArgument("centred moments need an interaction order c >= 2");
  req.validate(static_cast<std::size_t>(*c - 1));
  if (req.K() % 2 == 1) return {0.0, 0.0};
  const auto sigma = covariance_limit(params, opts);
  const auto orders = req.orders();
  return wick_joint_moment_estimate(orders, sigma);
}

Estimate RestrictedAssembly::leading() const {
  const double r = std::round(M);
  if (std::abs(r - M) > 1e-9) return {0.0, 0.0};
  auto it = coefficients.find(static_cast<int>(r));
  return it == coefficients.end() ? Estimate{} : it->second;
}

double RestrictedAssembly::max_excess() const {
  double worst = 0.0;
  for (const auto& [p, est] : coefficients) {
    if (static_cast<double>(p) > M + 1e-9) worst = std::max(worst, std::abs(est.value));
  }
  return worst;
}

double RestrictedAssembly::value_at(double a) const {
  double total = 0.0;
  for (const auto& [p, est] : coefficients) total += est.value * std::pow(a, static_cast<double>(p) - M);
  return total;
}

RestrictedAssembly restricted_assembly(const MomentRequest& req, const ModelParams& params,
                                       const MomentOptions& opts) {
  validate(params);
  const auto c = interaction_order(params);
  if (!c) throw InvalidArgument("restricted assembly needs an interaction order c >= 2");
  req.validate(static_cast<std::size_t>(*c - 1));
  MomentEngine engine(params, opts);

  const auto orders = req.orders();
  const std::size_t K = orders.size();
  const std::size_t B = opts.batches;

  // E G_j factors on the restricted space.
  std::vector<MomentEngine::Evaluation> mean_row(K);
  for (std::size_t r = 0; r < K; ++r) {
    RowPartition single{RowShape{{orders[r]}}, {}};
    for (std::size_t e = 0; e < orders[r]; ++e) single.blocks.push_back({e});
    mean_row[r] = engine.evaluate(single, true);
  }

  RestrictedAssembly out;
  out.M = req.M();
  std::map<int, double> coef;
  std::map<int, std::vector<double>> coef_batches;
  std::map<std::vector<std::size_t>, double> skeletons;

  auto add_term = [&](int power, double value, const std::vector<double>& batches, std::vector<std::size_t> skel) {
    coef[power] += value;
    auto& cb = coef_batches.try_emplace(power, B, 0.0).first->second;
    for (std::size_t k = 0; k < B; ++k) cb[k] += batches[k];
    out.term_scale = std::max(out.term_scale, std::abs(value));
    if (skel.front() != 0) skeletons[skel] += value;
  };

  for (std::size_t mask = 0; mask < (std::size_t{1} << K); ++mask) {
    const double sign = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
    double base = sign;
    std::vector<double> base_batches(B, sign);
    int power = 0;
    std::vector<std::size_t> rest;
    for (std::size_t r = 0; r < K; ++r) {
      const double f = inv_factorial(orders[r]);
      if (mask >> r & 1U) {
        base *= f * mean_row[r].value;
        for (std::size_t k = 0; k < B; ++k) base_batches[k] *= f * mean_row[r].batches[k];
        power += static_cast<int>(orders[r]);
      } else {
        base *= f;
        for (auto& x : base_batches) x *= f;
        rest.push_back(r);
      }
    }
    if (rest.empty()) {
      add_term(power, base, base_batches, {mask});
      continue;
    }

    RowShape shape;
    for (auto r : rest) shape.rows.push_back(orders[r]);
    const auto rest_rows = shape.row_elements();
    // Element offsets of each original row, to express skeletons in original labels.
    std::vector<std::size_t> offset(K + 1, 0);
    for (std::size_t r = 0; r < K; ++r) offset[r + 1] = offset[r] + orders[r];

    for_each_row_partition(shape, [&](const RowPartition& sigma) {
      const auto ev = engine.evaluate(sigma, true);
      std::vector<double> batches(B);
      for (std::size_t k = 0; k < B; ++k) batches[k] = base_batches[k] * ev.batches[k];

      // Skeleton: rows that are expectation factors or pure singletons, plus sigma on the others.
      const auto block_of = sigma.block_of_element();
      std::size_t z = mask;
      for (std::size_t i = 0; i < rest.size(); ++i) {
        bool pure = true;
        for (auto e : rest_rows[i]) pure = pure && sigma.blocks[block_of[e]].size() == 1;
        if (pure) z |= std::size_t{1} << rest[i];
      }
      std::vector<std::vector<std::size_t>> kept;
      for (const auto& blk : sigma.blocks) {
        std::vector<std::size_t> mapped;
        for (auto e : blk) {
          std::size_t i = 0;
          while (e >= rest_rows[i].front() + rest_rows[i].size()) ++i;
          const std::size_t r = rest[i];
          if (!(z >> r & 1U)) mapped.push_back(offset[r] + (e - rest_rows[i].front()));
        }
        if (!mapped.empty()) kept.push_back(std::move(mapped));
      }
      std::sort(kept.begin(), kept.end());
      std::vector<std::size_t> skel{z};
      for (const auto& blk : kept) {
        skel.push_back(SIZE_MAX);
        skel.insert(skel.end(), blk.begin(), blk.end());
      }
      add_term(power + static_cast<int>(sigma.size()), base * ev.value, batches, std::move(skel));
    });
  }

  for (const auto& [p, v] : coef) out.coefficients[p] = {v, batch_se(coef_batches[p])};
  for (const auto& [key, v] : skeletons) out.skeleton_sums.push_back(v);
  return out;
}

double expected_g(std::size_t j, const ModelParams& params, ExpectedMode mode, const MomentOptions& opts) {
  validate(params);
  if (j < 1 || j > params.d) throw InvalidArgument("statistic order outside 1..d");
  const double a = effective_intensity(params);
  const double aj = std::pow(a, static_cast<double>(j));
  if (mode == ExpectedMode::gibbs_limit) return aj * asymptotic_mean(j, params);
  if (params.chi.is_constant()) return aj * asymptotic_mean_poisson(j, params);
  RowPartition single{RowShape{{j}}, {}};
  for (std::size_t e = 0; e < j; ++e) single.blocks.push_back({e});
  return aj * inv_factorial(j) * partition_integral(single, params, false, opts).value;
}

}  // namespace facets
