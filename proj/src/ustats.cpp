#include "facets/ustats.hpp"

#include <algorithm>
#include <string>

#include "facets/errors.hpp"

namespace facets {

Configuration::Configuration(std::size_t d) : d_(d), buckets_(d) {}

Configuration::Configuration(std::size_t d, std::vector<Facet> facets) : Configuration(d) {
  facets_.reserve(facets.size());
  for (auto& f : facets) add(std::move(f));
}

std::vector<std::size_t> Configuration::orientation_counts() const {
  std::vector<std::size_t> out(d_);
  for (std::size_t l = 0; l < d_; ++l) out[l] = buckets_[l].size();
  return out;
}

std::size_t Configuration::distinct_orientations() const {
  return static_cast<std::size_t>(
      std::count_if(buckets_.begin(), buckets_.end(), [](const auto& b) { return !b.empty(); }));
}

void Configuration::add(Facet f) {
  if (f.center.size() != d_ || f.axis >= d_) {
    throw InvalidArgument("facet does not match configuration dimension " + std::to_string(d_));
  }
  const std::size_t i = facets_.size();
  slot_.push_back(buckets_[f.axis].size());
  buckets_[f.axis].push_back(i);
  facets_.push_back(std::move(f));
}

void Configuration::remove(std::size_t index) {
  if (index >= facets_.size()) throw InvalidArgument("facet index out of range");
  const std::size_t last = facets_.size() - 1;

  // Drop `index` from its bucket.
  auto& bk = buckets_[facets_[index].axis];
  const std::size_t s = slot_[index];
  bk[s] = bk.back();
  slot_[bk[s]] = s;
  bk.pop_back();

  if (index != last) {
    facets_[index] = std::move(facets_[last]);
    slot_[index] = slot_[last];
    buckets_[facets_[index].axis][slot_[index]] = index;
  }
  facets_.pop_back();
  slot_.pop_back();
}

void Configuration::set_center(std::size_t index, std::span<const double> center) {
  if (index >= facets_.size() || center.size() != d_) throw InvalidArgument("set_center: bad index or dimension");
  std::copy(center.begin(), center.end(), facets_[index].center.begin());
}

namespace {

// Depth-first enumeration of subsets with pairwise distinct orientations,
// taken in increasing orientation order. sums[k] accumulates the measure of
// every (base + k + 1)-facet intersection, where `base` facets are preloaded.
class SubsetTraversal {
 public:
  SubsetTraversal(const Configuration& cfg, double b, std::size_t max_new, std::optional<std::size_t> exclude,
                  std::optional<std::size_t> skip_axis)
      : cfg_(cfg), d_(cfg.dimension()), max_new_(max_new), exclude_(exclude), skip_axis_(skip_axis) {
    stack_.assign(max_new + 1, IntersectionAccumulator(d_, b));
    sums_.assign(max_new, 0.0);
  }

  IntersectionAccumulator& root() { return stack_[0]; }

  std::vector<double> run() {
    if (max_new_ > 0) descend(0, 0);
    return sums_;
  }

 private:
  void descend(std::size_t depth, std::size_t first_axis) {
    for (std::size_t axis = first_axis; axis < d_; ++axis) {
      if (skip_axis_ && axis == *skip_axis_) continue;
      for (std::size_t idx : cfg_.bucket(axis)) {
        if (exclude_ && idx == *exclude_) continue;
        auto& next = stack_[depth + 1];
        next = stack_[depth];
        if (!next.add(cfg_[idx].center, axis)) continue;
        sums_[depth] += next.measure();
        if (depth + 1 < max_new_) descend(depth + 1, axis + 1);
      }
    }
  }

  const Configuration& cfg_;
  std::size_t d_;
  std::size_t max_new_;
  std::optional<std::size_t> exclude_;
  std::optional<std::size_t> skip_axis_;
  std::vector<IntersectionAccumulator> stack_;
  std::vector<double> sums_;
};

void check_order(std::size_t j, const ModelParams& params) {
  if (j < 1 || j > params.d) {
    throw InvalidArgument("U-statistic order " + std::to_string(j) + " outside 1.." + std::to_string(params.d));
  }
}

void check_config(const Configuration& config, const ModelParams& params) {
  if (config.dimension() != params.d) throw InvalidArgument("configuration dimension differs from params.d");
}

}  // namespace

std::vector<double> g_stat_all(const Configuration& config, std::size_t j_max, const ModelParams& params) {
  check_order(j_max, params);
  check_config(config, params);
  SubsetTraversal t(config, params.b, j_max, std::nullopt, std::nullopt);
  return t.run();
}

double g_stat(const Configuration& config, std::size_t j, const ModelParams& params) {
  return g_stat_all(config, j, params).back();
}

std::vector<double> delta_g_all(const Configuration& config, const Facet& u, std::size_t j_max,
                                const ModelParams& params, std::optional<std::size_t> exclude) {
  check_order(j_max, params);
  check_config(config, params);
  if (u.center.size() != params.d || u.axis >= params.d) throw InvalidArgument("facet dimension mismatch");

  std::vector<double> out(j_max, 0.0);
  SubsetTraversal t(config, params.b, j_max - 1, exclude, u.axis);
  auto& root = t.root();
  root.add(u.center, u.axis);
  out[0] = root.measure();
  const auto partners = t.run();
  std::copy(partners.begin(), partners.end(), out.begin() + 1);
  return out;
}

double delta_g(const Configuration& config, const Facet& u, std::size_t j, const ModelParams& params) {
  return delta_g_all(config, u, j, params).back();
}

std::size_t max_active_order(const ModelParams& params) {
  std::size_t top = 0;
  for (std::size_t i = 1; i <= params.d; ++i) {
    if (params.nu_at(i) != 0.0) top = i;
  }
  return top;
}

double energy(const Configuration& config, const ModelParams& params) {
  const std::size_t top = max_active_order(params);
  if (top == 0) return 0.0;
  const auto g = g_stat_all(config, top, params);
  double e = 0.0;
  for (std::size_t i = 1; i <= top; ++i) e += params.nu_at(i) * g[i - 1];
  return e;
}

double interaction_energy(const Configuration& config, const ModelParams& params) {
  const std::size_t top = max_active_order(params);
  if (top < 2) return 0.0;
  const auto g = g_stat_all(config, top, params);
  double e = 0.0;
  for (std::size_t i = 2; i <= top; ++i) e += params.nu_at(i) * g[i - 1];
  return e;
}

}  // namespace facets
