#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "facets/asymptotics.hpp"
#include "facets/combinatorics.hpp"
#include "facets/model.hpp"
#include "facets/random.hpp"

namespace facets {

/// Multiplicities m_1, m_2, ... of the statistic orders in a mixed moment
/// prod_j G_j^{m_j}. Rows are laid out order by order.
struct MomentRequest {
  std::vector<std::size_t> m;

  std::size_t K() const noexcept;
  /// sum (j - 1/2) m_j: the a-power of the standardisation.
  double M() const noexcept;
  /// Order of each row, e.g. m = (2, 1) gives (1, 1, 2).
  std::vector<std::size_t> orders() const;
  /// 1 <= K <= 8 and no order above max_order.
  void validate(std::size_t max_order) const;
};

inline constexpr std::size_t kMaxMomentRows = 8;
inline constexpr std::size_t kMaxMcDimension = 40;

struct MomentOptions {
  std::size_t n_samples = 200'000;
  std::size_t batches = 32;
  std::uint64_t seed = 0x5eed;
  /// 0-based axes kept by the restricted orientation set; empty means e_1..e_{c-1}.
  std::vector<std::size_t> retained;
};

/// Monte Carlo evaluator for merged tensor-product integrals.
///
/// Every component with n facet variables reads the same point set (keyed by n),
/// so equal sub-integrals come out bit-identical wherever they recur.
class MomentEngine {
 public:
  MomentEngine(ModelParams params, MomentOptions opts = {});

  const ModelParams& params() const noexcept { return params_; }
  const MomentOptions& options() const noexcept { return opts_; }

  /// Integral over Y^{|sigma|} (Y_{c-1}^{|sigma|} when restricted) of the
  /// sigma-merged product of row intersection measures against lambda^{|sigma|}.
  Estimate partition_integral(const RowPartition& sigma, bool restricted);
  /// Point value plus the per-batch values used for error propagation.
  struct Evaluation {
    double value = 0.0;
    std::vector<double> batches;
  };
  Evaluation evaluate(const RowPartition& sigma, bool restricted);

 private:
  const std::vector<double>& component(const std::vector<std::size_t>& orders,
                                       const std::vector<std::vector<std::size_t>>& row_blocks, std::size_t n_blocks,
                                       bool restricted);

  ModelParams params_;
  MomentOptions opts_;
  std::vector<std::size_t> retained_;
  std::map<std::vector<std::size_t>, std::vector<double>> cache_;
};

/// Convenience wrapper over MomentEngine.
Estimate partition_integral(const RowPartition& sigma, const ModelParams& params, bool restricted,
                            const MomentOptions& opts = {});

/// E prod_j G_j^{m_j} for the Poisson process with intensity
/// effective_intensity(params): exact polynomial in a, MC only in the integrals.
Estimate poisson_mixed_moment(const MomentRequest& req, const ModelParams& params, const MomentOptions& opts = {});

/// a -> infinity limit of E prod_j tilde G_j^{m_j} under the submodel:
/// the Wick sum of theta over pairings of rows. Odd K gives exactly 0.
Estimate centered_moment_leading(const MomentRequest& req, const ModelParams& params,
                                 const IntegralOptions& opts = {});

/// Finite-a inclusion-exclusion of the centred moment over restricted
/// partition integrals, as a Laurent polynomial in a.
struct RestrictedAssembly {
  double M = 0.0;
  /// a-power p -> coefficient of a^p in E prod (G_j - E G_j) (before dividing by a^M).
  std::map<int, Estimate> coefficients;
  /// Sums of terms sharing one skeleton with at least one singleton row; each is 0 in exact arithmetic.
  std::vector<double> skeleton_sums;
  /// Largest |term| seen, the scale for judging skeleton_sums.
  double term_scale = 0.0;

  /// Coefficient of a^M (0 when M is not an integer).
  Estimate leading() const;
  /// Largest |coefficient| above a^M.
  double max_excess() const;
  double value_at(double a) const;
};

RestrictedAssembly restricted_assembly(const MomentRequest& req, const ModelParams& params,
                                       const MomentOptions& opts = {});

enum class ExpectedMode { poisson_exact, gibbs_limit };

/// poisson_exact: a^j/j! * integral of H^{d-j} against lambda^j.
/// gibbs_limit: a^j * asymptotic_mean(j).
double expected_g(std::size_t j, const ModelParams& params, ExpectedMode mode, const MomentOptions& opts = {});

}  // namespace facets
