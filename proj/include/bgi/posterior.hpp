#ifndef BGI_POSTERIOR_HPP
#define BGI_POSTERIOR_HPP

#include <cstddef>
#include <span>

#include "bgi/core.hpp"

namespace bgi {

inline constexpr double kDefaultVarianceFloorScale = 1e-12;

enum class EstimatorKind {
  /// Label-conditional mean squares for both variances.
  kErgodic,
  /// sigma1_sq from the MAD of the full sequence; impulse variance as for
  /// kErgodic.
  kRobust,
};

/// Noise parameters estimated from a candidate labeling.
struct PlugInEstimate {
  /// rho = impulse_count / N. sigma2_sq is the excess impulse variance.
  NoiseParams params;
  std::size_t impulse_count = 0;
  /// Set when one of the two label classes is empty and a fallback value
  /// was substituted for its variance.
  bool degenerate = false;
};

/// Smallest admissible variance estimate: scale * mean(x^2). Throws
/// DegenerateInputError when x is identically zero.
double variance_floor(std::span<const double> x,
                      double scale = kDefaultVarianceFloorScale);

/// Squared robust scale (kMadToSigma * MAD(x))^2, floored. Depends on x
/// only.
double robust_background_variance(std::span<const double> x, double floor);

/// Label-conditional zero-mean maximum-likelihood estimates.
///
/// rho = k/N, sigma1_sq = mean x^2 over background samples,
/// sigma1_sq + sigma2_sq = mean x^2 over impulse samples. Empty classes:
/// k = 0 gives sigma2_sq = max(max x^2 - sigma1_sq, floor); k = N gives
/// sigma1_sq = floor. Both set `degenerate`.
PlugInEstimate estimate_ergodic(std::span<const double> x,
                                std::span<const std::uint8_t> labels,
                                double floor_scale = kDefaultVarianceFloorScale);

/// As estimate_ergodic, except sigma1_sq comes from the MAD of the whole
/// sequence and is therefore independent of the labels.
PlugInEstimate estimate_robust(std::span<const double> x,
                               std::span<const std::uint8_t> labels,
                               double floor_scale = kDefaultVarianceFloorScale);

/// log of prod rho^phi (1 - rho)^(1 - phi), with 0 log 0 = 0.
double log_prior(std::span<const std::uint8_t> labels, double rho);
double log_prior(std::size_t impulse_count, std::size_t n, double rho);

/// log p(labels) + sum_n log f(x_n | labels_n) under the estimate's
/// parameters. Evaluated sample by sample; the detectors' closed-form scorer
/// is checked against this.
double log_posterior(std::span<const double> x,
                     std::span<const std::uint8_t> labels,
                     const PlugInEstimate& est);

/// Sufficient statistics of a labeling: counts and sums of squares per
/// class.
struct LabelStats {
  std::size_t n = 0;
  std::size_t impulse_count = 0;
  double background_sum_sq = 0.0;
  double impulse_sum_sq = 0.0;
};

LabelStats label_stats(std::span<const double> x,
                       std::span<const std::uint8_t> labels);

/// The same joint log-density as log_posterior, computed from sufficient
/// statistics in O(1).
double log_posterior_from_stats(const LabelStats& stats,
                                const NoiseParams& params);

/// Label-independent inputs of the plug-in estimators.
struct EstimatorContext {
  double floor = 0.0;
  /// Used by EstimatorKind::kRobust only.
  double robust_sigma1_sq = 0.0;
  /// max_n x_n^2, for the empty-impulse-set fallback.
  double max_sq = 0.0;
};

EstimatorContext make_estimator_context(std::span<const double> x,
                                        EstimatorKind kind, double floor_scale);

/// The estimator shared by estimate_ergodic and estimate_robust, driven by
/// sufficient statistics.
PlugInEstimate estimate_from_stats(const LabelStats& stats, EstimatorKind kind,
                                   const EstimatorContext& ctx);

}  // namespace bgi

#endif  // BGI_POSTERIOR_HPP
