#ifndef BGI_DETECTORS_HPP
#define BGI_DETECTORS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bgi/core.hpp"
#include "bgi/posterior.hpp"
#include "bgi/robust_stats.hpp"

namespace bgi {

struct InitThreeSigma {};
struct InitSsi {};
struct InitFixed {
  double t0 = 0.0;
};

/// How the initial threshold T0 is chosen.
using InitRule = std::variant<InitThreeSigma, InitSsi, InitFixed>;

/// How candidate scores are evaluated inside ITS.
enum class ScoringPath {
  /// O(1) per candidate from magnitude-ordered prefix sums.
  kClosedForm,
  /// Builds the candidate labeling and calls the estimators and
  /// log_posterior directly. O(N) per candidate; for verification.
  kFullRecompute,
};

struct DetectorConfig {
  /// Loop bound; unset means N.
  std::optional<std::size_t> max_loops;
  double variance_floor_scale = kDefaultVarianceFloorScale;
  double ssi_coefficient = kDefaultSsiCoefficient;
  EstimatorKind estimator = EstimatorKind::kRobust;
  InitRule init = InitSsi{};
  ScoringPath scoring = ScoringPath::kClosedForm;

  /// Throws ParameterDomainError.
  void validate() const;
};

/// Gaussian parameters supplied to the known-parameter detectors. The
/// impulse rate is re-estimated from each candidate unless fixed_rho is set.
struct KnownGaussians {
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  std::optional<double> fixed_rho;

  void validate() const;
};

struct DetectionResult {
  Labels labels;
  PlugInEstimate estimate;
  double log_score = 0.0;
  /// ITS: threshold shifts plus the final no-improvement check, so a run
  /// that accepts no shift reports 1. SMLR: accepted flips.
  std::size_t loops = 0;
  /// T0 followed by the threshold after every accepted shift. Empty for
  /// SMLR.
  std::vector<double> threshold_trace;
  /// True iff the run ended because no candidate improved the score.
  bool converged = false;

  double final_threshold() const { return threshold_trace.back(); }
};

/// labels_n = 1 iff |x_n| >= t. t may be +infinity.
Labels classify_threshold(std::span<const double> x, double t);

/// T0 for the configured init rule.
double initial_threshold(std::span<const double> x, const DetectorConfig& cfg);

/// Sample magnitudes in descending order, grouped into distinct levels, with
/// prefix sums of squares. A state `g` labels the top g levels as impulses,
/// which is exactly the thresholding at the g-th largest distinct magnitude.
class MagnitudeLadder {
 public:
  explicit MagnitudeLadder(std::span<const double> x);

  std::size_t size() const { return order_.size(); }
  /// Number of distinct magnitude levels.
  std::size_t levels() const { return level_end_.size(); }
  /// Samples labeled impulse in state g.
  std::size_t count_at(std::size_t g) const { return g == 0 ? 0 : level_end_[g - 1]; }
  /// Threshold realizing state g (+infinity for g = 0).
  double threshold_at(std::size_t g) const;
  /// State produced by thresholding at t.
  std::size_t level_for_threshold(double t) const;
  LabelStats stats_at(std::size_t g) const;
  Labels labels_at(std::size_t g) const;

 private:
  std::vector<std::size_t> order_;      // sample indices by descending |x|
  std::vector<double> magnitude_;       // |x| in that order
  std::vector<std::size_t> level_end_;  // one past the last sample of each level
  std::vector<long double> top_sum_sq_;     // sum of the k largest squares
  std::vector<long double> bottom_sum_sq_;  // sum of squares from position k on
};

/// Iterative threshold shifting with known Gaussian parameters. Each loop
/// scores the current thresholded labeling, the one with its
/// smallest-magnitude impulse level demoted and the one with its
/// largest-magnitude background level promoted, and moves to the best
/// candidate if it strictly improves the plug-in log-posterior.
DetectionResult its_known(std::span<const double> x, const KnownGaussians& gaussians,
                          const DetectorConfig& cfg = {});

/// Blind iterative threshold shifting: every candidate carries its own
/// plug-in estimate from cfg.estimator. Requires N >= 2.
DetectionResult its_blind(std::span<const double> x, const DetectorConfig& cfg = {});

/// Scoring used by SMLR: fixed Gaussians or a plug-in estimator.
using ScoringMode = std::variant<KnownGaussians, EstimatorKind>;

/// Single most likely replacement: repeatedly applies the single label flip
/// with the largest strict score improvement (lowest index on ties). O(N)
/// per iteration via sufficient statistics. max_iterations defaults to 4N.
DetectionResult smlr(std::span<const double> x, const ScoringMode& mode,
                     Labels initial,
                     std::optional<std::size_t> max_iterations = std::nullopt,
                     double variance_floor_scale = kDefaultVarianceFloorScale);

struct MapResult {
  Labels labels;
  double log_score = 0.0;
};

inline constexpr std::size_t kMaxExhaustiveLength = 20;

/// Brute-force maximizer of the plug-in log-posterior over all 2^N
/// labelings with fixed Gaussians. Ties go to fewer impulses, then to the
/// lexicographically smallest labeling. Throws CapacityError for N > 20.
MapResult exhaustive_map(std::span<const double> x, const KnownGaussians& gaussians);

/// One-shot thresholding at threshold_three_sigma(x). loops = 0.
DetectionResult three_sigma_baseline(std::span<const double> x,
                                     double variance_floor_scale = kDefaultVarianceFloorScale);

}  // namespace bgi

#endif  // BGI_DETECTORS_HPP
