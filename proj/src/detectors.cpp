#include "bgi/detectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <type_traits>

#include "bgi/errors.hpp"

namespace bgi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Scored {
  double log_score = -kInf;
  PlugInEstimate estimate;
};

// Scores the thresholded labelings of one ladder under a fixed scoring mode.
class LadderScorer {
 public:
  LadderScorer(std::span<const double> x, const MagnitudeLadder& ladder,
               const ScoringMode& mode, ScoringPath path, double floor_scale)
      : x_(x), ladder_(ladder), mode_(mode), path_(path) {
    if (const auto* kind = std::get_if<EstimatorKind>(&mode_)) {
      ctx_ = make_estimator_context(x, *kind, floor_scale);
    }
    floor_scale_ = floor_scale;
  }

  Scored score(std::size_t g) const {
    if (path_ == ScoringPath::kFullRecompute) return score_full(g);
    const LabelStats stats = ladder_.stats_at(g);
    const PlugInEstimate est = estimate(stats);
    return {log_posterior_from_stats(stats, est.params), est};
  }

 private:
  PlugInEstimate estimate(const LabelStats& stats) const {
    if (const auto* known = std::get_if<KnownGaussians>(&mode_)) {
      PlugInEstimate est;
      est.impulse_count = stats.impulse_count;
      est.params.sigma1_sq = known->sigma1_sq;
      est.params.sigma2_sq = known->sigma2_sq;
      est.params.rho = known->fixed_rho.value_or(
          static_cast<double>(stats.impulse_count) / static_cast<double>(stats.n));
      return est;
    }
    return estimate_from_stats(stats, std::get<EstimatorKind>(mode_), ctx_);
  }

  Scored score_full(std::size_t g) const {
    const Labels labels = ladder_.labels_at(g);
    PlugInEstimate est;
    if (std::holds_alternative<KnownGaussians>(mode_)) {
      est = estimate(label_stats(x_, labels));
    } else if (std::get<EstimatorKind>(mode_) == EstimatorKind::kRobust) {
      est = estimate_robust(x_, labels, floor_scale_);
    } else {
      est = estimate_ergodic(x_, labels, floor_scale_);
    }
    return {log_posterior(x_, labels, est), est};
  }

  std::span<const double> x_;
  const MagnitudeLadder& ladder_;
  ScoringMode mode_;
  ScoringPath path_;
  EstimatorContext ctx_;
  double floor_scale_ = kDefaultVarianceFloorScale;
};

DetectionResult run_its(std::span<const double> x, const ScoringMode& mode,
                        const DetectorConfig& cfg) {
  const MagnitudeLadder ladder(x);
  const LadderScorer scorer(x, ladder, mode, cfg.scoring, cfg.variance_floor_scale);
  const std::size_t max_loops = cfg.max_loops.value_or(x.size());

  DetectionResult result;
  const double t0 = initial_threshold(x, cfg);
  result.threshold_trace.push_back(t0);

  std::size_t g = ladder.level_for_threshold(t0);
  Scored current = scorer.score(g);
  while (result.loops < max_loops) {
    ++result.loops;
    const Scored demoted = g > 0 ? scorer.score(g - 1) : Scored{};
    const Scored promoted = g < ladder.levels() ? scorer.score(g + 1) : Scored{};

    // Strict improvement only; a tie between the two candidates goes to the
    // demotion.
    if (demoted.log_score > current.log_score &&
        demoted.log_score >= promoted.log_score) {
      --g;
      current = demoted;
    } else if (promoted.log_score > current.log_score) {
      ++g;
      current = promoted;
    } else {
      result.converged = true;
      break;
    }
    result.threshold_trace.push_back(ladder.threshold_at(g));
  }

  result.labels = classify_threshold(x, result.threshold_trace.back());
  result.estimate = current.estimate;
  result.log_score = current.log_score;
  return result;
}

}  // namespace

void DetectorConfig::validate() const {
  if (max_loops && *max_loops < 1) {
    throw ParameterDomainError("max_loops must be at least 1");
  }
  if (!(ssi_coefficient > 0.0)) {
    throw ParameterDomainError("ssi_coefficient must be positive");
  }
  if (!(variance_floor_scale > 0.0)) {
    throw ParameterDomainError("variance_floor_scale must be positive");
  }
  if (const auto* fixed = std::get_if<InitFixed>(&init)) {
    if (!(fixed->t0 >= 0.0)) {
      throw ParameterDomainError("fixed initial threshold must be nonnegative");
    }
  }
}

void KnownGaussians::validate() const {
  NoiseParams{fixed_rho.value_or(0.0), sigma1_sq, sigma2_sq}.validate(
      NoiseParams::Check::kRelaxed);
}

Labels classify_threshold(std::span<const double> x, double t) {
  Labels labels(x.size());
  std::transform(x.begin(), x.end(), labels.begin(),
                 [t](double v) -> std::uint8_t { return std::abs(v) >= t ? 1 : 0; });
  return labels;
}

double initial_threshold(std::span<const double> x, const DetectorConfig& cfg) {
  return std::visit(
      [&](const auto& rule) -> double {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, InitThreeSigma>) {
          return threshold_three_sigma(x);
        } else if constexpr (std::is_same_v<Rule, InitSsi>) {
          return threshold_ssi(x, cfg.ssi_coefficient);
        } else {
          return rule.t0;
        }
      },
      cfg.init);
}

MagnitudeLadder::MagnitudeLadder(std::span<const double> x) : order_(x.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(x[a]) > std::abs(x[b]);
  });

  const std::size_t n = x.size();
  magnitude_.resize(n);
  for (std::size_t i = 0; i < n; ++i) magnitude_[i] = std::abs(x[order_[i]]);
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || magnitude_[i] != magnitude_[i - 1]) level_end_.push_back(i);
  }

  top_sum_sq_.assign(n + 1, 0.0L);
  bottom_sum_sq_.assign(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    const long double sq = static_cast<long double>(magnitude_[i]) * magnitude_[i];
    top_sum_sq_[i + 1] = top_sum_sq_[i] + sq;
  }
  // Accumulated from the smallest magnitudes up so that background sums do
  // not inherit rounding from the impulse tail.
  for (std::size_t i = n; i-- > 0;) {
    const long double sq = static_cast<long double>(magnitude_[i]) * magnitude_[i];
    bottom_sum_sq_[i] = bottom_sum_sq_[i + 1] + sq;
  }
}

double MagnitudeLadder::threshold_at(std::size_t g) const {
  return g == 0 ? kInf : magnitude_[level_end_[g - 1] - 1];
}

std::size_t MagnitudeLadder::level_for_threshold(double t) const {
  // Levels are in descending magnitude; count those with magnitude >= t.
  std::size_t lo = 0;
  std::size_t hi = levels();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (threshold_at(mid + 1) >= t) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

LabelStats MagnitudeLadder::stats_at(std::size_t g) const {
  const std::size_t k = count_at(g);
  LabelStats stats;
  stats.n = size();
  stats.impulse_count = k;
  stats.impulse_sum_sq = static_cast<double>(top_sum_sq_[k]);
  stats.background_sum_sq = static_cast<double>(bottom_sum_sq_[k]);
  return stats;
}

Labels MagnitudeLadder::labels_at(std::size_t g) const {
  Labels labels(size(), 0);
  for (std::size_t i = 0; i < count_at(g); ++i) labels[order_[i]] = 1;
  return labels;
}

DetectionResult its_known(std::span<const double> x, const KnownGaussians& gaussians,
                          const DetectorConfig& cfg) {
  validate_samples(x);
  gaussians.validate();
  cfg.validate();
  return run_its(x, gaussians, cfg);
}

DetectionResult its_blind(std::span<const double> x, const DetectorConfig& cfg) {
  validate_samples(x);
  cfg.validate();
  if (x.size() < 2) {
    throw EmptyInputError("blind detection needs at least two samples");
  }
  // Rejects the all-zero sequence before any statistic is formed.
  variance_floor(x, cfg.variance_floor_scale);
  return run_its(x, cfg.estimator, cfg);
}

DetectionResult smlr(std::span<const double> x, const ScoringMode& mode,
                     Labels initial, std::optional<std::size_t> max_iterations,
                     double variance_floor_scale) {
  validate_samples(x);
  validate_labels(initial);
  if (initial.size() != x.size()) {
    throw ShapeError("initial labels do not match the observation length");
  }
  const auto* known = std::get_if<KnownGaussians>(&mode);
  EstimatorContext ctx;
  if (known) {
    known->validate();
  } else {
    ctx = make_estimator_context(x, std::get<EstimatorKind>(mode), variance_floor_scale);
  }

  auto estimate = [&](const LabelStats& stats) {
    if (known) {
      PlugInEstimate est;
      est.impulse_count = stats.impulse_count;
      est.params = {known->fixed_rho.value_or(static_cast<double>(stats.impulse_count) /
                                              static_cast<double>(stats.n)),
                    known->sigma1_sq, known->sigma2_sq};
      return est;
    }
    return estimate_from_stats(stats, std::get<EstimatorKind>(mode), ctx);
  };

  DetectionResult result;
  result.labels = std::move(initial);
  const std::size_t limit = max_iterations.value_or(4 * x.size());

  LabelStats stats = label_stats(x, result.labels);
  PlugInEstimate est = estimate(stats);
  double score = log_posterior_from_stats(stats, est.params);

  while (true) {
    double best_score = score;
    std::size_t best_index = x.size();
    PlugInEstimate best_est;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double sq = x[i] * x[i];
      LabelStats flipped = stats;
      if (result.labels[i]) {
        --flipped.impulse_count;
        flipped.impulse_sum_sq -= sq;
        flipped.background_sum_sq += sq;
      } else {
        ++flipped.impulse_count;
        flipped.impulse_sum_sq += sq;
        flipped.background_sum_sq -= sq;
      }
      // Guards against negative residues from the subtraction.
      flipped.impulse_sum_sq = std::max(flipped.impulse_sum_sq, 0.0);
      flipped.background_sum_sq = std::max(flipped.background_sum_sq, 0.0);
      const PlugInEstimate candidate_est = estimate(flipped);
      const double candidate = log_posterior_from_stats(flipped, candidate_est.params);
      if (candidate > best_score) {
        best_score = candidate;
        best_index = i;
        best_est = candidate_est;
      }
    }
    if (best_index == x.size()) {
      result.converged = true;
      break;
    }
    if (result.loops == limit) break;
    result.labels[best_index] ^= 1;
    ++result.loops;
    // Rebuilt from scratch so that repeated add/subtract cannot drift.
    stats = label_stats(x, result.labels);
    est = estimate(stats);
    score = log_posterior_from_stats(stats, est.params);
  }

  result.estimate = est;
  result.log_score = score;
  return result;
}

MapResult exhaustive_map(std::span<const double> x, const KnownGaussians& gaussians) {
  validate_samples(x);
  gaussians.validate();
  const std::size_t n = x.size();
  if (n > kMaxExhaustiveLength) {
    throw CapacityError("exhaustive search supports at most " +
                        std::to_string(kMaxExhaustiveLength) + " samples, got " +
                        std::to_string(n));
  }

  const NoiseParams params{0.0, gaussians.sigma1_sq, gaussians.sigma2_sq};
  std::vector<double> background(n);
  std::vector<double> impulse(n);
  for (std::size_t i = 0; i < n; ++i) {
    background[i] = conditional_log_pdf(x[i], 0, params);
    impulse[i] = conditional_log_pdf(x[i], 1, params);
  }

  // True when labeling a precedes b lexicographically (label 0 < label 1).
  auto lexicographically_less = [n](std::uint32_t a, std::uint32_t b) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool ai = (a >> i) & 1u;
      const bool bi = (b >> i) & 1u;
      if (ai != bi) return !ai;
    }
    return false;
  };

  const std::uint32_t total = std::uint32_t{1} << n;
  std::uint32_t best_mask = 0;
  double best_score = -kInf;
  int best_count = 0;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += (mask >> i) & 1u ? impulse[i] : background[i];
    const int k = std::popcount(mask);
    const double rho = gaussians.fixed_rho.value_or(static_cast<double>(k) /
                                                    static_cast<double>(n));
    const double score = sum + log_prior(static_cast<std::size_t>(k), n, rho);
    const bool better =
        score > best_score ||
        (score == best_score &&
         (k < best_count || (k == best_count && lexicographically_less(mask, best_mask))));
    if (mask == 0 || better) {
      best_mask = mask;
      best_score = score;
      best_count = k;
    }
  }

  MapResult out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = (best_mask >> i) & 1u;
  out.log_score = best_score;
  return out;
}

DetectionResult three_sigma_baseline(std::span<const double> x,
                                     double variance_floor_scale) {
  validate_samples(x);
  DetectionResult result;
  const double t = threshold_three_sigma(x);
  result.threshold_trace.push_back(t);
  result.labels = classify_threshold(x, t);
  result.estimate = estimate_robust(x, result.labels, variance_floor_scale);
  result.log_score = log_posterior(x, result.labels, result.estimate);
  result.loops = 0;
  result.converged = true;
  return result;
}

}  // namespace bgi
