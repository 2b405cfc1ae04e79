#include "bgi/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bgi/errors.hpp"
#include "bgi/robust_stats.hpp"

namespace bgi {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_shape(std::span<const double> x, std::span<const std::uint8_t> labels) {
  if (x.size() != labels.size()) {
    throw ShapeError("observation length " + std::to_string(x.size()) +
                     " does not match label length " +
                     std::to_string(labels.size()));
  }
}

// n * log N(.; 0, v) summed over samples whose squares sum to sum_sq.
double gaussian_block_log_density(std::size_t count, double sum_sq, double v) {
  if (count == 0) return 0.0;
  return -0.5 * static_cast<double>(count) * (kLogTwoPi + std::log(v)) -
         0.5 * sum_sq / v;
}

}  // namespace

double variance_floor(std::span<const double> x, double scale) {
  validate_samples(x);
  long double sum_sq = 0.0L;
  for (double v : x) sum_sq += static_cast<long double>(v) * v;
  const double floor = scale * static_cast<double>(sum_sq / x.size());
  if (!(floor > 0.0)) {
    throw DegenerateInputError(
        "variance floor is zero: the observation sequence is identically zero");
  }
  return floor;
}

double robust_background_variance(std::span<const double> x, double floor) {
  const double sigma = mad(x).sigma_hat;
  return std::max(sigma * sigma, floor);
}

EstimatorContext make_estimator_context(std::span<const double> x,
                                        EstimatorKind kind, double floor_scale) {
  EstimatorContext ctx;
  ctx.floor = variance_floor(x, floor_scale);
  if (kind == EstimatorKind::kRobust) {
    ctx.robust_sigma1_sq = robust_background_variance(x, ctx.floor);
  }
  for (double v : x) ctx.max_sq = std::max(ctx.max_sq, v * v);
  return ctx;
}

LabelStats label_stats(std::span<const double> x,
                       std::span<const std::uint8_t> labels) {
  check_shape(x, labels);
  long double background = 0.0L;
  long double impulse = 0.0L;
  LabelStats stats;
  stats.n = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double sq = static_cast<long double>(x[i]) * x[i];
    if (labels[i]) {
      impulse += sq;
      ++stats.impulse_count;
    } else {
      background += sq;
    }
  }
  stats.background_sum_sq = static_cast<double>(background);
  stats.impulse_sum_sq = static_cast<double>(impulse);
  return stats;
}

PlugInEstimate estimate_from_stats(const LabelStats& stats, EstimatorKind kind,
                                   const EstimatorContext& ctx) {
  const std::size_t n = stats.n;
  const std::size_t k = stats.impulse_count;
  PlugInEstimate est;
  est.impulse_count = k;
  est.params.rho = static_cast<double>(k) / static_cast<double>(n);

  double sigma1_sq = ctx.floor;
  if (kind == EstimatorKind::kRobust) {
    sigma1_sq = ctx.robust_sigma1_sq;
  } else if (k < n) {
    sigma1_sq = std::max(stats.background_sum_sq / static_cast<double>(n - k), ctx.floor);
  } else {
    est.degenerate = true;
  }

  double sigma2_sq = 0.0;
  if (k > 0) {
    sigma2_sq = stats.impulse_sum_sq / static_cast<double>(k) - sigma1_sq;
  } else {
    sigma2_sq = ctx.max_sq - sigma1_sq;
    est.degenerate = true;
  }
  est.params.sigma1_sq = sigma1_sq;
  est.params.sigma2_sq = std::max(sigma2_sq, ctx.floor);
  return est;
}

PlugInEstimate estimate_ergodic(std::span<const double> x,
                                std::span<const std::uint8_t> labels,
                                double floor_scale) {
  const LabelStats stats = label_stats(x, labels);
  return estimate_from_stats(
      stats, EstimatorKind::kErgodic,
      make_estimator_context(x, EstimatorKind::kErgodic, floor_scale));
}

PlugInEstimate estimate_robust(std::span<const double> x,
                               std::span<const std::uint8_t> labels,
                               double floor_scale) {
  const LabelStats stats = label_stats(x, labels);
  return estimate_from_stats(
      stats, EstimatorKind::kRobust,
      make_estimator_context(x, EstimatorKind::kRobust, floor_scale));
}

double log_prior(std::size_t impulse_count, std::size_t n, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ParameterDomainError("rho must lie in [0, 1]");
  }
  const auto k = static_cast<double>(impulse_count);
  const auto m = static_cast<double>(n - impulse_count);
  const double impulse_term = impulse_count == 0 ? 0.0 : k * std::log(rho);
  const double background_term = impulse_count == n ? 0.0 : m * std::log1p(-rho);
  return impulse_term + background_term;
}

double log_prior(std::span<const std::uint8_t> labels, double rho) {
  return log_prior(count_impulses(labels), labels.size(), rho);
}

double log_posterior(std::span<const double> x,
                     std::span<const std::uint8_t> labels,
                     const PlugInEstimate& est) {
  check_shape(x, labels);
  long double total = log_prior(labels, est.params.rho);
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += conditional_log_pdf(x[i], labels[i], est.params);
  }
  return static_cast<double>(total);
}

double log_posterior_from_stats(const LabelStats& stats,
                                const NoiseParams& params) {
  const std::size_t k = stats.impulse_count;
  return log_prior(k, stats.n, params.rho) +
         gaussian_block_log_density(stats.n - k, stats.background_sum_sq,
                                    params.sigma1_sq) +
         gaussian_block_log_density(k, stats.impulse_sum_sq,
                                    params.sigma1_sq + params.sigma2_sq);
}

}  // namespace bgi
