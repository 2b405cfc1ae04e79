#include "bgi/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "bgi/errors.hpp"

namespace bgi {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

}  // namespace

void NoiseParams::validate(Check check) const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ParameterDomainError("rho must lie in [0, 1], got " +
                               std::to_string(rho));
  }
  if (!(sigma1_sq > 0.0) || !std::isfinite(sigma1_sq)) {
    throw ParameterDomainError("sigma1_sq must be positive and finite, got " +
                               std::to_string(sigma1_sq));
  }
  if (!(sigma2_sq > 0.0) || !std::isfinite(sigma2_sq)) {
    throw ParameterDomainError("sigma2_sq must be positive and finite, got " +
                               std::to_string(sigma2_sq));
  }
  if (check == Check::kStrict && !(sigma2_sq > sigma1_sq)) {
    throw ParameterDomainError(
        "sigma2_sq must exceed sigma1_sq (impulse power above background)");
  }
}

GeneratedNoise generate(const NoiseParams& params, std::size_t n,
                        std::uint64_t seed) {
  params.validate();
  if (n == 0) throw EmptyInputError("generate: n must be at least 1");

  GeneratedNoise out;
  out.params = params;
  out.seed = seed;
  out.observations.resize(n);
  out.truth.resize(n);

  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double background_sd = std::sqrt(params.sigma1_sq);
  const double impulse_sd = std::sqrt(params.sigma1_sq + params.sigma2_sq);

  for (std::size_t k = 0; k < n; ++k) {
    const bool impulse = uniform(engine) < params.rho;
    out.truth[k] = impulse ? 1 : 0;
    out.observations[k] = normal(engine) * (impulse ? impulse_sd : background_sd);
  }
  return out;
}

double gaussian_pdf(double x, double variance) {
  return std::exp(-0.5 * x * x / variance) /
         std::sqrt(2.0 * std::numbers::pi * variance);
}

double mixture_pdf(double x, const NoiseParams& params) {
  return (1.0 - params.rho) * gaussian_pdf(x, params.sigma1_sq) +
         params.rho * gaussian_pdf(x, params.sigma1_sq + params.sigma2_sq);
}

double conditional_log_pdf(double x, std::uint8_t label,
                           const NoiseParams& params) {
  const double v = label ? params.sigma1_sq + params.sigma2_sq : params.sigma1_sq;
  return -0.5 * (kLogTwoPi + std::log(v)) - 0.5 * x * x / v;
}

void validate_samples(std::span<const double> x) {
  if (x.empty()) throw EmptyInputError("observation sequence is empty");
  const auto bad = std::find_if(x.begin(), x.end(),
                                [](double v) { return !std::isfinite(v); });
  if (bad != x.end()) {
    throw ParameterDomainError("non-finite sample at index " +
                               std::to_string(bad - x.begin()));
  }
}

void validate_labels(std::span<const std::uint8_t> labels) {
  const auto bad = std::find_if(labels.begin(), labels.end(),
                                [](std::uint8_t v) { return v > 1; });
  if (bad != labels.end()) {
    throw ParameterDomainError("label at index " +
                               std::to_string(bad - labels.begin()) +
                               " is not 0 or 1");
  }
}

std::size_t count_impulses(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

}  // namespace bgi
