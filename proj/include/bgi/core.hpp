#ifndef BGI_CORE_HPP
#define BGI_CORE_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace bgi {

/// Real-valued noise samples. Must be non-empty and finite wherever a
/// routine consumes them.
using Samples = std::vector<double>;

/// Binary impulse indicators, one per sample (1 = impulse state).
using Labels = std::vector<std::uint8_t>;

/// Parameters of a Bernoulli-Gaussian process.
///
/// A sample is N(0, sigma1_sq) in the background state and
/// N(0, sigma1_sq + sigma2_sq) in the impulse state, the state being drawn
/// i.i.d. Bernoulli(rho). sigma2_sq is the excess (impulsive) power, never
/// the total impulse-state variance.
struct NoiseParams {
  double rho = 0.0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;

  enum class Check {
    /// 0 <= rho <= 1, sigma1_sq > 0, sigma2_sq > 0. Used for intermediate
    /// estimates.
    kRelaxed,
    /// Additionally sigma2_sq > sigma1_sq. Used for generation and final
    /// reported estimates.
    kStrict,
  };

  /// Throws ParameterDomainError when an invariant does not hold.
  void validate(Check check = Check::kStrict) const;

  bool operator==(const NoiseParams&) const = default;
};

/// Observations paired with the latent Bernoulli states that produced them.
struct GeneratedNoise {
  Samples observations;
  Labels truth;
  NoiseParams params;
  std::uint64_t seed = 0;

  bool operator==(const GeneratedNoise&) const = default;
};

/// Draws n samples of the process. Bit-identical for identical arguments.
GeneratedNoise generate(const NoiseParams& params, std::size_t n,
                        std::uint64_t seed);

/// Zero-mean Gaussian density with the given variance.
double gaussian_pdf(double x, double variance);

/// Mixture density (1 - rho) N(x; 0, s1) + rho N(x; 0, s1 + s2).
double mixture_pdf(double x, const NoiseParams& params);

/// log N(x; 0, sigma1_sq + label * sigma2_sq), evaluated in the log domain.
double conditional_log_pdf(double x, std::uint8_t label,
                           const NoiseParams& params);

/// Throws EmptyInputError for empty input and ParameterDomainError for
/// non-finite samples.
void validate_samples(std::span<const double> x);

/// Throws ParameterDomainError for any value other than 0 or 1.
void validate_labels(std::span<const std::uint8_t> labels);

/// Number of ones in labels.
std::size_t count_impulses(std::span<const std::uint8_t> labels);

}  // namespace bgi

#endif  // BGI_CORE_HPP
