#ifndef BGI_ROBUST_STATS_HPP
#define BGI_ROBUST_STATS_HPP

#include <span>

namespace bgi {

/// Gaussian consistency factor relating the MAD to the standard deviation.
/// Fixed at the printed four-decimal value, not the exact 1/Phi^-1(3/4).
inline constexpr double kMadToSigma = 1.4826;

/// 3 * kMadToSigma.
inline constexpr double kThreeSigmaMadFactor = 4.4478;

inline constexpr double kDefaultSsiCoefficient = 10.0;

struct RobustScale {
  double mad = 0.0;
  /// kMadToSigma * mad.
  double sigma_hat = 0.0;
};

/// Median of a non-empty sequence. Even lengths average the two central
/// order statistics. Uses selection, not a full sort.
double median(std::span<const double> data);

/// Median absolute deviation about the median. Throws EmptyInputError on
/// empty input.
RobustScale mad(std::span<const double> data);

/// Gini sparsity index of a nonnegative sequence with ascending ranks
/// k = 1..N and weights (N - k + 1/2) / N. The result lies in [0, 1 - 1/N]:
/// 0 for a constant vector, 1 - 1/N for a one-hot vector.
///
/// Throws ParameterDomainError on negative values, DegenerateInputError when
/// every value is zero and EmptyInputError on empty input.
double gini(std::span<const double> data);

/// Three-sigma initial threshold, kThreeSigmaMadFactor * MAD(data).
double threshold_three_sigma(std::span<const double> data);

/// Sparsity-sensitive initial threshold,
/// coefficient * gini(|data|) * kMadToSigma * MAD(data).
/// With the default coefficient of 10 this is 14.826 * gini(|x|) * MAD(x).
double threshold_ssi(std::span<const double> data,
                     double coefficient = kDefaultSsiCoefficient);

}  // namespace bgi

#endif  // BGI_ROBUST_STATS_HPP
