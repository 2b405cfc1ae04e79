#include "bgi/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bgi/errors.hpp"

namespace bgi {

namespace {

// Median of `values`, reordering them in place.
double median_in_place(std::vector<double>& values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  // The lower central order statistic is the largest element left of mid.
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double median(std::span<const double> data) {
  if (data.empty()) throw EmptyInputError("median of an empty sequence");
  std::vector<double> values(data.begin(), data.end());
  return median_in_place(values);
}

RobustScale mad(std::span<const double> data) {
  if (data.empty()) throw EmptyInputError("MAD of an empty sequence");
  std::vector<double> work(data.begin(), data.end());
  const double center = median_in_place(work);
  for (std::size_t i = 0; i < data.size(); ++i) work[i] = std::abs(data[i] - center);
  const double m = median_in_place(work);
  return {m, kMadToSigma * m};
}

double gini(std::span<const double> data) {
  if (data.empty()) throw EmptyInputError("Gini index of an empty sequence");
  std::vector<double> sorted(data.begin(), data.end());
  long double l1 = 0.0L;
  for (double v : sorted) {
    if (v < 0.0 || std::isnan(v)) {
      throw ParameterDomainError("Gini index requires nonnegative values, got " +
                                 std::to_string(v));
    }
    l1 += v;
  }
  if (l1 == 0.0L) {
    throw DegenerateInputError("Gini index undefined for an all-zero sequence");
  }
  std::sort(sorted.begin(), sorted.end());

  const auto n = static_cast<long double>(sorted.size());
  long double weighted = 0.0L;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto rank = static_cast<long double>(i + 1);
    weighted += sorted[i] * (n - rank + 0.5L);
  }
  const long double s = 1.0L - 2.0L * weighted / (l1 * n);
  return std::clamp(static_cast<double>(s), 0.0, 1.0);
}

double threshold_three_sigma(std::span<const double> data) {
  return kThreeSigmaMadFactor * mad(data).mad;
}

double threshold_ssi(std::span<const double> data, double coefficient) {
  if (!(coefficient > 0.0)) {
    throw ParameterDomainError("SSI coefficient must be positive");
  }
  const RobustScale scale = mad(data);
  std::vector<double> magnitudes(data.size());
  std::transform(data.begin(), data.end(), magnitudes.begin(),
                 [](double v) { return std::abs(v); });
  return coefficient * gini(magnitudes) * scale.sigma_hat;
}

}  // namespace bgi
