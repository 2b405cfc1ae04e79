#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "bgi/core.hpp"
#include "bgi/errors.hpp"

using bgi::NoiseParams;

namespace {

double sample_variance_zero_mean(const bgi::Samples& x) { return oracle::mean_square(x); }

}  // namespace

TEST_CASE("generate: rho = 0 yields pure background") {
  const auto g = bgi::generate({0.0, 1.0, 100.0}, 1000, 7);
  CHECK(bgi::count_impulses(g.truth) == 0);
  CHECK(std::abs(sample_variance_zero_mean(g.observations) - 1.0) <= 3.0 * std::sqrt(2.0 / 1000));
}

TEST_CASE("generate: rho = 1 yields pure impulses") {
  const auto g = bgi::generate({1.0, 1.0, 100.0}, 1000, 7);
  CHECK(bgi::count_impulses(g.truth) == 1000);
  CHECK(std::abs(sample_variance_zero_mean(g.observations) - 101.0) <=
        3.0 * 101.0 * std::sqrt(2.0 / 1000));
}

TEST_CASE("generate: impulse fraction concentrates around rho") {
  const double rho = 1e-3;
  const std::size_t n = 100000;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto g = bgi::generate({rho, 1.0, 1e4}, n, seed);
    const double fraction = static_cast<double>(bgi::count_impulses(g.truth)) / n;
    CHECK(std::abs(fraction - rho) <= 3.0 * std::sqrt(rho * (1 - rho) / n));
  }
}

TEST_CASE("generate: deterministic per seed") {
  const NoiseParams p{0.01, 1.0, 1e3};
  CHECK(bgi::generate(p, 5000, 42) == bgi::generate(p, 5000, 42));
  CHECK(bgi::generate(p, 5000, 42).observations != bgi::generate(p, 5000, 43).observations);
}

TEST_CASE("generate: rejects invalid parameters") {
  CHECK_THROWS_AS(bgi::generate({1.5, 1.0, 10.0}, 10, 1), bgi::ParameterDomainError);
  CHECK_THROWS_AS(bgi::generate({-0.1, 1.0, 10.0}, 10, 1), bgi::ParameterDomainError);
  CHECK_THROWS_AS(bgi::generate({0.1, 0.0, 10.0}, 10, 1), bgi::ParameterDomainError);
  CHECK_THROWS_AS(bgi::generate({0.1, 2.0, 1.0}, 10, 1), bgi::ParameterDomainError);
  CHECK_THROWS_AS(bgi::generate({0.1, 1.0, 10.0}, 0, 1), bgi::EmptyInputError);
  CHECK_NOTHROW(NoiseParams({0.1, 2.0, 1.0}).validate(NoiseParams::Check::kRelaxed));
}

TEST_CASE("generate: class-conditional variances match the model") {
  for (double rho : {0.2, 0.5, 0.8}) {
    const NoiseParams p{rho, 2.0, 30.0};
    const auto g = bgi::generate(p, 100000, 11);
    long double s0 = 0, s1 = 0;
    std::size_t m0 = 0, m1 = 0;
    for (std::size_t i = 0; i < g.observations.size(); ++i) {
      const long double sq = g.observations[i] * g.observations[i];
      if (g.truth[i]) {
        s1 += sq;
        ++m1;
      } else {
        s0 += sq;
        ++m0;
      }
    }
    const double v0 = static_cast<double>(s0 / m0);
    const double v1 = static_cast<double>(s1 / m1);
    CHECK(std::abs(v0 - 2.0) <= 5.0 * 2.0 * std::sqrt(2.0 / m0));
    CHECK(std::abs(v1 - 32.0) <= 5.0 * 32.0 * std::sqrt(2.0 / m1));
  }
}

TEST_CASE("mixture_pdf: point values") {
  // 0.5 / sqrt(2 pi) + 0.5 / sqrt(8 pi)
  CHECK(bgi::mixture_pdf(0.0, {0.5, 1.0, 3.0}) == doctest::Approx(0.29920671030107454).epsilon(1e-12));
  for (double x : {-3.0, 0.0, 0.7, 12.0}) {
    CHECK(bgi::mixture_pdf(x, {0.0, 1.0, 50.0}) == bgi::gaussian_pdf(x, 1.0));
  }
}

TEST_CASE("mixture_pdf: background term carries weight 1 - rho") {
  // At the origin the narrow background component dominates, so a small rho
  // must give a density close to the standard normal peak.
  const double p = bgi::mixture_pdf(0.0, {0.01, 1.0, 1e4});
  CHECK(p == doctest::Approx(0.99 * oracle::normal_density(0, 1) +
                             0.01 * oracle::normal_density(0, 1e4 + 1))
                 .epsilon(1e-12));
}

TEST_CASE("mixture_pdf: integrates to one") {
  for (const NoiseParams& p : {NoiseParams{0.3, 1.0, 3.0}, NoiseParams{0.01, 1.0, 100.0},
                               NoiseParams{0.5, 0.5, 20.0}}) {
    const double sigma = std::sqrt(p.sigma1_sq + p.sigma2_sq);
    const double integral = oracle::simpson([&](double x) { return bgi::mixture_pdf(x, p); },
                                            -50.0 * sigma, 50.0 * sigma, 400000);
    CHECK(std::abs(integral - 1.0) <= 1e-8);
  }
}

TEST_CASE("conditional_log_pdf: point values") {
  CHECK(bgi::conditional_log_pdf(0.0, 0, {0.5, 1.0, 3.0}) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  // -log(8 pi) / 2 - 1/8
  CHECK(bgi::conditional_log_pdf(1.0, 1, {0.5, 1.0, 3.0}) ==
        doctest::Approx(-1.737085713764618).epsilon(1e-14));
  // Stays finite where the linear-domain density underflows.
  CHECK(std::isfinite(bgi::conditional_log_pdf(1e3, 0, {0.1, 1.0, 10.0})));
}

TEST_CASE("property: mixture decomposition and symmetry") {
  std::mt19937_64 engine(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double s1 = 0.1 + 10.0 * unit(engine);
    const NoiseParams p{unit(engine), s1, s1 * (1.0 + 1e4 * unit(engine))};
    const double x = (unit(engine) - 0.5) * 20.0 * std::sqrt(s1);
    const double direct = bgi::mixture_pdf(x, p);
    const double decomposed = (1 - p.rho) * std::exp(bgi::conditional_log_pdf(x, 0, p)) +
                              p.rho * std::exp(bgi::conditional_log_pdf(x, 1, p));
    CHECK(std::abs(direct - decomposed) <= 1e-12 * direct);
    CHECK(bgi::mixture_pdf(-x, p) == direct);
  }
}

TEST_CASE("validate_samples and validate_labels") {
  CHECK_THROWS_AS(bgi::validate_samples(bgi::Samples{}), bgi::EmptyInputError);
  CHECK_THROWS_AS(bgi::validate_samples(bgi::Samples{1.0, NAN}), bgi::ParameterDomainError);
  CHECK_THROWS_AS(bgi::validate_labels(bgi::Labels{0, 2}), bgi::ParameterDomainError);
  CHECK(bgi::count_impulses(bgi::Labels{1, 0, 1, 1}) == 3);
}
