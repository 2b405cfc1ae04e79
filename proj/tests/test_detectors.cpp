#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "bgi/core.hpp"
#include "bgi/detectors.hpp"
#include "bgi/errors.hpp"
#include "bgi/posterior.hpp"

using bgi::Labels;
using V = std::vector<double>;

namespace {

bgi::DetectorConfig fixed_init(double t0) {
  bgi::DetectorConfig cfg;
  cfg.init = bgi::InitFixed{t0};
  return cfg;
}

/// Plug-in score of a labeling under fixed Gaussians, rho re-estimated.
double known_score(const V& x, const Labels& labels, double s1, double s2) {
  return oracle::plug_in_rho_log_density(x, labels, s1, s2);
}

/// Plug-in score of a labeling under a blind estimator, via the library's
/// slow path.
double blind_score(const V& x, const Labels& labels, bgi::EstimatorKind kind) {
  const auto est = kind == bgi::EstimatorKind::kErgodic ? bgi::estimate_ergodic(x, labels)
                                                        : bgi::estimate_robust(x, labels);
  return bgi::log_posterior(x, labels, est);
}

}  // namespace

TEST_CASE("classify_threshold") {
  CHECK(bgi::classify_threshold(V{-5, 0.5, 2, -2}, 2.0) == Labels{1, 0, 1, 1});
  CHECK(bgi::classify_threshold(V{1, 2}, INFINITY) == Labels{0, 0});
  CHECK(bgi::classify_threshold(V{0, 1}, 0.0) == Labels{1, 1});
}

TEST_CASE("magnitude ladder groups ties") {
  const bgi::MagnitudeLadder ladder(V{1, -3, 3, 0.5, 2});
  CHECK(ladder.size() == 5);
  CHECK(ladder.levels() == 4);
  CHECK(ladder.count_at(0) == 0);
  CHECK(ladder.count_at(1) == 2);
  CHECK(ladder.count_at(4) == 5);
  CHECK(ladder.threshold_at(0) == INFINITY);
  CHECK(ladder.threshold_at(1) == 3.0);
  CHECK(ladder.threshold_at(2) == 2.0);
  CHECK(ladder.level_for_threshold(2.5) == 1);
  CHECK(ladder.level_for_threshold(2.0) == 2);
  CHECK(ladder.level_for_threshold(0.0) == 4);
  CHECK(ladder.level_for_threshold(10.0) == 0);
  CHECK(ladder.labels_at(2) == Labels{0, 1, 1, 0, 1});
  const auto stats = ladder.stats_at(2);
  CHECK(stats.impulse_count == 3);
  CHECK(stats.impulse_sum_sq == 22.0);
  CHECK(stats.background_sum_sq == 1.25);
}

TEST_CASE("its_known: three-sample example") {
  const V x{0.1, 0.2, 50.0};
  const bgi::KnownGaussians g{1.0, 100.0, std::nullopt};
  const auto r = bgi::its_known(x, g, fixed_init(100.0));
  CHECK(r.labels == Labels{0, 0, 1});
  CHECK(r.converged);
  CHECK(r.threshold_trace.front() == 100.0);
  CHECK(r.final_threshold() == 50.0);
  CHECK(r.loops == 2);
  // Brute force over the thresholded labelings.
  double best = -INFINITY;
  Labels best_labels;
  for (double t : {double(INFINITY), 50.0, 0.2, 0.1}) {
    const auto labels = bgi::classify_threshold(x, t);
    const double s = known_score(x, labels, 1.0, 100.0);
    if (s > best) {
      best = s;
      best_labels = labels;
    }
  }
  CHECK(best_labels == r.labels);
  CHECK(r.log_score == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("its_known: few false alarms on pure background") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = oracle::standard_normal(1000, 500 + seed);
    bgi::DetectorConfig cfg;
    cfg.init = bgi::InitThreeSigma{};
    const auto r = bgi::its_known(x, {1.0, 1e4, std::nullopt}, cfg);
    CHECK(bgi::count_impulses(r.labels) <= 10);
  }
}

TEST_CASE("its_known: terminates from an all-impulse start") {
  const auto g = bgi::generate({0.01, 1.0, 1e3}, 2000, 3);
  const auto r = bgi::its_known(g.observations, {1.0, 1e3, std::nullopt}, fixed_init(0.0));
  CHECK(r.converged);
  CHECK(r.loops <= g.observations.size());
  CHECK(oracle::is_thresholded(g.observations, r.labels));
}

TEST_CASE("its_blind: rejects unusable input") {
  CHECK_THROWS_AS(bgi::its_blind(V{0, 0, 0}), bgi::DegenerateInputError);
  CHECK_THROWS_AS(bgi::its_blind(V{1.0}), bgi::EmptyInputError);
  CHECK_THROWS_AS(bgi::its_blind(V{}), bgi::EmptyInputError);
  CHECK_THROWS_AS(bgi::its_blind(V{1, NAN}), bgi::ParameterDomainError);
  bgi::DetectorConfig bad;
  bad.ssi_coefficient = -1;
  CHECK_THROWS_AS(bgi::its_blind(V{1, 2, 3}, bad), bgi::ParameterDomainError);
}

TEST_CASE("its_blind: pure background yields a near-zero rate") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = bgi::generate({0.0, 1.0, 1e4}, 10000, 900 + seed);
    const auto r = bgi::its_blind(g.observations);
    CHECK(r.estimate.params.rho <= 1e-3);
  }
}

TEST_CASE("its_blind: deterministic across threads") {
  const auto g = bgi::generate({1e-3, 1.0, 1e4}, 100000, 12);
  const auto reference = bgi::its_blind(g.observations);
  std::vector<bgi::DetectionResult> results(4);
  {
    std::vector<std::jthread> threads;
    for (auto& slot : results) {
      threads.emplace_back([&] { slot = bgi::its_blind(g.observations); });
    }
  }
  for (const auto& r : results) {
    CHECK(r.labels == reference.labels);
    CHECK(r.threshold_trace == reference.threshold_trace);
    CHECK(r.loops == reference.loops);
  }
}

TEST_CASE("its_blind: score at the final state matches full recomputation") {
  const auto g = bgi::generate({1e-3, 1.0, 1e4}, 100000, 13);
  for (auto kind : {bgi::EstimatorKind::kRobust, bgi::EstimatorKind::kErgodic}) {
    bgi::DetectorConfig cfg;
    cfg.estimator = kind;
    const auto r = bgi::its_blind(g.observations, cfg);
    CHECK(std::abs(r.log_score - blind_score(g.observations, r.labels, kind)) <= 1e-6);
  }
}

TEST_CASE("property: closed-form and full-recompute paths take the same steps") {
  std::mt19937_64 engine(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_instance(engine, 2, trial < 150 ? 60 : 2000);
    for (auto kind : {bgi::EstimatorKind::kRobust, bgi::EstimatorKind::kErgodic}) {
      bgi::DetectorConfig fast;
      fast.estimator = kind;
      fast.init = trial % 2 ? bgi::InitRule{bgi::InitThreeSigma{}} : bgi::InitRule{bgi::InitSsi{}};
      bgi::DetectorConfig slow = fast;
      slow.scoring = bgi::ScoringPath::kFullRecompute;
      const auto a = bgi::its_blind(inst.x, fast);
      const auto b = bgi::its_blind(inst.x, slow);
      CHECK(a.labels == b.labels);
      CHECK(a.threshold_trace == b.threshold_trace);
      CHECK(a.loops == b.loops);
      CHECK(std::abs(a.log_score - b.log_score) <= 1e-6);
    }
  }
}

TEST_CASE("property: thresholded output, bounded loops and monotone ascent") {
  std::mt19937_64 engine(41);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_instance(engine, 2, 300);
    const auto& x = inst.x;
    const bgi::MagnitudeLadder ladder(x);
    const auto kind = trial % 2 ? bgi::EstimatorKind::kErgodic : bgi::EstimatorKind::kRobust;
    bgi::DetectorConfig cfg;
    cfg.estimator = kind;
    const auto r = bgi::its_blind(x, cfg);
    CHECK(oracle::is_thresholded(x, r.labels));
    CHECK(r.loops <= ladder.levels() + 1);
    CHECK(r.loops <= x.size());
    CHECK(r.threshold_trace.size() == r.loops);
    double previous = -INFINITY;
    for (double t : r.threshold_trace) {
      const double s = blind_score(x, bgi::classify_threshold(x, t), kind);
      CHECK(s > previous - 1e-9);
      previous = s;
    }

    const auto k = bgi::its_known(x, {inst.sigma1_sq, inst.sigma2_sq, std::nullopt});
    CHECK(oracle::is_thresholded(x, k.labels));
    CHECK(k.loops <= ladder.levels() + 1);
  }
}

TEST_CASE("max_loops caps the run and clears converged") {
  const auto g = bgi::generate({0.01, 1.0, 1e3}, 5000, 4);
  bgi::DetectorConfig cfg = fixed_init(1e9);
  cfg.max_loops = 3;
  const auto r = bgi::its_blind(g.observations, cfg);
  CHECK(r.loops == 3);
  CHECK_FALSE(r.converged);
  CHECK(r.threshold_trace.size() == 4);
  CHECK(bgi::its_blind(g.observations, fixed_init(1e9)).loops > 3);
}

TEST_CASE("exhaustive_map: examples and capacity") {
  const V x{0.1, 0.2, 50.0};
  const auto m = bgi::exhaustive_map(x, {1.0, 100.0, std::nullopt});
  CHECK(m.labels == Labels{0, 0, 1});
  CHECK(m.log_score == doctest::Approx(known_score(x, m.labels, 1.0, 100.0)).epsilon(1e-12));
  CHECK_THROWS_AS(bgi::exhaustive_map(V(21, 1.0), {1.0, 100.0, std::nullopt}), bgi::CapacityError);
  CHECK_NOTHROW(bgi::exhaustive_map(V(20, 1.0), {1.0, 100.0, std::nullopt}));
}

TEST_CASE("property: exhaustive optimum is thresholded and reached by ITS") {
  std::mt19937_64 engine(51);
  for (int trial = 0; trial < 150; ++trial) {
    const auto inst = oracle::random_instance(engine, 1, 12);
    const auto& x = inst.x;
    const bool fixed = trial % 2 == 0;
    bgi::KnownGaussians g{inst.sigma1_sq, inst.sigma2_sq, std::nullopt};
    if (fixed) g.fixed_rho = inst.rho;
    const auto best = bgi::exhaustive_map(x, g);
    CHECK(oracle::is_thresholded(x, best.labels));

    // Independent brute force.
    double brute = -INFINITY;
    for (unsigned mask = 0; mask < (1u << x.size()); ++mask) {
      Labels labels(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) labels[i] = (mask >> i) & 1;
      brute = std::max(brute, fixed ? oracle::joint_log_density(x, labels, inst.rho, inst.sigma1_sq,
                                                                 inst.sigma2_sq)
                                    : known_score(x, labels, inst.sigma1_sq, inst.sigma2_sq));
    }
    CHECK(best.log_score == doctest::Approx(brute).epsilon(1e-12));

    double reached = -INFINITY;
    std::set<double> starts{INFINITY};
    for (double v : x) starts.insert(std::abs(v));
    for (double t : starts) reached = std::max(reached, bgi::its_known(x, g, fixed_init(t)).log_score);
    CHECK(std::abs(reached - best.log_score) <= 1e-9 * std::max(1.0, std::abs(best.log_score)));
  }
}

TEST_CASE("smlr: examples") {
  const V x{0.1, 0.2, 50.0};
  const bgi::KnownGaussians g{1.0, 100.0, std::nullopt};
  const auto r = bgi::smlr(x, g, Labels{0, 0, 0});
  CHECK(r.labels == Labels{0, 0, 1});
  CHECK(r.loops == 1);
  CHECK(r.converged);
  CHECK(r.threshold_trace.empty());
  const auto again = bgi::smlr(x, g, r.labels);
  CHECK(again.loops == 0);
  CHECK(again.labels == r.labels);
  CHECK_THROWS_AS(bgi::smlr(x, g, Labels{0, 0}), bgi::ShapeError);
}

TEST_CASE("smlr: blind mode ends at a local maximum") {
  const auto gen = bgi::generate({0.02, 1.0, 1e3}, 500, 8);
  const auto& x = gen.observations;
  const auto r = bgi::smlr(x, bgi::EstimatorKind::kRobust, Labels(x.size(), 0));
  CHECK(r.converged);
  const double s = blind_score(x, r.labels, bgi::EstimatorKind::kRobust);
  CHECK(std::abs(r.log_score - s) <= 1e-6 * std::abs(s));
  for (std::size_t i = 0; i < x.size(); ++i) {
    Labels flipped = r.labels;
    flipped[i] ^= 1;
    CHECK(blind_score(x, flipped, bgi::EstimatorKind::kRobust) <= s + 1e-9 * std::abs(s));
  }
}

TEST_CASE("property: ITS is no worse than SMLR from the same start") {
  std::mt19937_64 engine(61);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = oracle::random_instance(engine, 12, 12);
    const auto& x = inst.x;
    const bgi::KnownGaussians g{inst.sigma1_sq, inst.sigma2_sq, std::nullopt};
    bgi::DetectorConfig cfg;
    cfg.init = bgi::InitThreeSigma{};
    const double t0 = bgi::initial_threshold(x, cfg);
    const auto its = bgi::its_known(x, g, cfg);
    const auto sm = bgi::smlr(x, g, bgi::classify_threshold(x, t0));
    CHECK(its.log_score >= sm.log_score - 1e-9);
  }
}

TEST_CASE("three_sigma_baseline") {
  V x = oracle::standard_normal(1000, 2);
  x[10] = 1e3;
  const auto r = bgi::three_sigma_baseline(x);
  CHECK(r.labels[10] == 1);
  CHECK(r.loops == 0);
  CHECK(r.converged);

  const auto flat = bgi::three_sigma_baseline(V{2, 2, 2});
  CHECK(flat.labels == Labels{1, 1, 1});
  CHECK_THROWS_AS(bgi::three_sigma_baseline(V{0, 0}), bgi::DegenerateInputError);

  const auto pure = bgi::three_sigma_baseline(oracle::standard_normal(100000, 71));
  const double fraction = static_cast<double>(bgi::count_impulses(pure.labels)) / 100000;
  // Two-sided tail beyond three standard deviations: 0.0026998.
  CHECK(std::abs(fraction - 0.0027) <= 0.0005);
}
