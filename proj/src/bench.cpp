#include "bgi/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "bgi/errors.hpp"

namespace bgi {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v));
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception thrown by any task is rethrown after all threads have joined.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string_view arm_name(Arm arm) {
  switch (arm) {
    case Arm::kRgeSsi:
      return "rge_ssi";
    case Arm::kOnlySsi:
      return "only_ssi";
    case Arm::kOnlyRge:
      return "only_rge";
  }
  return "unknown";
}

Arm parse_arm(std::string_view name) {
  for (Arm arm : kAllArms) {
    if (arm_name(arm) == name) return arm;
  }
  throw ParameterDomainError("unknown arm '" + std::string(name) +
                             "' (expected rge_ssi, only_ssi or only_rge)");
}

DetectorConfig arm_config(Arm arm) {
  DetectorConfig cfg;
  switch (arm) {
    case Arm::kRgeSsi:
      cfg.estimator = EstimatorKind::kRobust;
      cfg.init = InitSsi{};
      break;
    case Arm::kOnlySsi:
      cfg.estimator = EstimatorKind::kErgodic;
      cfg.init = InitSsi{};
      break;
    case Arm::kOnlyRge:
      cfg.estimator = EstimatorKind::kRobust;
      cfg.init = InitThreeSigma{};
      break;
  }
  return cfg;
}

void GridSpec::validate() const {
  if (trials < 1) throw ParameterDomainError("trials must be at least 1");
  if (n < 2) throw ParameterDomainError("n must be at least 2");
  if (sigma2_sq_list.empty()) throw ParameterDomainError("sigma2_sq list is empty");
  if (rho_list.empty()) throw ParameterDomainError("rho list is empty");
  if (arms.empty()) throw ParameterDomainError("arm list is empty");
  for (double s2 : sigma2_sq_list) {
    for (double rho : rho_list) NoiseParams{rho, sigma1_sq, s2}.validate();
  }
}

double CellMetrics::false_positives_per_sample() const {
  const std::size_t total = background_count + impulse_count;
  return total == 0 ? 0.0 : static_cast<double>(type1_count) / static_cast<double>(total);
}

const CellResult* ExperimentReport::find(const CellKey& key) const {
  const auto it = std::find_if(cells.begin(), cells.end(),
                               [&](const CellResult& c) { return c.key == key; });
  return it == cells.end() ? nullptr : &*it;
}

std::uint64_t trial_seed(std::uint64_t base_seed, double sigma2_sq, double rho,
                         Arm arm, std::size_t trial) {
  std::uint64_t h = splitmix64(base_seed);
  h = combine(h, std::bit_cast<std::uint64_t>(sigma2_sq));
  h = combine(h, std::bit_cast<std::uint64_t>(rho));
  h = combine(h, static_cast<std::uint64_t>(arm));
  h = combine(h, static_cast<std::uint64_t>(trial));
  return h;
}

TrialOutcome run_trial(const NoiseParams& params, std::size_t n, Arm arm,
                       std::uint64_t seed) {
  const GeneratedNoise noise = generate(params, n, seed);
  const DetectionResult detection = its_blind(noise.observations, arm_config(arm));

  TrialOutcome out;
  out.loops = detection.loops;
  out.converged = detection.converged;
  for (std::size_t i = 0; i < n; ++i) {
    if (noise.truth[i]) {
      ++out.impulses;
      if (!detection.labels[i]) ++out.false_negatives;
    } else {
      ++out.background;
      if (detection.labels[i]) ++out.false_positives;
    }
  }
  return out;
}

CellMetrics aggregate(std::span<const TrialOutcome> outcomes) {
  CellMetrics m;
  for (const TrialOutcome& t : outcomes) {
    m.type1_count += t.false_positives;
    m.type2_count += t.false_negatives;
    m.background_count += t.background;
    m.impulse_count += t.impulses;
    m.total_loops += t.loops;
    if (!t.converged) ++m.nonconverged_trials;
  }
  m.trials_completed = outcomes.size();
  if (m.background_count > 0) {
    m.type1_rate = static_cast<double>(m.type1_count) / static_cast<double>(m.background_count);
  }
  if (m.impulse_count > 0) {
    m.type2_rate = static_cast<double>(m.type2_count) / static_cast<double>(m.impulse_count);
  }
  if (!outcomes.empty()) {
    m.mean_loops = static_cast<double>(m.total_loops) / static_cast<double>(outcomes.size());
  }
  return m;
}

CellMetrics run_cell(const NoiseParams& params, std::size_t n, std::size_t trials,
                     Arm arm, std::uint64_t base_seed, std::size_t workers) {
  params.validate();
  std::vector<TrialOutcome> outcomes(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    outcomes[t] = run_trial(params, n, arm,
                            trial_seed(base_seed, params.sigma2_sq, params.rho, arm, t));
  });
  return aggregate(outcomes);
}

ExperimentReport run_grid(const GridSpec& spec, std::size_t workers,
                          const ProgressFn& progress) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.spec = spec;
  report.tool_version = std::string(tool_version());
  for (double s2 : spec.sigma2_sq_list) {
    for (double rho : spec.rho_list) {
      for (Arm arm : spec.arms) report.cells.push_back({{s2, rho, arm}, {}});
    }
  }

  const std::size_t total = report.cells.size() * spec.trials;
  std::vector<TrialOutcome> outcomes(total);
  std::size_t finished = 0;
  std::mutex progress_mutex;
  parallel_for(total, workers, [&](std::size_t unit) {
    const CellKey& key = report.cells[unit / spec.trials].key;
    const std::size_t trial = unit % spec.trials;
    const NoiseParams params{key.rho, spec.sigma1_sq, key.sigma2_sq};
    outcomes[unit] = run_trial(params, spec.n, key.arm,
                               trial_seed(spec.base_seed, key.sigma2_sq, key.rho,
                                          key.arm, trial));
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++finished, total);
    }
  });

  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    report.cells[c].metrics = aggregate(
        std::span<const TrialOutcome>(outcomes).subspan(c * spec.trials, spec.trials));
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace bgi
