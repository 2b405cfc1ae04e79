#ifndef BGI_BENCH_HPP
#define BGI_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bgi/core.hpp"
#include "bgi/detectors.hpp"

namespace bgi {

/// Detector variants compared by the Monte-Carlo harness.
enum class Arm {
  /// Robust estimator, sparsity-sensitive initialization.
  kRgeSsi,
  /// Ergodic estimator, sparsity-sensitive initialization.
  kOnlySsi,
  /// Robust estimator, three-sigma initialization.
  kOnlyRge,
};

inline constexpr Arm kAllArms[] = {Arm::kRgeSsi, Arm::kOnlySsi, Arm::kOnlyRge};

std::string_view arm_name(Arm arm);
/// Throws ParameterDomainError for unknown names.
Arm parse_arm(std::string_view name);
DetectorConfig arm_config(Arm arm);

struct GridSpec {
  double sigma1_sq = 1.0;
  std::vector<double> sigma2_sq_list;
  std::vector<double> rho_list;
  std::size_t n = 100000;
  std::size_t trials = 100;
  std::uint64_t base_seed = 1;
  std::vector<Arm> arms{std::begin(kAllArms), std::end(kAllArms)};

  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

/// Error counts for one trial.
struct TrialOutcome {
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t background = 0;
  std::size_t impulses = 0;
  std::size_t loops = 0;
  bool converged = true;
};

/// Pooled metrics of one (sigma2_sq, rho, arm) cell. Rates are
/// truth-conditional: Type I = FP / #background, Type II = FN / #impulses,
/// pooled over all trials.
struct CellMetrics {
  double type1_rate = 0.0;
  /// Unset when no trial contained an impulse.
  std::optional<double> type2_rate;
  double mean_loops = 0.0;
  std::size_t trials_completed = 0;
  std::size_t type1_count = 0;
  std::size_t type2_count = 0;
  std::size_t background_count = 0;
  std::size_t impulse_count = 0;
  std::size_t total_loops = 0;
  std::size_t nonconverged_trials = 0;

  /// FP divided by all samples; an alternative Type I normalization.
  double false_positives_per_sample() const;

  bool operator==(const CellMetrics&) const = default;
};

struct CellKey {
  double sigma2_sq = 0.0;
  double rho = 0.0;
  Arm arm = Arm::kRgeSsi;

  bool operator==(const CellKey&) const = default;
};

struct CellResult {
  CellKey key;
  CellMetrics metrics;

  bool operator==(const CellResult&) const = default;
};

struct ExperimentReport {
  GridSpec spec;
  /// Ordered sigma2_sq-major, then rho, then arm in spec order.
  std::vector<CellResult> cells;
  double wall_time_seconds = 0.0;
  std::string tool_version;

  const CellResult* find(const CellKey& key) const;
};

/// Stateless per-trial seed: a 64-bit mix of every coordinate of the trial.
std::uint64_t trial_seed(std::uint64_t base_seed, double sigma2_sq, double rho,
                         Arm arm, std::size_t trial);

TrialOutcome run_trial(const NoiseParams& params, std::size_t n, Arm arm,
                       std::uint64_t seed);

CellMetrics aggregate(std::span<const TrialOutcome> outcomes);

/// Runs `trials` independent trials of one cell on `workers` threads. The
/// result does not depend on the worker count.
CellMetrics run_cell(const NoiseParams& params, std::size_t n, std::size_t trials,
                     Arm arm, std::uint64_t base_seed, std::size_t workers = 1);

/// Called after each finished trial with (finished, total). May be invoked
/// from worker threads, one call at a time.
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

ExperimentReport run_grid(const GridSpec& spec, std::size_t workers = 1,
                          const ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// Text formats

/// Version string stamped into reports.
std::string_view tool_version();

/// Key-value grid configuration:
///
///   # comment
///   sigma1_sq = 1
///   sigma2_sq = 1e2, 1e3
///   rho = 1e-4, 1e-2
///   n = 100000
///   trials = 100
///   base_seed = 7
///   arms = rge_ssi, only_ssi, only_rge
///
/// sigma2_sq and rho are required. Errors carry line and column.
GridSpec parse_grid_config(std::string_view text, std::string_view source = "<config>");
std::string format_grid_config(const GridSpec& spec);

/// Text of a shipped configuration ("paper-grid" or "smoke").
std::optional<std::string_view> builtin_grid_config(std::string_view name);

/// JSON report with full-precision numbers and sorted keys.
std::string format_report(const ExperimentReport& report);
ExperimentReport parse_report(std::string_view text, std::string_view source = "<report>");

// ---------------------------------------------------------------------------
// Reference tables and comparison

enum class Table { kType1, kType2, kLoops };

std::string_view table_name(Table table);

struct ReferenceEntry {
  Table table = Table::kType1;
  Arm arm = Arm::kRgeSsi;
  double sigma2_sq = 0.0;
  double rho = 0.0;
  double value = 0.0;
};

struct ReferenceTables {
  std::vector<ReferenceEntry> entries;

  std::optional<double> find(Table table, const CellKey& key) const;
};

/// Delimiter-separated layout: a header row `table,arm,sigma2_sq,<rho...>`
/// followed by one row per (table, arm, sigma2_sq). Empty fields are
/// missing values. '#' lines are comments.
ReferenceTables parse_reference_tables(std::string_view text,
                                       std::string_view source = "<reference>");
std::string format_reference_tables(const ReferenceTables& tables);

/// Every metric of every cell in the report, as reference entries.
ReferenceTables reference_from_report(const ExperimentReport& report);

/// The shipped published tables (type1, type2 and loops for all arms).
std::string_view builtin_reference_tables();

struct TolerancePolicy {
  /// Type II passes within the larger of this relative band or
  double type2_relative = 0.30;
  /// this many pooled binomial standard errors of the reference rate.
  double type2_standard_errors = 3.0;
  /// Type I passes when (count + 1) / (expected count + 1) lies within this
  /// factor either way.
  double type1_factor = 10.0;
  double loops_factor = 2.0;
};

bool type2_within_tolerance(double observed, double reference,
                            std::size_t impulse_count, const TolerancePolicy& policy);
bool type1_within_tolerance(std::size_t observed_count, double reference_rate,
                            std::size_t background_count, const TolerancePolicy& policy);
bool loops_within_tolerance(double observed, double reference,
                            const TolerancePolicy& policy);

struct ComparisonRow {
  Table table = Table::kType1;
  CellKey key;
  std::optional<double> reported;
  double reference = 0.0;
  /// |reported - reference| / |reference|; 0 when both are 0, infinite when
  /// only the reference is 0.
  double relative_deviation = 0.0;
  /// Type I rows only: FP per sample.
  std::optional<double> secondary;
  bool pass = false;
};

struct ComparisonSummary {
  std::vector<ComparisonRow> rows;
  /// Reference entries whose cell is absent from the report.
  std::size_t missing = 0;
  double max_relative_deviation = 0.0;

  bool all_pass() const;
};

ComparisonSummary compare_tables(const ExperimentReport& report,
                                 const ReferenceTables& reference,
                                 const TolerancePolicy& policy = {});

std::string format_comparison_text(const ComparisonSummary& summary);
std::string format_comparison_csv(const ComparisonSummary& summary);

}  // namespace bgi

#endif  // BGI_BENCH_HPP
