// bgimpulse: generate Bernoulli-Gaussian noise, detect impulses, inspect
// robust statistics and run the Monte-Carlo benchmark.
//
// Exit codes: 0 success, 1 domain or I/O error, 2 usage error.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "bgi/bench.hpp"
#include "bgi/core.hpp"
#include "bgi/detectors.hpp"
#include "bgi/errors.hpp"
#include "bgi/robust_stats.hpp"
#include "bgi/sample_io.hpp"

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Counts and seeds accept plain integers and integral scientific notation.
std::uint64_t parse_count(const std::string& flag, const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  if (auto [p, ec] = std::from_chars(text.data(), end, value); ec == std::errc{} && p == end) {
    return value;
  }
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(text.data(), end, d);
      ec == std::errc{} && p == end && d >= 0.0 && d == std::floor(d) && d < 1.8e19) {
    return static_cast<std::uint64_t>(d);
  }
  throw UsageError(flag + ": expected a nonnegative integer, got '" + text + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bgi::IoError("cannot open " + path + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw bgi::IoError("cannot write " + path);
}

std::string number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

// ---------------------------------------------------------------------------

struct GenOptions {
  double rho = 0.0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 0.0;
  std::string n = "100000";
  std::string seed = "1";
  std::string out;
  std::string truth_out;
};

int run_gen(const GenOptions& o) {
  const bgi::NoiseParams params{o.rho, o.sigma1_sq, o.sigma2_sq};
  try {
    params.validate();
  } catch (const bgi::ParameterDomainError& e) {
    throw UsageError(e.what());
  }
  const std::size_t n = parse_count("--n", o.n);
  if (n == 0) throw UsageError("--n must be at least 1");
  const std::uint64_t seed = parse_count("--seed", o.seed);

  const bgi::GeneratedNoise noise = bgi::generate(params, n, seed);
  bgi::write_samples(o.out, noise.observations);
  if (!o.truth_out.empty()) bgi::write_labels(o.truth_out, noise.truth);

  std::cout << "rho = " << number(params.rho) << '\n'
            << "sigma1_sq = " << number(params.sigma1_sq) << '\n'
            << "sigma2_sq = " << number(params.sigma2_sq) << '\n'
            << "n = " << n << '\n'
            << "seed = " << seed << '\n'
            << "impulses = " << bgi::count_impulses(noise.truth) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct DetectOptions {
  std::string in;
  std::string mode = "blind";
  std::optional<double> sigma1_sq;
  std::optional<double> sigma2_sq;
  std::optional<double> rho;
  std::string estimator = "robust";
  std::string init = "ssi";
  std::optional<double> t0;
  double ssi_coefficient = bgi::kDefaultSsiCoefficient;
  std::string max_loops;
  std::string out;
  std::string report;
  std::string truth;
};

bgi::DetectorConfig detector_config(const DetectOptions& o) {
  bgi::DetectorConfig cfg;
  cfg.estimator = o.estimator == "ergodic" ? bgi::EstimatorKind::kErgodic
                                           : bgi::EstimatorKind::kRobust;
  if (o.init == "fixed") {
    if (!o.t0) throw UsageError("--init fixed requires --t0");
    cfg.init = bgi::InitFixed{*o.t0};
  } else if (o.init == "three-sigma") {
    cfg.init = bgi::InitThreeSigma{};
  } else {
    cfg.init = bgi::InitSsi{};
  }
  if (o.t0 && o.init != "fixed") throw UsageError("--t0 requires --init fixed");
  cfg.ssi_coefficient = o.ssi_coefficient;
  if (!o.max_loops.empty()) cfg.max_loops = parse_count("--max-loops", o.max_loops);
  try {
    cfg.validate();
  } catch (const bgi::ParameterDomainError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int run_detect(const DetectOptions& o) {
  const bgi::DetectorConfig cfg = detector_config(o);
  if (o.mode == "known" && (!o.sigma1_sq || !o.sigma2_sq)) {
    throw UsageError("--mode known requires --sigma1-sq and --sigma2-sq");
  }
  if (o.mode != "known" && (o.sigma1_sq || o.sigma2_sq || o.rho)) {
    throw UsageError("--sigma1-sq, --sigma2-sq and --rho apply to --mode known only");
  }

  const bgi::Samples x = bgi::read_samples(o.in);
  bgi::DetectionResult result;
  if (o.mode == "known") {
    bgi::KnownGaussians known{*o.sigma1_sq, *o.sigma2_sq, o.rho};
    try {
      known.validate();
    } catch (const bgi::ParameterDomainError& e) {
      throw UsageError(e.what());
    }
    result = bgi::its_known(x, known, cfg);
  } else if (o.mode == "three-sigma") {
    result = bgi::three_sigma_baseline(x, cfg.variance_floor_scale);
  } else {
    result = bgi::its_blind(x, cfg);
  }

  if (!o.out.empty()) bgi::write_labels(o.out, result.labels);

  const auto& p = result.estimate.params;
  std::cout << "n = " << x.size() << '\n'
            << "impulses = " << result.estimate.impulse_count << '\n'
            << "rho_hat = " << number(p.rho) << '\n'
            << "sigma1_sq_hat = " << number(p.sigma1_sq) << '\n'
            << "sigma2_sq_hat = " << number(p.sigma2_sq) << '\n'
            << "loops = " << result.loops << '\n'
            << "converged = " << (result.converged ? "true" : "false") << '\n'
            << "initial_threshold = " << number(result.threshold_trace.front()) << '\n'
            << "final_threshold = " << number(result.final_threshold()) << '\n'
            << "log_score = " << number(result.log_score) << '\n';

  nlohmann::json summary = {
      {"n", x.size()},
      {"impulses", result.estimate.impulse_count},
      {"rho_hat", p.rho},
      {"sigma1_sq_hat", p.sigma1_sq},
      {"sigma2_sq_hat", p.sigma2_sq},
      {"degenerate_estimate", result.estimate.degenerate},
      {"loops", result.loops},
      {"converged", result.converged},
      {"threshold_trace", result.threshold_trace},
      {"log_score", result.log_score},
  };

  if (!o.truth.empty()) {
    const bgi::Labels truth = bgi::read_labels(o.truth);
    if (truth.size() != x.size()) {
      throw bgi::ShapeError("truth file length does not match the sample file");
    }
    std::size_t fp = 0, fn = 0, impulses = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (truth[i]) {
        ++impulses;
        fn += result.labels[i] ? 0 : 1;
      } else {
        fp += result.labels[i] ? 1 : 0;
      }
    }
    const std::size_t background = x.size() - impulses;
    std::cout << "false_positives = " << fp << '\n' << "false_negatives = " << fn << '\n';
    summary["false_positives"] = fp;
    summary["false_negatives"] = fn;
    if (background > 0) {
      const double rate = static_cast<double>(fp) / static_cast<double>(background);
      std::cout << "type1_rate = " << number(rate) << '\n';
      summary["type1_rate"] = rate;
    }
    if (impulses > 0) {
      const double rate = static_cast<double>(fn) / static_cast<double>(impulses);
      std::cout << "type2_rate = " << number(rate) << '\n';
      summary["type2_rate"] = rate;
    }
  }
  if (!o.report.empty()) write_text_file(o.report, summary.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

int run_stats(const std::string& in) {
  const bgi::Samples x = bgi::read_samples(in);
  bgi::validate_samples(x);
  const bgi::RobustScale scale = bgi::mad(x);
  bgi::Samples magnitudes(x.size());
  std::transform(x.begin(), x.end(), magnitudes.begin(), [](double v) { return std::abs(v); });
  const double g = bgi::gini(magnitudes);
  const double three_sigma = bgi::threshold_three_sigma(x);
  const double ssi = bgi::threshold_ssi(x);

  std::cout << "n = " << x.size() << '\n'
            << "mad = " << number(scale.mad) << '\n'
            << "sigma_hat = " << number(scale.sigma_hat) << '\n'
            << "gini_abs = " << number(g) << '\n'
            << "three_sigma_t0 = " << number(three_sigma) << '\n'
            << "ssi_t0 = " << number(ssi) << '\n'
            << "ssi_over_three_sigma = "
            << (three_sigma > 0.0 ? number(ssi / three_sigma) : std::string("undefined"))
            << '\n'
            << "ten_thirds_gini = " << number(10.0 / 3.0 * g) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string config = "paper-grid";
  std::string workers;
  std::string out;
  std::string trials;
  std::string n;
  std::vector<std::string> arms;
  std::string csv;
  bool quiet = false;
};

std::string cells_csv(const bgi::ExperimentReport& report) {
  std::ostringstream out;
  out << std::setprecision(17)
      << "sigma2_sq,rho,arm,type1_rate,type2_rate,mean_loops,type1_count,type2_count,"
         "background_count,impulse_count,nonconverged_trials\n";
  for (const auto& c : report.cells) {
    const auto& m = c.metrics;
    out << c.key.sigma2_sq << ',' << c.key.rho << ',' << bgi::arm_name(c.key.arm) << ','
        << m.type1_rate << ',';
    if (m.type2_rate) out << *m.type2_rate;
    out << ',' << m.mean_loops << ',' << m.type1_count << ',' << m.type2_count << ','
        << m.background_count << ',' << m.impulse_count << ',' << m.nonconverged_trials << '\n';
  }
  return out.str();
}

int run_bench(const BenchOptions& o) {
  bgi::GridSpec spec;
  if (const auto builtin = bgi::builtin_grid_config(o.config)) {
    spec = bgi::parse_grid_config(*builtin, o.config);
  } else {
    spec = bgi::parse_grid_config(read_text_file(o.config), o.config);
  }
  if (!o.trials.empty()) spec.trials = parse_count("--trials", o.trials);
  if (!o.n.empty()) spec.n = parse_count("--n", o.n);
  if (!o.arms.empty()) {
    spec.arms.clear();
    try {
      for (const auto& a : o.arms) spec.arms.push_back(bgi::parse_arm(a));
    } catch (const bgi::ParameterDomainError& e) {
      throw UsageError(e.what());
    }
  }
  try {
    spec.validate();
  } catch (const bgi::ParameterDomainError& e) {
    throw UsageError(e.what());
  }

  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (!o.workers.empty()) workers = std::max<std::uint64_t>(1, parse_count("--workers", o.workers));

  std::size_t last_percent = 101;
  const bgi::ProgressFn progress = [&](std::size_t done, std::size_t total) {
    const std::size_t percent = done * 100 / total;
    if (percent != last_percent) {
      last_percent = percent;
      std::cerr << "\rbench: " << done << '/' << total << " trials (" << percent << "%)"
                << std::flush;
      if (done == total) std::cerr << '\n';
    }
  };
  const bgi::ExperimentReport report =
      bgi::run_grid(spec, workers, o.quiet ? bgi::ProgressFn{} : progress);

  write_text_file(o.out, bgi::format_report(report));
  if (!o.csv.empty()) write_text_file(o.csv, cells_csv(report));
  std::cout << "cells = " << report.cells.size() << '\n'
            << "trials_per_cell = " << spec.trials << '\n'
            << "wall_time_seconds = " << std::setprecision(4) << report.wall_time_seconds
            << '\n'
            << "report = " << o.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct CompareOptions {
  std::string report;
  std::string reference;
  std::string csv;
  bool strict = false;
};

int run_compare(const CompareOptions& o) {
  const bgi::ExperimentReport report =
      bgi::parse_report(read_text_file(o.report), o.report);
  const bgi::ReferenceTables reference =
      o.reference.empty()
          ? bgi::parse_reference_tables(bgi::builtin_reference_tables(), "<builtin>")
          : bgi::parse_reference_tables(read_text_file(o.reference), o.reference);
  const bgi::ComparisonSummary summary = bgi::compare_tables(report, reference);
  std::cout << bgi::format_comparison_text(summary);
  if (!o.csv.empty()) write_text_file(o.csv, bgi::format_comparison_csv(summary));
  return o.strict && !summary.all_pass() ? kExitDomain : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bernoulli-Gaussian impulsive noise simulation and blind impulse detection"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a Bernoulli-Gaussian sample file");
  gen_cmd->add_option("--rho", gen.rho, "Impulse rate in [0, 1]")->required()->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--sigma1-sq", gen.sigma1_sq, "Background noise power")->capture_default_str();
  gen_cmd->add_option("--sigma2-sq", gen.sigma2_sq, "Impulsive noise power (excess)")->required();
  gen_cmd->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Sample file (.f64 for binary)")->required();
  gen_cmd->add_option("--truth-out", gen.truth_out, "Impulse label file");

  DetectOptions det;
  auto* det_cmd = app.add_subcommand("detect", "Detect impulses in a sample file");
  det_cmd->add_option("--in", det.in, "Sample file")->required();
  det_cmd->add_option("--mode", det.mode, "blind, known or three-sigma")
      ->check(CLI::IsMember({"blind", "known", "three-sigma"}))->capture_default_str();
  det_cmd->add_option("--sigma1-sq", det.sigma1_sq, "Known background power");
  det_cmd->add_option("--sigma2-sq", det.sigma2_sq, "Known impulsive power");
  det_cmd->add_option("--rho", det.rho, "Fix the impulse rate (known mode)")->check(CLI::Range(0.0, 1.0));
  det_cmd->add_option("--estimator", det.estimator, "robust or ergodic")
      ->check(CLI::IsMember({"robust", "ergodic"}))->capture_default_str();
  det_cmd->add_option("--init", det.init, "ssi, three-sigma or fixed")
      ->check(CLI::IsMember({"ssi", "three-sigma", "fixed"}))->capture_default_str();
  det_cmd->add_option("--t0", det.t0, "Initial threshold for --init fixed")->check(CLI::NonNegativeNumber);
  det_cmd->add_option("--ssi-coefficient", det.ssi_coefficient, "SSI coefficient")
      ->check(CLI::PositiveNumber)->capture_default_str();
  det_cmd->add_option("--max-loops", det.max_loops, "Loop bound (default: N)");
  det_cmd->add_option("--out", det.out, "Label output file");
  det_cmd->add_option("--report", det.report, "JSON summary output file");
  det_cmd->add_option("--truth", det.truth, "Truth label file to score against");

  std::string stats_in;
  auto* stats_cmd = app.add_subcommand("stats", "Robust statistics and initial thresholds");
  stats_cmd->add_option("--in", stats_in, "Sample file")->required();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the Monte-Carlo grid");
  bench_cmd->add_option("--config", bench.config,
                        "Grid config file, or a built-in name (paper-grid, smoke)")
      ->capture_default_str();
  bench_cmd->add_option("--workers", bench.workers, "Worker threads (default: all cores)");
  bench_cmd->add_option("--out", bench.out, "Report output file (JSON)")->required();
  bench_cmd->add_option("--trials", bench.trials, "Override trials per cell");
  bench_cmd->add_option("--n", bench.n, "Override samples per trial");
  bench_cmd->add_option("--arms", bench.arms, "Override arms")->delimiter(',');
  bench_cmd->add_option("--csv", bench.csv, "Also write per-cell CSV");
  bench_cmd->add_flag("--quiet", bench.quiet, "No progress output");

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare a bench report with reference tables");
  cmp_cmd->add_option("--report", cmp.report, "Report file from bench")->required();
  cmp_cmd->add_option("--reference", cmp.reference, "Reference table file (default: built-in)");
  cmp_cmd->add_option("--csv", cmp.csv, "Also write the comparison as CSV");
  cmp_cmd->add_flag("--strict", cmp.strict, "Exit 1 if any cell is out of tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*det_cmd) return run_detect(det);
    if (*stats_cmd) return run_stats(stats_in);
    if (*bench_cmd) return run_bench(bench);
    if (*cmp_cmd) return run_compare(cmp);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const bgi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
