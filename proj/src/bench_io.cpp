#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"

#include "bgi/bench.hpp"
#include "bgi/errors.hpp"
#include "embedded_assets.hpp"

namespace bgi {

namespace {

using nlohmann::json;

constexpr std::string_view kReportFormat = "bg-impulse-report";
constexpr int kReportFormatVersion = 1;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Shortest decimal that round-trips.
std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Six significant digits, for aligned human-readable tables.
std::string format_short(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

// One line of text with its 1-based number.
struct Line {
  std::size_t number;
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    lines.push_back({++number, text.substr(0, eol)});
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
  }
  return lines;
}

// Comma-separated fields of a line with their 1-based starting columns.
struct Field {
  std::size_t column;
  std::string_view text;
};

std::vector<Field> split_fields(std::string_view line, std::size_t base_column) {
  std::vector<Field> fields;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    const std::string_view raw = line.substr(pos, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - pos);
    const auto lead = raw.find_first_not_of(" \t");
    fields.push_back({base_column + pos + (lead == std::string_view::npos ? 0 : lead),
                      trim(raw)});
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(const Field& field, std::string_view source, std::size_t line,
              std::string_view what) {
  T value{};
  const char* begin = field.text.data();
  const char* end = begin + field.text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.text.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(std::string(source), line, field.column,
                     "expected " + std::string(what) + ", got '" +
                         std::string(field.text) + "'");
  }
  return value;
}

// Accepts integer counts written in scientific notation, e.g. "1e5".
std::size_t parse_count(const Field& field, std::string_view source, std::size_t line) {
  const double v = parse_field<double>(field, source, line, "a count");
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw ParseError(std::string(source), line, field.column,
                     "expected a nonnegative integer, got '" + std::string(field.text) + "'");
  }
  return static_cast<std::size_t>(v);
}

template <typename T>
T require(const json& j, const char* key, std::string_view source) {
  if (!j.contains(key)) {
    throw ParseError(std::string(source), 0, 0, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(source), 0, 0,
                     std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view tool_version() { return BGI_VERSION; }

// ---------------------------------------------------------------------------
// Grid configuration

GridSpec parse_grid_config(std::string_view text, std::string_view source) {
  GridSpec spec;
  spec.sigma2_sq_list.clear();
  spec.rho_list.clear();
  bool have_sigma2 = false;
  bool have_rho = false;

  for (const Line& line : split_lines(text)) {
    const std::string_view content = trim(line.text);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = line.text.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(std::string(source), line.number, 1, "expected 'key = value'");
    }
    const std::string_view key = trim(line.text.substr(0, eq));
    const auto fields = split_fields(line.text.substr(eq + 1), eq + 2);
    auto doubles = [&] {
      std::vector<double> values;
      for (const Field& f : fields) {
        values.push_back(parse_field<double>(f, source, line.number, "a number"));
      }
      return values;
    };
    auto single = [&]() -> const Field& {
      if (fields.size() != 1) {
        throw ParseError(std::string(source), line.number, fields[1].column,
                         "'" + std::string(key) + "' takes a single value");
      }
      return fields.front();
    };

    if (key == "sigma1_sq") {
      spec.sigma1_sq = parse_field<double>(single(), source, line.number, "a number");
    } else if (key == "sigma2_sq") {
      spec.sigma2_sq_list = doubles();
      have_sigma2 = true;
    } else if (key == "rho") {
      spec.rho_list = doubles();
      have_rho = true;
    } else if (key == "n") {
      spec.n = parse_count(single(), source, line.number);
    } else if (key == "trials") {
      spec.trials = parse_count(single(), source, line.number);
    } else if (key == "base_seed") {
      spec.base_seed =
          parse_field<std::uint64_t>(single(), source, line.number, "an unsigned integer");
    } else if (key == "arms") {
      spec.arms.clear();
      for (const Field& f : fields) {
        try {
          spec.arms.push_back(parse_arm(f.text));
        } catch (const ParameterDomainError& e) {
          throw ParseError(std::string(source), line.number, f.column, e.what());
        }
      }
    } else {
      const auto col = line.text.find_first_not_of(" \t");
      throw ParseError(std::string(source), line.number, col + 1,
                       "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_sigma2) throw ParseError(std::string(source), 0, 0, "missing key 'sigma2_sq'");
  if (!have_rho) throw ParseError(std::string(source), 0, 0, "missing key 'rho'");
  try {
    spec.validate();
  } catch (const ParameterDomainError& e) {
    throw ParseError(std::string(source), 0, 0, e.what());
  }
  return spec;
}

std::string format_grid_config(const GridSpec& spec) {
  auto join = [](const auto& values, auto fmt) {
    std::string out;
    for (const auto& v : values) {
      if (!out.empty()) out += ", ";
      out += fmt(v);
    }
    return out;
  };
  std::ostringstream out;
  out << "# bg-impulse grid v1\n"
      << "sigma1_sq = " << format_number(spec.sigma1_sq) << '\n'
      << "sigma2_sq = " << join(spec.sigma2_sq_list, format_number) << '\n'
      << "rho = " << join(spec.rho_list, format_number) << '\n'
      << "n = " << spec.n << '\n'
      << "trials = " << spec.trials << '\n'
      << "base_seed = " << spec.base_seed << '\n'
      << "arms = " << join(spec.arms, [](Arm a) { return std::string(arm_name(a)); })
      << '\n';
  return out.str();
}

std::optional<std::string_view> builtin_grid_config(std::string_view name) {
  if (name == "paper-grid") return assets::kPaperGridConfig;
  if (name == "smoke") return assets::kSmokeConfig;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Report

std::string format_report(const ExperimentReport& report) {
  json spec = {
      {"sigma1_sq", report.spec.sigma1_sq},
      {"sigma2_sq", report.spec.sigma2_sq_list},
      {"rho", report.spec.rho_list},
      {"n", report.spec.n},
      {"trials", report.spec.trials},
      {"base_seed", report.spec.base_seed},
  };
  json arms = json::array();
  for (Arm a : report.spec.arms) arms.push_back(arm_name(a));
  spec["arms"] = arms;

  json cells = json::array();
  for (const CellResult& cell : report.cells) {
    const CellMetrics& m = cell.metrics;
    cells.push_back({
        {"sigma2_sq", cell.key.sigma2_sq},
        {"rho", cell.key.rho},
        {"arm", arm_name(cell.key.arm)},
        {"type1_rate", m.type1_rate},
        {"type2_rate", m.type2_rate ? json(*m.type2_rate) : json(nullptr)},
        {"mean_loops", m.mean_loops},
        {"trials_completed", m.trials_completed},
        {"type1_count", m.type1_count},
        {"type2_count", m.type2_count},
        {"background_count", m.background_count},
        {"impulse_count", m.impulse_count},
        {"total_loops", m.total_loops},
        {"nonconverged_trials", m.nonconverged_trials},
        {"fp_per_sample", m.false_positives_per_sample()},
    });
  }

  const json doc = {
      {"format", kReportFormat},
      {"format_version", kReportFormatVersion},
      {"tool_version", report.tool_version},
      {"wall_time_seconds", report.wall_time_seconds},
      {"spec", spec},
      {"cells", cells},
  };
  return doc.dump(2) + "\n";
}

ExperimentReport parse_report(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(source), 0, 0,
                     "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", std::string()) != kReportFormat) {
    throw ParseError(std::string(source), 0, 0, "not a bg-impulse report");
  }
  if (doc.value("format_version", 0) != kReportFormatVersion) {
    throw ParseError(std::string(source), 0, 0, "unsupported report version");
  }

  ExperimentReport report;
  report.tool_version = require<std::string>(doc, "tool_version", source);
  report.wall_time_seconds = require<double>(doc, "wall_time_seconds", source);
  const json spec = require<json>(doc, "spec", source);
  report.spec.sigma1_sq = require<double>(spec, "sigma1_sq", source);
  report.spec.sigma2_sq_list = require<std::vector<double>>(spec, "sigma2_sq", source);
  report.spec.rho_list = require<std::vector<double>>(spec, "rho", source);
  report.spec.n = require<std::size_t>(spec, "n", source);
  report.spec.trials = require<std::size_t>(spec, "trials", source);
  report.spec.base_seed = require<std::uint64_t>(spec, "base_seed", source);
  report.spec.arms.clear();
  try {
    for (const auto& name : require<std::vector<std::string>>(spec, "arms", source)) {
      report.spec.arms.push_back(parse_arm(name));
    }
  } catch (const ParameterDomainError& e) {
    throw ParseError(std::string(source), 0, 0, e.what());
  }

  for (const json& c : require<json>(doc, "cells", source)) {
    CellResult cell;
    cell.key.sigma2_sq = require<double>(c, "sigma2_sq", source);
    cell.key.rho = require<double>(c, "rho", source);
    try {
      cell.key.arm = parse_arm(require<std::string>(c, "arm", source));
    } catch (const ParameterDomainError& e) {
      throw ParseError(std::string(source), 0, 0, e.what());
    }
    CellMetrics& m = cell.metrics;
    m.type1_rate = require<double>(c, "type1_rate", source);
    if (c.contains("type2_rate") && !c.at("type2_rate").is_null()) {
      m.type2_rate = require<double>(c, "type2_rate", source);
    }
    m.mean_loops = require<double>(c, "mean_loops", source);
    m.trials_completed = require<std::size_t>(c, "trials_completed", source);
    m.type1_count = require<std::size_t>(c, "type1_count", source);
    m.type2_count = require<std::size_t>(c, "type2_count", source);
    m.background_count = require<std::size_t>(c, "background_count", source);
    m.impulse_count = require<std::size_t>(c, "impulse_count", source);
    m.total_loops = require<std::size_t>(c, "total_loops", source);
    m.nonconverged_trials = require<std::size_t>(c, "nonconverged_trials", source);
    report.cells.push_back(cell);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reference tables

std::string_view table_name(Table table) {
  switch (table) {
    case Table::kType1:
      return "type1";
    case Table::kType2:
      return "type2";
    case Table::kLoops:
      return "loops";
  }
  return "unknown";
}

std::optional<double> ReferenceTables::find(Table table, const CellKey& key) const {
  for (const ReferenceEntry& e : entries) {
    if (e.table == table && e.arm == key.arm && e.sigma2_sq == key.sigma2_sq &&
        e.rho == key.rho) {
      return e.value;
    }
  }
  return std::nullopt;
}

ReferenceTables parse_reference_tables(std::string_view text, std::string_view source) {
  ReferenceTables tables;
  std::vector<double> rhos;
  bool have_header = false;

  for (const Line& line : split_lines(text)) {
    const std::string_view content = trim(line.text);
    if (content.empty() || content.front() == '#') continue;
    const auto fields = split_fields(line.text, 1);

    if (!have_header) {
      if (fields.size() < 4 || fields[0].text != "table" || fields[1].text != "arm" ||
          fields[2].text != "sigma2_sq") {
        throw ParseError(std::string(source), line.number, 1,
                         "expected header 'table,arm,sigma2_sq,<rho>...'");
      }
      for (std::size_t i = 3; i < fields.size(); ++i) {
        rhos.push_back(parse_field<double>(fields[i], source, line.number, "a rho value"));
      }
      have_header = true;
      continue;
    }

    if (fields.size() != rhos.size() + 3) {
      throw ParseError(std::string(source), line.number, fields.back().column,
                       "expected " + std::to_string(rhos.size() + 3) + " fields, got " +
                           std::to_string(fields.size()));
    }
    Table table{};
    if (fields[0].text == "type1") {
      table = Table::kType1;
    } else if (fields[0].text == "type2") {
      table = Table::kType2;
    } else if (fields[0].text == "loops") {
      table = Table::kLoops;
    } else {
      throw ParseError(std::string(source), line.number, fields[0].column,
                       "unknown table '" + std::string(fields[0].text) + "'");
    }
    Arm arm{};
    try {
      arm = parse_arm(fields[1].text);
    } catch (const ParameterDomainError& e) {
      throw ParseError(std::string(source), line.number, fields[1].column, e.what());
    }
    const double s2 = parse_field<double>(fields[2], source, line.number, "a sigma2_sq value");
    for (std::size_t i = 0; i < rhos.size(); ++i) {
      const Field& f = fields[i + 3];
      if (f.text.empty()) continue;
      tables.entries.push_back(
          {table, arm, s2, rhos[i], parse_field<double>(f, source, line.number, "a number")});
    }
  }
  if (!have_header) throw ParseError(std::string(source), 0, 0, "missing header row");
  return tables;
}

std::string format_reference_tables(const ReferenceTables& tables) {
  std::vector<double> rhos;
  for (const ReferenceEntry& e : tables.entries) {
    if (std::find(rhos.begin(), rhos.end(), e.rho) == rhos.end()) rhos.push_back(e.rho);
  }
  std::sort(rhos.begin(), rhos.end());

  struct RowKey {
    Table table;
    Arm arm;
    double sigma2_sq;
    bool operator==(const RowKey&) const = default;
  };
  std::vector<RowKey> rows;
  for (const ReferenceEntry& e : tables.entries) {
    const RowKey key{e.table, e.arm, e.sigma2_sq};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }

  std::ostringstream out;
  out << "# bg-impulse reference tables v1\ntable,arm,sigma2_sq";
  for (double rho : rhos) out << ',' << format_number(rho);
  out << '\n';
  for (const RowKey& row : rows) {
    out << table_name(row.table) << ',' << arm_name(row.arm) << ','
        << format_number(row.sigma2_sq);
    for (double rho : rhos) {
      out << ',';
      if (const auto v = tables.find(row.table, {row.sigma2_sq, rho, row.arm})) {
        out << format_number(*v);
      }
    }
    out << '\n';
  }
  return out.str();
}

ReferenceTables reference_from_report(const ExperimentReport& report) {
  ReferenceTables tables;
  for (Table table : {Table::kType1, Table::kType2, Table::kLoops}) {
    for (const CellResult& cell : report.cells) {
      const CellKey& k = cell.key;
      const CellMetrics& m = cell.metrics;
      if (table == Table::kType1) {
        tables.entries.push_back({table, k.arm, k.sigma2_sq, k.rho, m.type1_rate});
      } else if (table == Table::kType2) {
        if (m.type2_rate) {
          tables.entries.push_back({table, k.arm, k.sigma2_sq, k.rho, *m.type2_rate});
        }
      } else {
        tables.entries.push_back({table, k.arm, k.sigma2_sq, k.rho, m.mean_loops});
      }
    }
  }
  return tables;
}

std::string_view builtin_reference_tables() { return assets::kReferenceTables; }

// ---------------------------------------------------------------------------
// Comparison

bool type2_within_tolerance(double observed, double reference, std::size_t impulse_count,
                            const TolerancePolicy& policy) {
  if (impulse_count == 0) return false;
  const double se =
      std::sqrt(reference * (1.0 - reference) / static_cast<double>(impulse_count));
  const double band =
      std::max(policy.type2_relative * std::abs(reference), policy.type2_standard_errors * se);
  return std::abs(observed - reference) <= band;
}

bool type1_within_tolerance(std::size_t observed_count, double reference_rate,
                            std::size_t background_count, const TolerancePolicy& policy) {
  const double expected = reference_rate * static_cast<double>(background_count);
  const double ratio = (static_cast<double>(observed_count) + 1.0) / (expected + 1.0);
  return ratio <= policy.type1_factor && ratio >= 1.0 / policy.type1_factor;
}

bool loops_within_tolerance(double observed, double reference, const TolerancePolicy& policy) {
  if (reference <= 0.0) return observed <= 0.0;
  const double ratio = observed / reference;
  return ratio <= policy.loops_factor && ratio >= 1.0 / policy.loops_factor;
}

bool ComparisonSummary::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
}

ComparisonSummary compare_tables(const ExperimentReport& report,
                                 const ReferenceTables& reference,
                                 const TolerancePolicy& policy) {
  ComparisonSummary summary;
  for (const ReferenceEntry& e : reference.entries) {
    const CellKey key{e.sigma2_sq, e.rho, e.arm};
    const CellResult* cell = report.find(key);
    if (!cell) {
      ++summary.missing;
      continue;
    }
    const CellMetrics& m = cell->metrics;
    ComparisonRow row;
    row.table = e.table;
    row.key = key;
    row.reference = e.value;
    switch (e.table) {
      case Table::kType1:
        row.reported = m.type1_rate;
        row.secondary = m.false_positives_per_sample();
        row.pass = type1_within_tolerance(m.type1_count, e.value, m.background_count, policy);
        break;
      case Table::kType2:
        row.reported = m.type2_rate;
        row.pass = m.type2_rate &&
                   type2_within_tolerance(*m.type2_rate, e.value, m.impulse_count, policy);
        break;
      case Table::kLoops:
        row.reported = m.mean_loops;
        row.pass = loops_within_tolerance(m.mean_loops, e.value, policy);
        break;
    }
    if (!row.reported) {
      row.relative_deviation = std::numeric_limits<double>::infinity();
    } else if (e.value == 0.0) {
      row.relative_deviation =
          *row.reported == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      row.relative_deviation = std::abs(*row.reported - e.value) / std::abs(e.value);
    }
    summary.max_relative_deviation =
        std::max(summary.max_relative_deviation, row.relative_deviation);
    summary.rows.push_back(row);
  }
  return summary;
}

std::string format_comparison_text(const ComparisonSummary& summary) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "table" << ' ' << std::setw(9) << "arm" << ' '
      << std::setw(9) << "sigma2_sq" << ' ' << std::setw(8) << "rho" << ' ' << std::setw(13)
      << "reported" << ' ' << std::setw(13) << "reference" << ' ' << std::setw(10)
      << "rel_dev" << " status\n";
  for (const ComparisonRow& r : summary.rows) {
    out << std::left << std::setw(6) << table_name(r.table) << ' ' << std::setw(9)
        << arm_name(r.key.arm) << ' ' << std::setw(9) << format_number(r.key.sigma2_sq) << ' '
        << std::setw(8) << format_number(r.key.rho) << ' ' << std::setw(13)
        << (r.reported ? format_short(*r.reported) : std::string("undefined")) << ' '
        << std::setw(13) << format_short(r.reference) << ' ' << std::setw(10)
        << format_short(r.relative_deviation) << ' ' << (r.pass ? "pass" : "FAIL")
        << '\n';
  }
  const auto passed = std::count_if(summary.rows.begin(), summary.rows.end(),
                                    [](const ComparisonRow& r) { return r.pass; });
  out << passed << '/' << summary.rows.size() << " cells within tolerance";
  if (summary.missing > 0) out << ", " << summary.missing << " reference cells not in report";
  out << ", max relative deviation " << format_short(summary.max_relative_deviation)
      << '\n';
  return out.str();
}

std::string format_comparison_csv(const ComparisonSummary& summary) {
  std::ostringstream out;
  out << "table,arm,sigma2_sq,rho,reported,reference,relative_deviation,fp_per_sample,pass\n";
  for (const ComparisonRow& r : summary.rows) {
    out << table_name(r.table) << ',' << arm_name(r.key.arm) << ','
        << format_number(r.key.sigma2_sq) << ',' << format_number(r.key.rho) << ','
        << (r.reported ? format_number(*r.reported) : std::string()) << ','
        << format_number(r.reference) << ',' << format_number(r.relative_deviation) << ','
        << (r.secondary ? format_number(*r.secondary) : std::string()) << ','
        << (r.pass ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace bgi
