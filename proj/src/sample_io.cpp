#include "bgi/sample_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "bgi/errors.hpp"

namespace bgi {

namespace {

bool is_binary(const std::filesystem::path& path) {
  return path.extension() == ".f64";
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

Samples parse_binary(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() % sizeof(double) != 0) {
    throw ParseError(path.string(), 0, 0,
                     "binary sample file size is not a multiple of 8 bytes");
  }
  Samples x(bytes.size() / sizeof(double));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::uint64_t raw = 0;
    for (int b = 7; b >= 0; --b) {
      raw = (raw << 8) |
            static_cast<unsigned char>(bytes[i * sizeof(double) + static_cast<std::size_t>(b)]);
    }
    x[i] = std::bit_cast<double>(raw);
  }
  return x;
}

void write_binary(std::ofstream& out, std::span<const double> x) {
  for (double v : x) {
    auto raw = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (char& b : bytes) {
      b = static_cast<char>(raw & 0xffu);
      raw >>= 8;
    }
    out.write(bytes, sizeof bytes);
  }
}

Samples parse_text(std::string_view text, std::string_view source,
                   bool binary_values) {
  Samples x;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const std::string_view raw = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line_no == 1 && line == kSampleFileHeader) continue;
      throw ParseError(std::string(source), line_no, 1,
                       "unexpected comment line; only the '" +
                           std::string(kSampleFileHeader) +
                           "' header is allowed, on the first line");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc{} || ptr != line.data() + line.size()) {
      const auto column = static_cast<std::size_t>(ptr - line.data()) + 1 +
                          static_cast<std::size_t>(line.data() - raw.data());
      throw ParseError(std::string(source), line_no, column,
                       "expected a decimal number, got '" + std::string(line) + "'");
    }
    if (!std::isfinite(value)) {
      throw ParseError(std::string(source), line_no, 1, "non-finite sample");
    }
    if (binary_values && value != 0.0 && value != 1.0) {
      throw ParseError(std::string(source), line_no, 1,
                       "label values must be 0 or 1");
    }
    x.push_back(value);
  }
  return x;
}

}  // namespace

Samples parse_samples(std::string_view text, std::string_view source) {
  return parse_text(text, source, false);
}

Samples read_samples(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return is_binary(path) ? parse_binary(bytes, path) : parse_samples(bytes, path.string());
}

void write_samples(const std::filesystem::path& path, std::span<const double> x) {
  auto out = open_for_write(path);
  if (is_binary(path)) {
    write_binary(out, x);
  } else {
    out << kSampleFileHeader << '\n' << std::setprecision(17);
    for (double v : x) out << v << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Labels read_labels(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const Samples values = is_binary(path) ? parse_binary(bytes, path)
                                         : parse_text(bytes, path.string(), true);
  Labels labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0 && values[i] != 1.0) {
      throw ParseError(path.string(), 0, 0,
                       "label value at index " + std::to_string(i) +
                           " is not 0 or 1");
    }
    labels[i] = values[i] == 1.0 ? 1 : 0;
  }
  return labels;
}

void write_labels(const std::filesystem::path& path,
                  std::span<const std::uint8_t> labels) {
  auto out = open_for_write(path);
  if (is_binary(path)) {
    Samples values(labels.begin(), labels.end());
    write_binary(out, values);
  } else {
    out << kSampleFileHeader << '\n';
    for (auto v : labels) out << static_cast<int>(v) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bgi
