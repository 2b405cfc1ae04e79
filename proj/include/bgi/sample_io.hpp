#ifndef BGI_SAMPLE_IO_HPP
#define BGI_SAMPLE_IO_HPP

#include <filesystem>
#include <span>
#include <string_view>

#include "bgi/core.hpp"

namespace bgi {

/// Optional first line of the text sample/label format.
inline constexpr std::string_view kSampleFileHeader = "# bg-impulse v1";

// Text files hold one decimal value per line, optionally preceded by the
// header line. Files ending in ".f64" hold raw little-endian IEEE-754 doubles
// with no header. Labels use the same layouts with values 0/1.

Samples read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, std::span<const double> x);

Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path,
                  std::span<const std::uint8_t> labels);

/// Parses the text format from a string. `source` only names the origin in
/// error messages.
Samples parse_samples(std::string_view text, std::string_view source = "<text>");

}  // namespace bgi

#endif  // BGI_SAMPLE_IO_HPP
