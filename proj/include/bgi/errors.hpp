#ifndef BGI_ERRORS_HPP
#define BGI_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bgi {

/// Base class for every failure raised by the library. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside its admissible domain (rho > 1, negative variance, ...).
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Input is non-empty but carries no usable information (e.g. all zeros).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Paired sequences have mismatched lengths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds what an exhaustive routine accepts.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Line and column are 1-based; column 0 means the
/// whole line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) +
              (column > 0 ? ":" + std::to_string(column) : std::string()) +
              ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace bgi

#endif  // BGI_ERRORS_HPP
