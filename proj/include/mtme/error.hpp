#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtme {

// Precondition violated by the caller (bad shape, empty input, unknown id).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Statistic undefined for the data, e.g. correlation with a constant series.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersion : public std::runtime_error {
 public:
  explicit UnsupportedVersion(long version)
      : std::runtime_error("unsupported checkpoint format version " + std::to_string(version)),
        version_(version) {}
  long version() const noexcept { return version_; }

 private:
  long version_;
};

// Input file problem; line is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mtme
