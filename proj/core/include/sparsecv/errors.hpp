#pragma once

#include <stdexcept>
#include <string>

namespace sparsecv {

// Bad user input: malformed files, out-of-range options, impossible requests.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed data file; carries enough context to locate the offending cell.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : ConfigError(what + " (row " + std::to_string(row) + ", column " +
                    std::to_string(column) + ")"),
        row(row),
        column(column) {}
  std::size_t row;
  std::size_t column;
};

// Numerical failure that invalidates the result (e.g. an indefinite system).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A contract the library maintains internally was violated; always a bug or
// corrupted input state, never a condition callers are expected to handle.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace sparsecv
