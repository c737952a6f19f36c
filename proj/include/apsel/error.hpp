#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apsel {

// Error families map one-to-one onto the CLI exit codes.

/// Invalid parameters or configuration (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problems with input data (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// A cell that failed to parse. Row and column are 1-based file coordinates
/// (row 1 is the header).
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : DataError(what + " (row " + std::to_string(row) + ", column " +
                  std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class EmptyDatasetError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateRangeError : public DataError {
 public:
  using DataError::DataError;
};

class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientSamplesError : public DataError {
 public:
  using DataError::DataError;
};

/// Sampler or exact solver could not produce a result (exit code 4).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apsel
