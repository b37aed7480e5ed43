#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optisynth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A Problem or Assignment violates a structural invariant.
class ModelError : public Error {
public:
  using Error::Error;
};

/// Text input could not be parsed. Line and column are 1-based; an offset
/// based parser reports line 0 and the byte offset as the column.
class ParseError : public Error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string &what)
      : Error(format(line, column, what)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  static std::string format(std::size_t line, std::size_t column,
                            const std::string &what) {
    if (line == 0)
      return "offset " + std::to_string(column) + ": " + what;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Iteration, node or time limit hit before the status was proven.
class SolverLimitError : public Error {
public:
  using Error::Error;
};

/// The input is outside what an operation supports (e.g. brute force on a
/// continuous variable, nonlinear instance text).
class UnsupportedError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace optisynth
