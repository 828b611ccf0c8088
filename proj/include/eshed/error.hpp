#pragma once

#include <stdexcept>
#include <string>

namespace eshed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"
                       : what),
        line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

/// Input is syntactically fine but violates a model invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Inconsistent matrix/vector dimensions or a nonconvex program.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An optimization instance has an empty feasible set.
class InfeasibleError : public Error {
public:
  using Error::Error;
};

/// The solver stopped without reaching an optimality or infeasibility verdict.
class SolverError : public Error {
public:
  using Error::Error;
};

} // namespace eshed
