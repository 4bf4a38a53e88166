#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sivmag {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonHermitianError : public Error {
 public:
  NonHermitianError(int row, int col, double deviation)
      : Error("matrix is not Hermitian: worst entry (" + std::to_string(row) + "," +
              std::to_string(col) + ") deviates by " + std::to_string(deviation)),
        row_(row),
        col_(col),
        deviation_(deviation) {}

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }
  double deviation() const noexcept { return deviation_; }

 private:
  int row_;
  int col_;
  double deviation_;
};

// Normal equations are singular: two parameters cannot be told apart.
class IllConditionedError : public Error {
 public:
  IllConditionedError(std::string first, std::string second)
      : Error("ill-conditioned fit: parameters '" + first + "' and '" + second +
              "' are degenerate"),
        first_(std::move(first)),
        second_(std::move(second)) {}

  const std::string& first() const noexcept { return first_; }
  const std::string& second() const noexcept { return second_; }

 private:
  std::string first_;
  std::string second_;
};

class NoSolutionError : public Error {
 public:
  explicit NoSolutionError(double best_residual_hz)
      : Error("no field reproduces the resonances: best RMS misfit " +
              std::to_string(best_residual_hz) + " Hz"),
        best_residual_hz_(best_residual_hz) {}

  double best_residual_hz() const noexcept { return best_residual_hz_; }

 private:
  double best_residual_hz_;
};

class AxialModelViolated : public Error {
 public:
  AxialModelViolated(double b0_t, double residual_hz)
      : Error("resonances inconsistent with an axial field: |nu2 - nu1 - 4D| = " +
              std::to_string(residual_hz) + " Hz"),
        b0_t_(b0_t),
        residual_hz_(residual_hz) {}

  double b0_t() const noexcept { return b0_t_; }
  double residual_hz() const noexcept { return residual_hz_; }

 private:
  double b0_t_;
  double residual_hz_;
};

// Malformed input data (files, config). line() is 1-based, 0 when unknown.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sivmag
