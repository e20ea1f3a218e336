#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace potkit {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t got)
      : Error(what + ": expected size " + std::to_string(expected) + ", got " +
              std::to_string(got)),
        expected_(expected),
        got_(got) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t expected_;
  std::size_t got_;
};

class SymmetryViolation : public Error {
 public:
  SymmetryViolation(std::size_t x, std::size_t y, double defect)
      : Error("jump measure not symmetric at (" + std::to_string(x) + ", " +
              std::to_string(y) + "), relative defect " + std::to_string(defect)),
        x_(x),
        y_(y),
        defect_(defect) {}

  std::size_t x() const noexcept { return x_; }
  std::size_t y() const noexcept { return y_; }
  double defect() const noexcept { return defect_; }

 private:
  std::size_t x_, y_;
  double defect_;
};

class NonStochasticRow : public Error {
 public:
  NonStochasticRow(std::size_t row, double sum)
      : Error("jump kernel row " + std::to_string(row) + " sums to " + std::to_string(sum)),
        row_(row),
        sum_(sum) {}

  std::size_t row() const noexcept { return row_; }
  double sum() const noexcept { return sum_; }

 private:
  std::size_t row_;
  double sum_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SolveFailure : public Error {
 public:
  using Error::Error;
};

class QuadratureNonconvergence : public Error {
 public:
  QuadratureNonconvergence(const std::string& what, double estimate, double error)
      : Error(what + ": estimate " + std::to_string(estimate) + ", error " +
              std::to_string(error)),
        estimate_(estimate),
        error_(error) {}

  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InconsistentFamily : public Error {
 public:
  using Error::Error;
};

class VerificationFailure : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace potkit
