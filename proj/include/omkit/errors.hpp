#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace omkit {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A physical record or argument violates its invariants.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// The calibration beat |A* B_c + A C_c*| is below the detectability threshold.
class CalibrationTooSmall : public Error {
 public:
  using Error::Error;
};

// A requested frequency lies outside a spectrum trace.
class RangeError : public Error {
 public:
  using Error::Error;
};

class PeakNotDetected : public Error {
 public:
  using Error::Error;
};

// Synthesis grid too coarse to resolve the mechanical linewidth.
class UnderResolved : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  enum class Kind { no_descent_direction, model_evaluation_failed, underdetermined, bad_input };

  FitError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Configuration file problems; `field` is a dotted JSON path or empty.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field = {})
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed data files; `row` is the 1-based line number in the file, 0 if unknown.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace omkit
