#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <doctest.h>

#include "omkit/constants.hpp"
#include "omkit/core_model.hpp"
#include "omkit/diagnostics.hpp"

namespace omkit::test {

inline constexpr double tp = constants::two_pi;

// Reference parameter set with a 1 uW, phi0 = 0.1 drive.
inline OpticalCavity reference_cavity() { return {tp * 195.55e12, tp * 1.5e9, tp * 1.0e9}; }
inline Drive reference_drive() { return {tp * 195.55e12, 1e-6, tp * 7.65e9, 0.1}; }
inline MechanicalMode mode3() { return {tp * 7.65e9, tp * 4.91e6, tp * 452e3, complex(std::sqrt(803.0), 0.0)}; }

inline Interferometer interferometer(double r, double psi, double L2 = 140e-6) {
  Interferometer i;
  i.r = r;
  i.n = 3.05;
  i.L1 = 0.0;
  i.L2 = L2;
  i.phase = psi;
  return i;
}

inline double rel_err(double got, double want) {
  return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
}

inline double rel_err(complex got, complex want) {
  return std::abs(want) == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
}

inline std::vector<double> grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_handler([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_handler(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;
  std::vector<std::string> messages;

 private:
  WarningHandler previous_;
};

}  // namespace omkit::test

#define CHECK_REL(got, want, tol) CHECK(::omkit::test::rel_err((got), (want)) < (tol))
