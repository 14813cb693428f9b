#pragma once

#include <numbers>

namespace omkit::constants {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J / K
inline constexpr double speed_of_light = 299792458.0;  // m / s

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace omkit::constants

namespace omkit {

// Ordinary frequency (Hz) <-> angular frequency (rad/s). All library code works
// in angular units; conversions happen at the I/O boundary.
constexpr double angular(double hz) { return constants::two_pi * hz; }
constexpr double hertz(double rad_per_s) { return rad_per_s / constants::two_pi; }

}  // namespace omkit
