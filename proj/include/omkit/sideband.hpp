#pragma once

#include <optional>
#include <string>

#include "omkit/core_model.hpp"

namespace omkit {

// Steady-state intracavity amplitudes at the carrier and at the +-omega_c
// (calibration) and +-omega_m (mechanical) sidebands. The static displacement
// is absorbed into `delta`.
struct SteadyStateAmplitudes {
  complex a0;
  complex a_minus_c;
  complex a_plus_c;
  complex a_minus_m;
  complex a_plus_m;
};

// Sideband overlap threshold: the solver assumes |omega_m - omega_c| >> gamma_m
// and warns below this many linewidths.
inline constexpr double kSidebandOverlapLinewidths = 10.0;

// Returns a warning message when the calibration tone and the mechanical line
// overlap within kSidebandOverlapLinewidths linewidths.
std::optional<std::string> sideband_overlap_warning(const Drive& drive, const MechanicalMode& mech);

// Mechanical motion is an input (x_m), not solved self-consistently.
SteadyStateAmplitudes steady_state(const OpticalCavity& cavity, const Drive& drive,
                                   const MechanicalMode& mech, double delta);

// Same, with the input passed through the beam splitter (t) and propagated over
// L2: every component picks up t e^{i k L2}, the calibration sidebands an extra
// e^{+-i phi_2(omega_c)}.
SteadyStateAmplitudes steady_state_shifted(const OpticalCavity& cavity, const Drive& drive,
                                           const MechanicalMode& mech,
                                           const Interferometer& interf, double delta);

}  // namespace omkit
