#pragma once

#include "omkit/core_model.hpp"

namespace omkit {

// Leading-order dynamical backaction. Both shifts are proportional to the
// intracavity photon number; chi is not re-evaluated at the shifted frequency.

struct BackactionPoint {
  double delta = 0.0;
  double omega_eff = 0.0;
  double gamma_eff = 0.0;
  bool unstable = false;  // gamma_eff <= 0: parametric instability regime
};

// Optical-spring shift of the mechanical frequency (rad/s).
double delta_omega_m(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                     double delta);

// Optomechanical damping; positive on the red side (delta < 0).
double delta_gamma_m(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                     double delta);

BackactionPoint effective_mech_params(const OpticalCavity& cavity, const Drive& drive,
                                      const MechanicalMode& mech, double delta);

}  // namespace omkit
