#include "omkit/backaction.hpp"

namespace omkit {

namespace {

double lorentz(double quarter_kappa_sq, double x) { return 1.0 / (quarter_kappa_sq + x * x); }

}  // namespace

double delta_omega_m(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                     double delta) {
  mech.validate();
  const double kappa = cavity.kappa();
  const double q = 0.25 * kappa * kappa;
  const double lo = delta - mech.omega_m;
  const double hi = delta + mech.omega_m;
  const double bracket = lo * lorentz(q, lo) + hi * lorentz(q, hi);
  return mech.g0 * mech.g0 * intracavity_photon_number(cavity, drive, delta) * bracket;
}

double delta_gamma_m(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                     double delta) {
  mech.validate();
  const double kappa = cavity.kappa();
  const double q = 0.25 * kappa * kappa;
  const double bracket = kappa * lorentz(q, delta + mech.omega_m) - kappa * lorentz(q, delta - mech.omega_m);
  return mech.g0 * mech.g0 * intracavity_photon_number(cavity, drive, delta) * bracket;
}

BackactionPoint effective_mech_params(const OpticalCavity& cavity, const Drive& drive,
                                      const MechanicalMode& mech, double delta) {
  BackactionPoint p;
  p.delta = delta;
  p.omega_eff = mech.omega_m + delta_omega_m(cavity, drive, mech, delta);
  p.gamma_eff = mech.gamma_m + delta_gamma_m(cavity, drive, mech, delta);
  p.unstable = p.gamma_eff <= 0.0;
  return p;
}

}  // namespace omkit
