#include "omkit/sideband.hpp"

#include <cmath>
#include <sstream>

#include "omkit/diagnostics.hpp"

namespace omkit {

namespace {

constexpr complex kI{0.0, 1.0};

}  // namespace

std::optional<std::string> sideband_overlap_warning(const Drive& drive, const MechanicalMode& mech) {
  const double separation = std::abs(mech.omega_m - drive.omega_c);
  if (drive.phi0 == 0.0 || separation >= kSidebandOverlapLinewidths * mech.gamma_m)
    return std::nullopt;
  std::ostringstream os;
  os << "calibration tone lies within " << separation / mech.gamma_m
     << " mechanical linewidths of omega_m; the sideband solution assumes "
        "|omega_m - omega_c| >> gamma_m";
  return os.str();
}

SteadyStateAmplitudes steady_state(const OpticalCavity& cavity, const Drive& drive,
                                   const MechanicalMode& mech, double delta) {
  cavity.validate();
  drive.validate();
  mech.validate();
  if (auto warning = sideband_overlap_warning(drive, mech)) emit_warning(*warning);

  const double sqrt_kex = std::sqrt(cavity.kappa_ex);
  const double s0 = drive.s0();
  const double sc = drive.s_c();
  const complex chi0 = susceptibility(cavity, delta, 0.0);
  const complex mech_drive = kI * sqrt_kex * mech.g0 * s0 * chi0;

  SteadyStateAmplitudes out;
  out.a0 = sqrt_kex * s0 * chi0;
  out.a_minus_c = sqrt_kex * sc * susceptibility(cavity, delta, drive.omega_c);
  out.a_plus_c = -sqrt_kex * sc * susceptibility(cavity, delta, -drive.omega_c);
  out.a_minus_m = mech_drive * mech.x_m * susceptibility(cavity, delta, mech.omega_m);
  out.a_plus_m = mech_drive * std::conj(mech.x_m) * susceptibility(cavity, delta, -mech.omega_m);
  return out;
}

SteadyStateAmplitudes steady_state_shifted(const OpticalCavity& cavity, const Drive& drive,
                                           const MechanicalMode& mech,
                                           const Interferometer& interf, double delta) {
  interf.validate();
  SteadyStateAmplitudes out = steady_state(cavity, drive, mech, delta);
  const complex common = interf.t() * std::polar(1.0, carrier_wavenumber(interf, drive.omega_L) * interf.L2);
  const double phi2 = path_phase(interf, Path::cavity, drive.omega_c);
  out.a0 *= common;
  out.a_minus_c *= common * std::polar(1.0, phi2);
  out.a_plus_c *= common * std::polar(1.0, -phi2);
  out.a_minus_m *= common;
  out.a_plus_m *= common;
  return out;
}

}  // namespace omkit
