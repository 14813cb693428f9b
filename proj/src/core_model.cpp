#include "omkit/core_model.hpp"

#include <cmath>
#include <string>

#include "omkit/constants.hpp"
#include "omkit/errors.hpp"

namespace omkit {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw InvalidParameter(message);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void OpticalCavity::validate() const {
  require(finite(omega_o) && finite(kappa_0) && finite(kappa_ex), "cavity: non-finite parameter");
  require(kappa_0 >= 0.0, "cavity: kappa_0 must be >= 0");
  require(kappa_ex > 0.0, "cavity: kappa_ex must be > 0");
}

MechanicalMode MechanicalMode::thermal(double omega_m, double gamma_m, double g0, double n_th) {
  require(n_th >= 0.0, "mechanical mode: n_th must be >= 0");
  MechanicalMode mode{omega_m, gamma_m, g0, complex(std::sqrt((2.0 * n_th + 1.0) / 2.0), 0.0)};
  mode.validate();
  return mode;
}

void MechanicalMode::validate() const {
  require(finite(omega_m) && finite(gamma_m) && finite(g0), "mechanical mode: non-finite parameter");
  require(omega_m > 0.0, "mechanical mode: omega_m must be > 0");
  require(gamma_m > 0.0, "mechanical mode: gamma_m must be > 0");
  require(g0 >= 0.0, "mechanical mode: g0 must be >= 0");
  require(finite(x_m.real()) && finite(x_m.imag()), "mechanical mode: non-finite x_m");
}

double Interferometer::t() const { return std::sqrt(1.0 - r * r); }

void Interferometer::validate() const {
  require(r >= 0.0 && r < 1.0, "interferometer: r must lie in [0, 1)");
  require(r_m >= 0.0 && r_m <= 1.0, "interferometer: r_m must lie in [0, 1]");
  require(L1 >= 0.0 && L2 >= 0.0, "interferometer: path lengths must be >= 0");
  require(n > 0.0 && finite(n), "interferometer: refractive index must be > 0");
  require(finite(theta), "interferometer: non-finite theta");
  require(!phase || finite(*phase), "interferometer: non-finite phase");
}

double Drive::s0() const { return std::sqrt(power / (constants::hbar * omega_L)); }

void Drive::validate() const {
  require(finite(omega_L) && omega_L > 0.0, "drive: omega_L must be > 0");
  require(finite(power) && power >= 0.0, "drive: power must be >= 0");
  require(finite(omega_c) && omega_c >= 0.0, "drive: omega_c must be >= 0");
  require(finite(phi0) && phi0 >= 0.0, "drive: phi0 must be >= 0");
}

void Environment::validate() const {
  require(finite(temperature) && temperature >= 0.0, "environment: temperature must be >= 0");
}

complex susceptibility(const OpticalCavity& cavity, double delta, double omega) {
  const double kappa = cavity.kappa();
  if (!(kappa > 0.0)) throw InvalidParameter("susceptibility: kappa must be > 0");
  return 1.0 / complex(0.5 * kappa, -(delta + omega));
}

double intracavity_photon_number(const OpticalCavity& cavity, const Drive& drive, double delta) {
  drive.validate();
  const double half = 0.5 * cavity.kappa();
  return cavity.kappa_ex * drive.power /
         (constants::hbar * drive.omega_L * (delta * delta + half * half));
}

double thermal_occupation(const Environment& env, double omega_m) {
  if (!(omega_m > 0.0)) throw InvalidParameter("thermal_occupation: omega_m must be > 0");
  env.validate();
  return constants::k_boltzmann * env.temperature / (constants::hbar * omega_m);
}

double path_phase(const Interferometer& interf, Path which, double omega) {
  double length = 0.0;
  switch (which) {
    case Path::mirror: length = interf.L1; break;
    case Path::cavity: length = interf.L2; break;
    default:
      throw InvalidParameter("path_phase: path index must be 1 (mirror) or 2 (cavity), got " +
                             std::to_string(static_cast<int>(which)));
  }
  if (length < 0.0) throw InvalidParameter("path_phase: path length must be >= 0");
  return interf.n * length * omega / constants::speed_of_light;
}

double carrier_wavenumber(const Interferometer& interf, double omega_L) {
  return interf.n * omega_L / constants::speed_of_light;
}

double interferometer_phase(const Interferometer& interf, double omega_L) {
  if (interf.phase) return *interf.phase;
  return interf.theta + 2.0 * carrier_wavenumber(interf, omega_L) * interf.delta_L();
}

double single_photon_cooperativity(double g0, double gamma_m, double kappa) {
  if (!(gamma_m > 0.0) || !(kappa > 0.0))
    throw InvalidParameter("cooperativity: gamma_m and kappa must be > 0");
  return 4.0 * g0 * g0 / (gamma_m * kappa);
}

}  // namespace omkit
