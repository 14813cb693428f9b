#pragma once

#include <complex>
#include <optional>

namespace omkit {

using complex = std::complex<double>;

// All frequencies and rates are angular (rad/s).

struct OpticalCavity {
  double omega_o = 0.0;   // resonance
  double kappa_0 = 0.0;   // intrinsic loss rate
  double kappa_ex = 0.0;  // external (waveguide) loss rate

  double kappa() const { return kappa_0 + kappa_ex; }
  // Coupling efficiency kappa_ex / kappa.
  double eta_c() const { return kappa_ex / kappa(); }

  // Throws InvalidParameter unless kappa_0 >= 0, kappa_ex > 0.
  void validate() const;
};

struct MechanicalMode {
  double omega_m = 0.0;
  double gamma_m = 0.0;
  double g0 = 0.0;
  complex x_m{0.0, 0.0};  // dimensionless displacement amplitude at omega_m

  // Thermal state with |x_m|^2 = (2 n_th + 1) / 2 (real, zero phase), so that
  // <x^2> = 2 |x_m|^2 = 2 n_th + 1.
  static MechanicalMode thermal(double omega_m, double gamma_m, double g0, double n_th);

  void validate() const;
};

struct Interferometer {
  double r = 0.0;    // beam-splitter amplitude reflection, [0, 1)
  double r_m = 1.0;  // mirror amplitude reflectance, [0, 1]
  double theta = 0.0;
  double L1 = 0.0;  // path to the mirror (m)
  double L2 = 0.0;  // path to the cavity (m)
  double n = 1.0;   // refractive index
  // Fixed interferometer phase psi = theta + 2 k DeltaL. When unset, psi is
  // derived from theta and the path lengths at the carrier wavenumber.
  std::optional<double> phase;

  double t() const;
  double delta_L() const { return L1 - L2; }

  void validate() const;
};

struct Drive {
  double omega_L = 0.0;  // laser
  double power = 0.0;    // W
  double omega_c = 0.0;  // calibration modulation
  double phi0 = 0.0;     // phase-modulation depth (rad)

  // Photon-flux amplitude sqrt(P / (hbar omega_L)), s^(-1/2).
  double s0() const;
  // First-order sideband amplitude (phi0 / 2) s0, valid for phi0 << 1.
  double s_c() const { return 0.5 * phi0 * s0(); }

  void validate() const;
};

struct Environment {
  double temperature = 0.0;  // K

  void validate() const;
};

enum class Path { mirror = 1, cavity = 2 };

// chi(omega) = 1 / (kappa/2 - i (delta + omega)).
complex susceptibility(const OpticalCavity& cavity, double delta, double omega);

// kappa_ex P / (hbar omega_L (delta^2 + (kappa/2)^2)).
double intracavity_photon_number(const OpticalCavity& cavity, const Drive& drive, double delta);

// High-temperature occupation k_B T / (hbar omega_m).
double thermal_occupation(const Environment& env, double omega_m);

// phi_j(omega) = n L_j omega / c.
double path_phase(const Interferometer& interf, Path which, double omega);

// k = n omega_L / c.
double carrier_wavenumber(const Interferometer& interf, double omega_L);

// psi = theta + 2 k DeltaL, or the fixed phase when one is set.
double interferometer_phase(const Interferometer& interf, double omega_L);

// Single-photon cooperativity 4 g0^2 / (gamma_m kappa).
double single_photon_cooperativity(double g0, double gamma_m, double kappa);

}  // namespace omkit
