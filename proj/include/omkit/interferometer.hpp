#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "omkit/core_model.hpp"

namespace omkit {

// Frequency components of the detected field after the beam splitter, with the
// common factor e^{i(omega_L t - 2 k L2)} removed:
//   s_out(0)        = A
//   s_out(omega_c)  = B_c e^{-i omega_c t} + C_c e^{+i omega_c t}
//   s_out(omega_m)  = B_m e^{-i omega_m t} + C_m e^{+i omega_m t}
struct OutputCoefficients {
  complex a_carrier;
  complex b_cal;
  complex c_cal;
  complex b_mech;
  complex c_mech;
};

enum class Tone { calibration, mechanical };

struct EtaOptions {
  // A calibration beat with |A* B_c + A C_c*| <= eps_cal_rel * s0 * s_c * t^2
  // counts as undetectable.
  double eps_cal_rel = 0.02;
};

struct FanoIdentification {
  double h = 0.0;
  double amplitude = 0.0;  // A in R = h - A((1-q^2) kappa/2 - q delta)/(kappa^2/4 + delta^2)
  double q = 0.0;
  double psi = 0.0;        // interferometer phase used
  double cos_root = 0.0;   // cos psi solving cos psi = -sin^2 psi
  std::array<double, 2> psi_roots{};  // +-acos(cos_root)
};

struct BiasPoint {
  double delta = 0.0;
  double g0_measured = 0.0;
  double eta_g = 0.0;
  double eta_g_ref = 0.0;  // same detuning, r = 0
};

struct SkippedPoint {
  double delta = 0.0;
  std::string reason;
};

struct BiasSweep {
  std::vector<BiasPoint> points;
  std::vector<SkippedPoint> skipped;
};

// Closed-form coefficients (production path).
OutputCoefficients output_coefficients(const OpticalCavity& cavity, const Drive& drive,
                                       const MechanicalMode& mech, const Interferometer& interf,
                                       double delta);

// Same coefficients built constructively: the mirror-path field plus the
// cavity-path field assembled from steady_state_shifted and input-output
// theory, with return propagation over L2. Used to cross-check the closed forms.
OutputCoefficients output_coefficients_path_sum(const OpticalCavity& cavity, const Drive& drive,
                                                const MechanicalMode& mech,
                                                const Interferometer& interf, double delta);

// A* B + A C* for the selected frequency component. The intensity modulation is
// this value times e^{-i Omega t} plus its conjugate.
complex beat_amplitude(const OutputCoefficients& coeffs, Tone which);

// Threshold below which a calibration beat is treated as undetectable.
double calibration_threshold(const Drive& drive, const Interferometer& interf,
                             const EtaOptions& options = {});

// Mechanics/calibration power ratio |beat_mech|^2 / |beat_cal|^2. Throws
// CalibrationTooSmall when the calibration beat is below calibration_threshold.
double eta_g(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
             const Interferometer& interf, double delta, const EtaOptions& options = {});

// Carrier reflection |A|^2 (photon flux, 1/s).
double reflection_exact(const OpticalCavity& cavity, const Drive& drive,
                        const Interferometer& interf, double delta);

// The expanded form of |A|^2: constant (|r^2 r_m| + |t|^2 cos psi)^2 plus the
// Lorentzian/dispersive term. Omits the delta-independent |t|^4 sin^2 psi.
double reflection_expanded(const OpticalCavity& cavity, const Drive& drive,
                           const Interferometer& interf, double delta);

// cos psi solving cos psi = -sin^2 psi, i.e. the root of c^2 - c - 1 = 0 with
// |c| <= 1: (1 - sqrt 5) / 2.
double fano_constraint_cos_root();

// Maps the interferometer model onto (h, A, q). Throws InvalidParameter when
// eta_c = 1 (q undefined in the overcoupled limit).
FanoIdentification fano_identification(const OpticalCavity& cavity, const Drive& drive,
                                       const Interferometer& interf);

// R(delta) = h - A ((1 - q^2) kappa/2 - q delta) / (kappa^2/4 + delta^2).
double fano_reflection(double delta, double h, double amplitude, double q, double kappa);

// g0_measured(delta) = g0_true sqrt(eta_g(delta) / eta_g_ref(delta)), where the
// reference has r = 0. Points where either calibration beat is undetectable are
// listed in `skipped`. Throws InvalidParameter on an empty grid.
BiasSweep g0_bias_sweep(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                        const Interferometer& interf, std::span<const double> delta_grid,
                        double g0_true, const EtaOptions& options = {});

}  // namespace omkit
