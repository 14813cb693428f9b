#include "omkit/interferometer.hpp"

#include <cmath>
#include <sstream>

#include "omkit/errors.hpp"
#include "omkit/sideband.hpp"

namespace omkit {

namespace {

constexpr complex kI{0.0, 1.0};

complex carrier_coefficient(const OpticalCavity& cavity, const Drive& drive,
                            const Interferometer& interf, double delta) {
  const double t2 = 1.0 - interf.r * interf.r;
  const double psi = interferometer_phase(interf, drive.omega_L);
  const complex mirror = interf.r * interf.r * interf.r_m * std::polar(1.0, psi);
  return (mirror + t2 * (1.0 - cavity.kappa_ex * susceptibility(cavity, delta, 0.0))) * drive.s0();
}

}  // namespace

OutputCoefficients output_coefficients(const OpticalCavity& cavity, const Drive& drive,
                                       const MechanicalMode& mech, const Interferometer& interf,
                                       double delta) {
  cavity.validate();
  drive.validate();
  mech.validate();
  interf.validate();

  const double r2rm = interf.r * interf.r * interf.r_m;
  const double t2 = 1.0 - interf.r * interf.r;
  const double psi = interferometer_phase(interf, drive.omega_L);
  const double kex = cavity.kappa_ex;
  const double s0 = drive.s0();
  const double sc = drive.s_c();
  const double phi1 = path_phase(interf, Path::mirror, drive.omega_c);
  const double phi2 = path_phase(interf, Path::cavity, drive.omega_c);
  const double phi2m = path_phase(interf, Path::cavity, mech.omega_m);
  const complex chi0 = susceptibility(cavity, delta, 0.0);

  OutputCoefficients out;
  out.a_carrier = carrier_coefficient(cavity, drive, interf, delta);
  out.b_cal = (r2rm * std::polar(1.0, psi + 2.0 * phi1) +
               t2 * (1.0 - kex * susceptibility(cavity, delta, drive.omega_c)) * std::polar(1.0, 2.0 * phi2)) *
              sc;
  out.c_cal = -(r2rm * std::polar(1.0, psi - 2.0 * phi1) +
                t2 * (1.0 - kex * susceptibility(cavity, delta, -drive.omega_c)) * std::polar(1.0, -2.0 * phi2)) *
              sc;
  const complex mech_common = -kI * t2 * kex * mech.g0 * chi0 * s0;
  out.b_mech = mech_common * mech.x_m * susceptibility(cavity, delta, mech.omega_m) * std::polar(1.0, phi2m);
  out.c_mech = mech_common * std::conj(mech.x_m) * susceptibility(cavity, delta, -mech.omega_m) *
               std::polar(1.0, -phi2m);
  return out;
}

OutputCoefficients output_coefficients_path_sum(const OpticalCavity& cavity, const Drive& drive,
                                                const MechanicalMode& mech,
                                                const Interferometer& interf, double delta) {
  interf.validate();
  const SteadyStateAmplitudes a = steady_state_shifted(cavity, drive, mech, interf, delta);
  const double r = interf.r;
  const double t = interf.t();
  const double k = carrier_wavenumber(interf, drive.omega_L);
  const double s0 = drive.s0();
  const double sc = drive.s_c();
  const double sqrt_kex = std::sqrt(cavity.kappa_ex);
  const double phi1 = path_phase(interf, Path::mirror, drive.omega_c);
  const double phi2 = path_phase(interf, Path::cavity, drive.omega_c);
  const double phi2m = path_phase(interf, Path::cavity, mech.omega_m);

  // Mirror path: r r_m e^{i theta} e^{2 i k L1} acting on the input, with
  // sideband round-trip phases 2 phi_1. In fixed-phase mode theta + 2 k L1 is
  // replaced by psi + 2 k L2.
  const double mirror_phase = interf.phase ? *interf.phase + 2.0 * k * interf.L2
                                           : interf.theta + 2.0 * k * interf.L1;
  const complex mirror = r * interf.r_m * std::polar(1.0, mirror_phase);
  const complex m0 = mirror * s0;
  const complex m_minus_c = mirror * sc * std::polar(1.0, 2.0 * phi1);
  const complex m_plus_c = -mirror * sc * std::polar(1.0, -2.0 * phi1);

  // Cavity path at the cavity: s'_in - sqrt(kappa_ex) a, then back over L2.
  const complex in0 = t * std::polar(1.0, k * interf.L2) * s0;
  const complex in_minus_c = t * std::polar(1.0, k * interf.L2 + phi2) * sc;
  const complex in_plus_c = -t * std::polar(1.0, k * interf.L2 - phi2) * sc;
  const complex o0 = std::polar(1.0, k * interf.L2) * (in0 - sqrt_kex * a.a0);
  const complex o_minus_c = std::polar(1.0, k * interf.L2 + phi2) * (in_minus_c - sqrt_kex * a.a_minus_c);
  const complex o_plus_c = std::polar(1.0, k * interf.L2 - phi2) * (in_plus_c - sqrt_kex * a.a_plus_c);
  const complex o_minus_m = std::polar(1.0, k * interf.L2 + phi2m) * (-sqrt_kex * a.a_minus_m);
  const complex o_plus_m = std::polar(1.0, k * interf.L2 - phi2m) * (-sqrt_kex * a.a_plus_m);

  const complex unwind = std::polar(1.0, -2.0 * k * interf.L2);
  OutputCoefficients out;
  out.a_carrier = unwind * (r * m0 + t * o0);
  out.b_cal = unwind * (r * m_minus_c + t * o_minus_c);
  out.c_cal = unwind * (r * m_plus_c + t * o_plus_c);
  out.b_mech = unwind * (t * o_minus_m);
  out.c_mech = unwind * (t * o_plus_m);
  return out;
}

complex beat_amplitude(const OutputCoefficients& coeffs, Tone which) {
  const complex& a = coeffs.a_carrier;
  if (which == Tone::calibration) return std::conj(a) * coeffs.b_cal + a * std::conj(coeffs.c_cal);
  return std::conj(a) * coeffs.b_mech + a * std::conj(coeffs.c_mech);
}

double calibration_threshold(const Drive& drive, const Interferometer& interf, const EtaOptions& options) {
  const double t2 = 1.0 - interf.r * interf.r;
  return options.eps_cal_rel * drive.s0() * drive.s_c() * t2;
}

double eta_g(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
             const Interferometer& interf, double delta, const EtaOptions& options) {
  const OutputCoefficients c = output_coefficients(cavity, drive, mech, interf, delta);
  const double cal = std::abs(beat_amplitude(c, Tone::calibration));
  const double threshold = calibration_threshold(drive, interf, options);
  if (!(cal > threshold)) {
    std::ostringstream os;
    os << "calibration tone too small: |A* B_c + A C_c*| = " << cal << " <= threshold " << threshold;
    throw CalibrationTooSmall(os.str());
  }
  const double mech_beat = std::abs(beat_amplitude(c, Tone::mechanical));
  return (mech_beat * mech_beat) / (cal * cal);
}

double reflection_exact(const OpticalCavity& cavity, const Drive& drive,
                        const Interferometer& interf, double delta) {
  cavity.validate();
  drive.validate();
  interf.validate();
  return std::norm(carrier_coefficient(cavity, drive, interf, delta));
}

double reflection_expanded(const OpticalCavity& cavity, const Drive& drive,
                           const Interferometer& interf, double delta) {
  cavity.validate();
  drive.validate();
  interf.validate();
  const double s0_sq = drive.s0() * drive.s0();
  const double r2rm = interf.r * interf.r * interf.r_m;
  const double t2 = 1.0 - interf.r * interf.r;
  const double t4 = t2 * t2;
  const double psi = interferometer_phase(interf, drive.omega_L);
  const double kappa = cavity.kappa();
  const double eta = cavity.eta_c();
  const double half = 0.5 * kappa;
  const double lead = r2rm + t2 * std::cos(psi);
  // r^2 r_m / (|t|^2 (1 - eta_c)) multiplies cos/sin psi; written as
  // 2|t|^4 kappa (eta - eta^2) * ratio to stay finite at eta_c = 1.
  const double weight = 2.0 * t4 * kappa * (eta - eta * eta);
  const double cross = 2.0 * t2 * kappa * eta * r2rm;  // weight * r^2 r_m / (t^2 (1 - eta))
  const double numerator = weight * half + cross * (half * std::cos(psi) + delta * std::sin(psi));
  return s0_sq * (lead * lead - numerator / (half * half + delta * delta));
}

double fano_constraint_cos_root() {
  // c^2 - c - 1 = 0; the |c| <= 1 root written without cancellation.
  return -2.0 / (1.0 + std::sqrt(5.0));
}

FanoIdentification fano_identification(const OpticalCavity& cavity, const Drive& drive,
                                       const Interferometer& interf) {
  cavity.validate();
  drive.validate();
  interf.validate();
  const double eta = cavity.eta_c();
  if (eta >= 1.0)
    throw InvalidParameter("fano_identification: overcoupled-limit undefined q (eta_c = 1)");
  const double s0_sq = drive.s0() * drive.s0();
  const double r2rm = interf.r * interf.r * interf.r_m;
  const double t2 = 1.0 - interf.r * interf.r;
  const double psi = interferometer_phase(interf, drive.omega_L);
  const double lead = std::abs(r2rm) + t2 * std::cos(psi);

  FanoIdentification id;
  id.psi = psi;
  id.h = s0_sq * lead * lead;
  id.amplitude = 2.0 * s0_sq * t2 * t2 * cavity.kappa() * (eta - eta * eta);
  id.q = r2rm / (t2 * (1.0 - eta)) * std::sin(psi);
  id.cos_root = fano_constraint_cos_root();
  const double root_psi = std::acos(id.cos_root);
  id.psi_roots = {root_psi, -root_psi};
  return id;
}

double fano_reflection(double delta, double h, double amplitude, double q, double kappa) {
  return h - amplitude * ((1.0 - q * q) * 0.5 * kappa - q * delta) / (0.25 * kappa * kappa + delta * delta);
}

BiasSweep g0_bias_sweep(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                        const Interferometer& interf, std::span<const double> delta_grid,
                        double g0_true, const EtaOptions& options) {
  if (delta_grid.empty()) throw InvalidParameter("g0_bias_sweep: empty detuning grid");
  Interferometer reference = interf;
  reference.r = 0.0;

  BiasSweep sweep;
  sweep.points.reserve(delta_grid.size());
  for (const double delta : delta_grid) {
    try {
      const double eta = eta_g(cavity, drive, mech, interf, delta, options);
      const double eta_ref = eta_g(cavity, drive, mech, reference, delta, options);
      if (!(eta_ref > 0.0)) {
        sweep.skipped.push_back({delta, "reference mechanical beat is zero"});
        continue;
      }
      sweep.points.push_back({delta, g0_true * std::sqrt(eta / eta_ref), eta, eta_ref});
    } catch (const CalibrationTooSmall& e) {
      sweep.skipped.push_back({delta, e.what()});
    }
  }
  return sweep;
}

}  // namespace omkit
