#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "omkit/core_model.hpp"
#include "omkit/interferometer.hpp"

namespace omkit {

// Detector PSD on a uniform grid in ordinary frequency. Values are power per Hz
// (arbitrary power units); enbw is the analyzer bin's effective noise bandwidth.
struct SpectrumTrace {
  double f_start = 0.0;  // Hz
  double f_step = 0.0;   // Hz
  double enbw = 0.0;     // Hz
  std::vector<double> values;

  double frequency(std::size_t i) const { return f_start + static_cast<double>(i) * f_step; }
  double f_stop() const { return values.empty() ? f_start : frequency(values.size() - 1); }

  // f_step > 0, enbw > 0, all values finite.
  void validate() const;
};

// Grid description for synthesis (a SpectrumTrace without values).
struct SpectrumGrid {
  double f_start = 0.0;
  double f_step = 0.0;
  std::size_t points = 0;
  double enbw = 0.0;
};

struct G0Estimate {
  double g0 = 0.0;           // rad/s
  double s_mech_peak = 0.0;  // fitted Lorentzian peak above the floor
  double s_cal_peak = 0.0;   // tone bin above its local background
  double gamma_m_used = 0.0;
  double n_th_used = 0.0;
  double fitted_center = 0.0;     // Hz, mechanical fit
  double fitted_linewidth = 0.0;  // Hz (FWHM), mechanical fit
};

struct EstimatorOptions {
  double mech_window_linewidths = 5.0;  // half-width of the mechanical fit window
  double cal_window_enbw = 3.0;         // half-width of the tone search window
};

// Calibration-tone estimate
//   g0 = sqrt( phi0^2 omega_c^2 / (4 n_th) * (S_mech gamma_m / 4) / (S_cal f_ENBW) )
// with S per Hz, gamma_m angular and f_ENBW in Hz. Tone bins are masked from the
// mechanical fit, so omega_c may coincide with omega_m.
// Throws RangeError when omega_m or omega_c lies outside the trace,
// PeakNotDetected when the tone has no excess or the mechanical fit fails,
// InvalidParameter for phi0 <= 0, n_th <= 0 or gamma_m <= 0.
G0Estimate estimate_g0(const SpectrumTrace& trace, double omega_m, double omega_c, double gamma_m,
                       double phi0, double n_th, const EstimatorOptions& options = {});

struct SynthesisOptions {
  bool bin_noise = false;  // multiply each bin by a Gamma(N, 1/N) variate
  int averages = 100;      // N
  double min_bins_per_linewidth = 8.0;
};

// Forward model of the detected PSD at detuning `delta`:
//   floor + Lorentzian (FWHM gamma_eff, centre omega_eff, area |beat_mech|^2)
//         + one-bin tone at omega_c of power |beat_cal|^2 spread over one ENBW,
// with |x_m|^2 = (2 n_th + 1)/2 from the environment. Deterministic for a
// fixed seed. Throws UnderResolved when fewer than min_bins_per_linewidth bins
// span gamma_eff, RangeError when the grid misses omega_m or omega_c,
// InvalidParameter in the parametric-instability regime.
SpectrumTrace synthesize_psd(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                             const Interferometer& interf, const Environment& env, double delta,
                             const SpectrumGrid& grid, double noise_floor, std::uint64_t seed,
                             const SynthesisOptions& options = {});

}  // namespace omkit
