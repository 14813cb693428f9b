#include "omkit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "omkit/backaction.hpp"
#include "omkit/constants.hpp"
#include "omkit/errors.hpp"
#include "omkit/nlls.hpp"

namespace omkit {

namespace {

void require_in_span(const char* what, double f, double lo, double hi) {
  if (f < lo || f > hi) {
    std::ostringstream os;
    os << what << " at " << f << " Hz lies outside the trace [" << lo << ", " << hi << "] Hz";
    throw RangeError(os.str());
  }
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double lorentzian_peak(double x, double center, double fwhm) {
  const double u = 2.0 * (x - center) / fwhm;
  return 1.0 / (1.0 + u * u);
}

}  // namespace

void SpectrumTrace::validate() const {
  if (!(f_step > 0.0) || !std::isfinite(f_step)) throw InvalidParameter("spectrum: f_step must be > 0");
  if (!(enbw > 0.0) || !std::isfinite(enbw)) throw InvalidParameter("spectrum: enbw must be > 0");
  if (!std::isfinite(f_start)) throw InvalidParameter("spectrum: non-finite f_start");
  if (values.empty()) throw InvalidParameter("spectrum: no samples");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidParameter("spectrum: non-finite PSD value");
}

G0Estimate estimate_g0(const SpectrumTrace& trace, double omega_m, double omega_c, double gamma_m,
                       double phi0, double n_th, const EstimatorOptions& options) {
  trace.validate();
  if (!(phi0 > 0.0)) throw InvalidParameter("estimate_g0: phi0 must be > 0");
  if (!(n_th > 0.0)) throw InvalidParameter("estimate_g0: n_th must be > 0");
  if (!(gamma_m > 0.0)) throw InvalidParameter("estimate_g0: gamma_m must be > 0");

  const double f_m = hertz(omega_m);
  const double f_c = hertz(omega_c);
  const double fwhm = hertz(gamma_m);
  require_in_span("mechanical frequency", f_m, trace.f_start, trace.f_stop());
  require_in_span("calibration frequency", f_c, trace.f_start, trace.f_stop());

  const std::size_t count = trace.values.size();
  const double cal_half = options.cal_window_enbw * trace.enbw;
  const double mech_half = options.mech_window_linewidths * fwhm;
  auto in_tone_window = [&](std::size_t i) { return std::abs(trace.frequency(i) - f_c) <= cal_half; };

  // Tone: maximum bin near omega_c (the nearest bin is always a candidate).
  const auto nearest_c = static_cast<std::size_t>(
      std::clamp(std::llround((f_c - trace.f_start) / trace.f_step), 0LL, static_cast<long long>(count - 1)));
  std::size_t tone = nearest_c;
  for (std::size_t i = 0; i < count; ++i)
    if (in_tone_window(i) && trace.values[i] > trace.values[tone]) tone = i;

  // Mechanical window with the tone masked out.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = trace.frequency(i);
    if (std::abs(f - f_m) > mech_half || in_tone_window(i) || i == tone) continue;
    xs.push_back((f - f_m) / fwhm);
    ys.push_back(trace.values[i]);
  }
  if (xs.size() < 5) throw PeakNotDetected("estimate_g0: fewer than 5 usable bins around the mechanical peak");

  const auto [min_it, max_it] = std::minmax_element(ys.begin(), ys.end());
  const double floor0 = *min_it;
  const double excess0 = *max_it - floor0;

  G0Estimate out;
  out.gamma_m_used = gamma_m;
  out.n_th_used = n_th;

  bool mech_present = excess0 > 1e-12 * std::max(std::abs(*max_it), std::abs(floor0));
  std::vector<double> fitted;  // [floor, amplitude, centre, fwhm] in normalised units
  if (mech_present) {
    const std::size_t argmax = static_cast<std::size_t>(max_it - ys.begin());
    std::vector<double> yn(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) yn[i] = (ys[i] - floor0) / excess0;
    const Model model = [](std::span<const double> p, double x) {
      return p[0] + p[1] * lorentzian_peak(x, p[2], p[3]);
    };
    const std::vector<double> p0{0.0, 1.0, xs[argmax], 1.0};
    FitResult fit;
    try {
      fit = nlls_solve(model, xs, yn, p0, {}, {}, {"floor", "amplitude", "center", "fwhm"});
    } catch (const FitError& e) {
      throw PeakNotDetected(std::string("estimate_g0: mechanical peak fit failed: ") + e.what());
    }
    if (!fit.converged || !(fit.params[1] > 0.0) || fit.params[3] == 0.0)
      throw PeakNotDetected("estimate_g0: mechanical peak not detected above the noise floor");
    fitted = fit.params;
    fitted[3] = std::abs(fitted[3]);
    out.s_mech_peak = fitted[1] * excess0;
    out.fitted_center = f_m + fitted[2] * fwhm;
    out.fitted_linewidth = fitted[3] * fwhm;
  }

  // Tone background: the mechanical model when the tone sits inside the fit
  // window, otherwise the median of the remaining tone-window bins.
  const double f_tone = trace.frequency(tone);
  double background = 0.0;
  if (mech_present && std::abs(f_tone - f_m) <= mech_half) {
    const double x = (f_tone - f_m) / fwhm;
    background = floor0 + excess0 * (fitted[0] + fitted[1] * lorentzian_peak(x, fitted[2], fitted[3]));
  } else {
    std::vector<double> rest;
    for (std::size_t i = 0; i < count; ++i)
      if (i != tone && in_tone_window(i)) rest.push_back(trace.values[i]);
    if (rest.empty()) {
      if (tone > 0) rest.push_back(trace.values[tone - 1]);
      if (tone + 1 < count) rest.push_back(trace.values[tone + 1]);
    }
    background = rest.empty() ? 0.0 : median(std::move(rest));
  }
  out.s_cal_peak = trace.values[tone] - background;
  if (!(out.s_cal_peak > 1e-12 * std::abs(trace.values[tone])))
    throw PeakNotDetected("estimate_g0: calibration tone not detected above the background");

  const double ratio = (out.s_mech_peak * gamma_m / 4.0) / (out.s_cal_peak * trace.enbw);
  out.g0 = std::sqrt(phi0 * phi0 * omega_c * omega_c / (4.0 * n_th) * ratio);
  return out;
}

SpectrumTrace synthesize_psd(const OpticalCavity& cavity, const Drive& drive, const MechanicalMode& mech,
                             const Interferometer& interf, const Environment& env, double delta,
                             const SpectrumGrid& grid, double noise_floor, std::uint64_t seed,
                             const SynthesisOptions& options) {
  if (grid.points < 2) throw InvalidParameter("synthesize_psd: grid needs at least 2 points");
  if (!std::isfinite(noise_floor)) throw InvalidParameter("synthesize_psd: non-finite noise floor");
  if (options.bin_noise && options.averages < 1) throw InvalidParameter("synthesize_psd: averages must be >= 1");

  SpectrumTrace trace{grid.f_start, grid.f_step, grid.enbw, {}};
  trace.values.assign(grid.points, noise_floor);
  trace.validate();

  require_in_span("mechanical frequency", hertz(mech.omega_m), trace.f_start, trace.f_stop());
  require_in_span("calibration frequency", hertz(drive.omega_c), trace.f_start, trace.f_stop());

  const double n_th = thermal_occupation(env, mech.omega_m);
  MechanicalMode thermal = mech;
  thermal.x_m = complex(std::sqrt((2.0 * n_th + 1.0) / 2.0), 0.0);

  const BackactionPoint eff = effective_mech_params(cavity, drive, mech, delta);
  if (eff.unstable) throw InvalidParameter("synthesize_psd: parametric instability (gamma_eff <= 0)");
  const double fwhm = hertz(eff.gamma_eff);
  if (fwhm / grid.f_step < options.min_bins_per_linewidth) {
    std::ostringstream os;
    os << "synthesize_psd: under-resolved, " << fwhm / grid.f_step << " bins across the mechanical FWHM (need "
       << options.min_bins_per_linewidth << ")";
    throw UnderResolved(os.str());
  }

  const OutputCoefficients coeffs = output_coefficients(cavity, drive, thermal, interf, delta);
  const double mech_power = std::norm(beat_amplitude(coeffs, Tone::mechanical));
  const double cal_power = std::norm(beat_amplitude(coeffs, Tone::calibration));

  const double center = hertz(eff.omega_eff);
  const double half = 0.5 * fwhm;
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double u = trace.frequency(i) - center;
    trace.values[i] += mech_power * half / (constants::pi * (u * u + half * half));
  }
  const auto tone = static_cast<std::size_t>(std::llround((hertz(drive.omega_c) - grid.f_start) / grid.f_step));
  trace.values[tone] += cal_power / grid.enbw;

  if (options.bin_noise) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> averaged(options.averages, 1.0 / options.averages);
    for (double& v : trace.values) v *= averaged(rng);
  }
  return trace;
}

}  // namespace omkit
