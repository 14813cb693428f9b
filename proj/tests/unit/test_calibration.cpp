#include "omkit/calibration.hpp"

#include <cmath>
#include <numeric>

#include "omkit/backaction.hpp"
#include "omkit/errors.hpp"
#include "support.hpp"

using namespace omkit;
using omkit::test::tp;

namespace {

const SpectrumGrid kGrid{7.62e9, 2e5, 301, 2e5};
const Environment kRoom{295.0};

double n_th() { return thermal_occupation(kRoom, test::mode3().omega_m); }

SpectrumTrace synth(const Interferometer& interf, double delta, std::uint64_t seed = 0,
                    const SynthesisOptions& options = {}, const SpectrumGrid& grid = kGrid,
                    MechanicalMode mode = test::mode3()) {
  return synthesize_psd(test::reference_cavity(), test::reference_drive(), mode, interf, kRoom, delta, grid, 0.0, seed,
                        options);
}

G0Estimate estimate(const SpectrumTrace& trace, double nth = n_th()) {
  const MechanicalMode m = test::mode3();
  return estimate_g0(trace, m.omega_m, test::reference_drive().omega_c, m.gamma_m, test::reference_drive().phi0, nth);
}

}  // namespace

TEST_CASE("round trip at r = 0") {
  test::WarningCapture quiet;
  const auto est = estimate(synth(test::interferometer(0.0, 0.0), tp * 1e9));
  CHECK_REL(est.g0, tp * 452e3, 0.005);
  CHECK(est.n_th_used == n_th());
  CHECK(est.gamma_m_used == test::mode3().gamma_m);
  CHECK(est.fitted_center == doctest::Approx(7.65e9).epsilon(1e-6));
}

TEST_CASE("round trip holds across the detuning range") {
  test::WarningCapture quiet;
  for (double d : test::grid(-tp * 4e9, tp * 4e9, 17)) {
    if (d == 0.0) continue;  // both tones cancel exactly on resonance
    CHECK_REL(estimate(synth(test::interferometer(0.0, 0.0), d)).g0, tp * 452e3, 0.01);
  }
}

TEST_CASE("on resonance without a beam splitter nothing is detected") {
  test::WarningCapture quiet;
  CHECK_THROWS_AS(estimate(synth(test::interferometer(0.0, 0.0), 0.0)), PeakNotDetected);
}

TEST_CASE("pipeline reproduces the bias sweep") {
  test::WarningCapture quiet;
  const Interferometer interf = test::interferometer(0.2, 0.77 * constants::pi);
  const auto delta = test::grid(-tp * 4e9, tp * 4e9, 41);
  const auto sweep = g0_bias_sweep(test::reference_cavity(), test::reference_drive(), test::mode3(), interf, delta,
                                   test::mode3().g0);
  REQUIRE(sweep.points.size() >= 35);
  for (const auto& p : sweep.points) CHECK_REL(estimate(synth(interf, p.delta)).g0, p.g0_measured, 0.01);
}

TEST_CASE("quadrupling n_th halves g0") {
  test::WarningCapture quiet;
  const SpectrumTrace trace = synth(test::interferometer(0.0, 0.0), tp * 1e9);
  CHECK_REL(estimate(trace, 4 * n_th()).g0, 0.5 * estimate(trace).g0, 1e-12);
}

TEST_CASE("estimator formula on a hand-built trace") {
  // Lorentzian peak 4 P / gamma per Hz, tone P_c / enbw in one bin.
  SpectrumTrace t{0.0, 1e3, 2e3, std::vector<double>(2001, 1.0)};
  const double f_m = 1.0e6, fwhm = 2e4, f_c = 1.6e6;
  const double s_peak = 50.0, s_cal = 400.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double u = 2 * (t.frequency(i) - f_m) / fwhm;
    t.values[i] += s_peak / (1 + u * u);
  }
  t.values[1600] += s_cal;
  const double phi0 = 0.2, nth = 100.0;
  const auto est = estimate_g0(t, tp * f_m, tp * f_c, tp * fwhm, phi0, nth);
  CHECK_REL(est.s_mech_peak, s_peak, 1e-6);
  CHECK_REL(est.s_cal_peak, s_cal, 1e-9);
  const double want = std::sqrt(phi0 * phi0 * std::pow(tp * f_c, 2) / (4 * nth) * (s_peak * tp * fwhm / 4) / (s_cal * 2e3));
  CHECK_REL(est.g0, want, 1e-6);
}

TEST_CASE("no mechanical excess gives zero") {
  SpectrumTrace t{0.0, 1e3, 1e3, std::vector<double>(2001, 1.0)};
  t.values[1600] += 10.0;
  const auto est = estimate_g0(t, tp * 1e6, tp * 1.6e6, tp * 2e4, 0.1, 100.0);
  CHECK(est.g0 == 0.0);
  CHECK(est.s_mech_peak == 0.0);
}

TEST_CASE("estimator errors") {
  SpectrumTrace flat{0.0, 1e3, 1e3, std::vector<double>(2001, 1.0)};
  CHECK_THROWS_AS(estimate_g0(flat, tp * 1e6, tp * 1.6e6, tp * 2e4, 0.1, 100.0), PeakNotDetected);
  CHECK_THROWS_AS(estimate_g0(flat, tp * 3e6, tp * 1.6e6, tp * 2e4, 0.1, 100.0), RangeError);
  CHECK_THROWS_AS(estimate_g0(flat, tp * 1e6, -tp * 1e3, tp * 2e4, 0.1, 100.0), RangeError);
  CHECK_THROWS_AS(estimate_g0(flat, tp * 1e6, tp * 1.6e6, tp * 2e4, 0.0, 100.0), InvalidParameter);
  CHECK_THROWS_AS(estimate_g0(flat, tp * 1e6, tp * 1.6e6, tp * 2e4, 0.1, 0.0), InvalidParameter);
  CHECK_THROWS_AS(estimate_g0(flat, tp * 1e6, tp * 1.6e6, 0.0, 0.1, 100.0), InvalidParameter);
  SpectrumTrace bad = flat;
  bad.values[3] = std::nan("");
  CHECK_THROWS_AS(estimate_g0(bad, tp * 1e6, tp * 1.6e6, tp * 2e4, 0.1, 100.0), InvalidParameter);
}

TEST_CASE("no coupling and no tone give a flat floor") {
  test::WarningCapture quiet;
  MechanicalMode m = test::mode3();
  m.g0 = 0.0;
  Drive d = test::reference_drive();
  d.phi0 = 0.0;
  const auto t = synthesize_psd(test::reference_cavity(), d, m, test::interferometer(0.2, 0.5), kRoom, tp * 1e9, kGrid,
                                1.0, 0, {});
  for (double v : t.values) CHECK(v == 1.0);
}

TEST_CASE("synthesis is deterministic for a seed") {
  test::WarningCapture quiet;
  SynthesisOptions noisy;
  noisy.bin_noise = true;
  const auto a = synth(test::interferometer(0.2, 1.0), tp * 1e9, 99, noisy);
  const auto b = synth(test::interferometer(0.2, 1.0), tp * 1e9, 99, noisy);
  const auto c = synth(test::interferometer(0.2, 1.0), tp * 1e9, 100, noisy);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("synthesized lorentzian carries the mechanical beat power") {
  test::WarningCapture quiet;
  // 32 bins per FWHM over +-600 linewidths; the tone sits 0.5 GHz above the peak.
  Drive drive = test::reference_drive();
  drive.omega_c = tp * 8.15e9;
  const Interferometer interf = test::interferometer(0.2, 0.77 * constants::pi);
  const double delta = tp * 1e9;
  const auto eff = effective_mech_params(test::reference_cavity(), drive, test::mode3(), delta);
  const double center = hertz(eff.omega_eff), fwhm = hertz(eff.gamma_eff);
  const double step = fwhm / 32.0;
  const std::size_t half_bins = 600 * 32;
  const SpectrumGrid grid{center - step * half_bins, step, 2 * half_bins + 1, step};
  const auto trace =
      synthesize_psd(test::reference_cavity(), drive, test::mode3(), interf, kRoom, delta, grid, 0.0, 0, {});

  MechanicalMode thermal = test::mode3();
  thermal.x_m = complex(std::sqrt((2 * n_th() + 1) / 2), 0.0);
  const auto coeffs = output_coefficients(test::reference_cavity(), drive, thermal, interf, delta);
  const double p_mech = std::norm(beat_amplitude(coeffs, Tone::mechanical));
  const double p_cal = std::norm(beat_amplitude(coeffs, Tone::calibration));

  const auto tone = static_cast<std::size_t>(std::llround((8.15e9 - grid.f_start) / step));
  auto lorentz = [&](double f) { return p_mech * (fwhm / 2) / constants::pi / (std::pow(f - center, 2) + fwhm * fwhm / 4); };
  double area = 0.0;
  for (std::size_t i = 0; i < trace.values.size(); ++i)
    area += (i == tone ? lorentz(trace.frequency(i)) : trace.values[i]) * step;
  const double captured = 2.0 / constants::pi * std::atan(2.0 * step * half_bins / fwhm);
  CHECK_REL(area, p_mech, 0.005);
  CHECK_REL(area, p_mech * captured, 1e-4);
  CHECK_REL((trace.values[tone] - lorentz(trace.frequency(tone))) * trace.enbw, p_cal, 1e-9);
}

TEST_CASE("noise leaves the estimator unbiased") {
  test::WarningCapture quiet;
  SynthesisOptions noisy;
  noisy.bin_noise = true;
  const Interferometer bare = test::interferometer(0.0, 0.0);
  const double truth = estimate(synth(bare, tp * 1e9)).g0;
  std::vector<double> g;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) g.push_back(estimate(synth(bare, tp * 1e9, seed, noisy)).g0);
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (g.size() - 1));
  CHECK(sd > 0.0);
  CHECK(std::abs(mean - truth) < sd);
}

TEST_CASE("synthesis errors") {
  test::WarningCapture quiet;
  const Interferometer interf = test::interferometer(0.2, 0.5);
  CHECK_THROWS_AS(synth(interf, tp * 1e9, 0, {}, SpectrumGrid{7.62e9, 2e6, 31, 2e6}), UnderResolved);
  CHECK_THROWS_AS(synth(interf, tp * 1e9, 0, {}, SpectrumGrid{7.70e9, 2e5, 301, 2e5}), RangeError);
  CHECK_THROWS_AS(synth(interf, tp * 1e9, 0, {}, SpectrumGrid{7.62e9, 2e5, 1, 2e5}), InvalidParameter);
  Drive hot = test::reference_drive();
  hot.power = 10.0;
  CHECK_THROWS_AS(synthesize_psd(test::reference_cavity(), hot, test::mode3(), interf, kRoom, test::mode3().omega_m,
                                 kGrid, 0.0, 0, {}),
                  InvalidParameter);
}
