#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "omkit/nlls.hpp"

namespace omkit {

// ---------------------------------------------------------------------------
// Fano / Lorentzian reflection fits
//
//   R(delta) = h - A ((1 - q^2) kappa/2 - q u) / (kappa^2/4 + u^2),  u = delta - delta0
//
// Fits are unit-agnostic: delta, kappa and delta0 share the units of the input
// detuning column; A carries (reflection units) x (detuning units).
// ---------------------------------------------------------------------------

struct FanoParams {
  double h = 0.0;
  double amplitude = 0.0;
  double q = 0.0;
  double kappa = 0.0;
  double delta0 = 0.0;
};

struct FanoFitOptions {
  // Only points with |delta - delta0| <= window_kappas * kappa (initial guess)
  // enter the fit; <= 0 uses every point.
  double window_kappas = 3.0;
  double degenerate_q = 10.0;  // |q| above this adds a warning
  std::vector<double> sigma;    // per-point, empty for unit weights
  FitOptions nlls;
};

// R at a single detuning for the given parameters.
double fano_model(double delta, const FanoParams& p);

// Analytic d R / d (h, A, q, kappa, delta0).
std::array<double, 5> fano_jacobian(double delta, const FanoParams& p);

// Heuristic start: h from the trace edges, delta0 at the extremum of |R - h|,
// kappa from the full width at half maximum of |R - h|, A from the depth, and q
// a small value with the sign of the left/right asymmetry.
FanoParams guess_fano(std::span<const double> delta, std::span<const double> reflection);

// Parameters named h, amplitude, q, kappa, delta0.
FitResult fit_fano(std::span<const double> delta, std::span<const double> reflection,
                   std::optional<FanoParams> p0 = std::nullopt, const FanoFitOptions& options = {});

// q frozen at 0; parameters named h, amplitude, kappa, delta0.
FitResult fit_lorentzian(std::span<const double> delta, std::span<const double> reflection,
                         std::optional<FanoParams> p0 = std::nullopt, const FanoFitOptions& options = {});

// ---------------------------------------------------------------------------
// Joint backaction fit of omega_eff(delta) and gamma_eff(delta)
// ---------------------------------------------------------------------------

struct BackactionSample {
  double delta = 0.0;  // rad/s
  double value = 0.0;  // omega_eff or gamma_eff, rad/s
  double sigma = 1.0;  // rad/s
};

struct BackactionFixed {
  double kappa = 0.0;
  double kappa_ex = 0.0;
  double power = 0.0;  // W; nominal scale in coupled mode
  double omega_L = 0.0;
};

struct BackactionGuess {
  double omega_m = 0.0;
  double gamma_m = 0.0;
  double g0 = 0.0;
};

// absolute: fit g0 with P fixed. coupled: fit the product g0^2 P (parameter
// "g0_sq_power", rad^2 s^-2 W), since g0 and P are degenerate.
enum class FitScaleMode { absolute, coupled };

struct BackactionFitOptions {
  FitScaleMode scale_mode = FitScaleMode::absolute;
  FitOptions nlls;
};

// Parameters named omega_m, gamma_m and g0 (or g0_sq_power), all angular.
// gamma_m is omitted when no linewidth samples are given, omega_m when no
// frequency samples are given.
FitResult fit_backaction(std::span<const BackactionSample> frequency,
                         std::span<const BackactionSample> linewidth, const BackactionFixed& fixed,
                         const BackactionGuess& p0, const BackactionFitOptions& options = {});

}  // namespace omkit
