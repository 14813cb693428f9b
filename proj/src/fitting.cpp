#include "omkit/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "omkit/backaction.hpp"
#include "omkit/errors.hpp"

namespace omkit {

namespace {

struct Window {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;
};

Window select_window(std::span<const double> delta, std::span<const double> reflection,
                     const FanoParams& start, const FanoFitOptions& options) {
  if (delta.size() != reflection.size())
    throw FitError(FitError::Kind::bad_input, "fano fit: detuning and reflection differ in length");
  if (!options.sigma.empty() && options.sigma.size() != delta.size())
    throw FitError(FitError::Kind::bad_input, "fano fit: sigma and data differ in length");
  Window w;
  const double half_width = options.window_kappas * std::abs(start.kappa);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (options.window_kappas > 0.0 && std::abs(delta[i] - start.delta0) > half_width) continue;
    w.x.push_back(delta[i]);
    w.y.push_back(reflection[i]);
    if (!options.sigma.empty()) w.sigma.push_back(options.sigma[i]);
  }
  if (w.x.size() < 5) throw FitError(FitError::Kind::underdetermined, "fano fit: fewer than 5 points in the fit window");
  const auto [lo, hi] = std::minmax_element(w.x.begin(), w.x.end());
  if (*hi - *lo < std::abs(start.kappa))
    throw FitError(FitError::Kind::bad_input, "fano fit: data span less than one linewidth");
  return w;
}

// Fits in units where the detuning is scaled by x_scale and reflection by
// y_scale, then maps parameters and covariance back.
FitResult fit_fano_impl(std::span<const double> delta, std::span<const double> reflection,
                        std::optional<FanoParams> p0, const FanoFitOptions& options, bool free_q) {
  const FanoParams start = p0 ? *p0 : guess_fano(delta, reflection);
  const Window w = select_window(delta, reflection, start, options);

  const double x_scale = start.kappa != 0.0 ? std::abs(start.kappa) : 1.0;
  double y_scale = 0.0;
  for (double v : w.y) y_scale = std::max(y_scale, std::abs(v));
  if (y_scale == 0.0) y_scale = 1.0;

  std::vector<double> xs(w.x.size()), ys(w.y.size()), sig(w.sigma.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = w.x[i] / x_scale;
    ys[i] = w.y[i] / y_scale;
  }
  for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = w.sigma[i] / y_scale;

  // Parameter order h, A, (q), kappa, delta0 with matching scales.
  std::vector<double> scales{y_scale, y_scale * x_scale};
  std::vector<double> guess{start.h / y_scale, start.amplitude / (y_scale * x_scale)};
  std::vector<std::string> names{"h", "amplitude"};
  if (free_q) {
    scales.push_back(1.0);
    guess.push_back(start.q);
    names.emplace_back("q");
  }
  scales.insert(scales.end(), {x_scale, x_scale});
  guess.insert(guess.end(), {start.kappa / x_scale, start.delta0 / x_scale});
  names.insert(names.end(), {"kappa", "delta0"});

  const Model model = [free_q](std::span<const double> p, double x) {
    FanoParams fp;
    fp.h = p[0];
    fp.amplitude = p[1];
    const std::size_t k = free_q ? 3 : 2;
    fp.q = free_q ? p[2] : 0.0;
    fp.kappa = p[k];
    fp.delta0 = p[k + 1];
    return fano_model(x, fp);
  };

  FitResult fit = nlls_solve(model, xs, ys, guess, options.nlls, sig, names);

  const auto n = static_cast<Eigen::Index>(scales.size());
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i) = scales[static_cast<std::size_t>(i)];
    fit.params[static_cast<std::size_t>(i)] *= s(i);
  }
  fit.covariance = s.asDiagonal() * fit.covariance * s.asDiagonal();
  fit.residual_norm *= y_scale;
  for (double& c : fit.residual_history) c *= y_scale * y_scale;

  const std::size_t kappa_index = fit.index("kappa");
  fit.params[kappa_index] = std::abs(fit.params[kappa_index]);
  if (free_q && std::abs(fit.value("q")) > options.degenerate_q) {
    std::ostringstream os;
    os << "degenerate Fano: |q| = " << std::abs(fit.value("q")) << " exceeds " << options.degenerate_q;
    fit.warnings.push_back(os.str());
  }
  if (std::abs(fit.params[1]) / (y_scale * x_scale) < 1e-9)
    fit.warnings.emplace_back("amplitude ~ 0: no resonance in the data");
  return fit;
}

constexpr double kPlaceholderLinewidth = 1.0;

}  // namespace

double fano_model(double delta, const FanoParams& p) {
  const double u = delta - p.delta0;
  return p.h - p.amplitude * ((1.0 - p.q * p.q) * 0.5 * p.kappa - p.q * u) /
                   (0.25 * p.kappa * p.kappa + u * u);
}

std::array<double, 5> fano_jacobian(double delta, const FanoParams& p) {
  const double u = delta - p.delta0;
  const double d = 0.25 * p.kappa * p.kappa + u * u;
  const double num = (1.0 - p.q * p.q) * 0.5 * p.kappa - p.q * u;
  const double a = p.amplitude;
  return {
      1.0,
      -num / d,
      a * (p.q * p.kappa + u) / d,
      -a * ((1.0 - p.q * p.q) * 0.5 * d - num * 0.5 * p.kappa) / (d * d),
      a * (-p.q * d - 2.0 * u * num) / (d * d),
  };
}

FanoParams guess_fano(std::span<const double> delta, std::span<const double> reflection) {
  const std::size_t n = delta.size();
  if (n < 5 || reflection.size() != n)
    throw FitError(FitError::Kind::bad_input, "guess_fano: need at least 5 matching points");

  const std::size_t edge = std::max<std::size_t>(1, n / 20);
  double h = 0.0;
  for (std::size_t i = 0; i < edge; ++i) h += reflection[i] + reflection[n - 1 - i];
  h /= static_cast<double>(2 * edge);

  std::size_t peak = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(reflection[i] - h) > std::abs(reflection[peak] - h)) peak = i;
  const double depth = reflection[peak] - h;
  const double half = 0.5 * std::abs(depth);

  auto crossing = [&](int dir) -> std::optional<double> {
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak); i + dir >= 0 && i + dir < static_cast<std::ptrdiff_t>(n); i += dir) {
      const double a = std::abs(reflection[static_cast<std::size_t>(i)] - h);
      const double b = std::abs(reflection[static_cast<std::size_t>(i + dir)] - h);
      if (b < half) {
        const double frac = (a - half) / (a - b);
        const double xa = delta[static_cast<std::size_t>(i)];
        const double xb = delta[static_cast<std::size_t>(i + dir)];
        return xa + frac * (xb - xa);
      }
    }
    return std::nullopt;
  };
  const auto left = crossing(-1);
  const auto right = crossing(+1);
  const double x0 = delta[peak];
  double kappa = 0.0;
  if (left && right) kappa = std::abs(*right - *left);
  else if (left) kappa = 2.0 * std::abs(x0 - *left);
  else if (right) kappa = 2.0 * std::abs(*right - x0);
  else kappa = 0.25 * std::abs(delta[n - 1] - delta[0]);
  if (kappa == 0.0) kappa = 0.25 * std::abs(delta[n - 1] - delta[0]);

  FanoParams p;
  p.h = h;
  p.delta0 = x0;
  p.kappa = kappa;
  p.amplitude = -depth * 0.5 * kappa;

  // q > 0 raises the right flank relative to the left one (for A > 0).
  double left_sum = 0.0, right_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = delta[i] - x0;
    if (std::abs(u) > 2.0 * kappa || u == 0.0) continue;
    (u < 0.0 ? left_sum : right_sum) += reflection[i] - h;
  }
  const double asym = (right_sum - left_sum) * (p.amplitude >= 0.0 ? 1.0 : -1.0);
  p.q = asym > 0.0 ? 0.05 : (asym < 0.0 ? -0.05 : 0.0);
  return p;
}

FitResult fit_fano(std::span<const double> delta, std::span<const double> reflection,
                   std::optional<FanoParams> p0, const FanoFitOptions& options) {
  return fit_fano_impl(delta, reflection, p0, options, true);
}

FitResult fit_lorentzian(std::span<const double> delta, std::span<const double> reflection,
                         std::optional<FanoParams> p0, const FanoFitOptions& options) {
  if (p0) p0->q = 0.0;
  return fit_fano_impl(delta, reflection, p0, options, false);
}

FitResult fit_backaction(std::span<const BackactionSample> frequency,
                         std::span<const BackactionSample> linewidth, const BackactionFixed& fixed,
                         const BackactionGuess& p0, const BackactionFitOptions& options) {
  for (double v : {fixed.kappa, fixed.kappa_ex, fixed.power, fixed.omega_L})
    if (!std::isfinite(v)) throw FitError(FitError::Kind::bad_input, "backaction fit: non-finite fixed parameter");
  if (!(fixed.kappa > 0.0) || !(fixed.kappa_ex > 0.0) || fixed.kappa_ex > fixed.kappa || !(fixed.omega_L > 0.0))
    throw FitError(FitError::Kind::bad_input, "backaction fit: need 0 < kappa_ex <= kappa and omega_L > 0");
  if (!(p0.omega_m > 0.0)) throw FitError(FitError::Kind::bad_input, "backaction fit: omega_m guess must be > 0");
  for (const auto& s : frequency)
    if (!(s.sigma > 0.0)) throw FitError(FitError::Kind::bad_input, "backaction fit: sigma must be > 0");
  for (const auto& s : linewidth)
    if (!(s.sigma > 0.0)) throw FitError(FitError::Kind::bad_input, "backaction fit: sigma must be > 0");

  const bool has_freq = !frequency.empty();
  const bool has_lw = !linewidth.empty();
  const std::size_t param_count = 1 + (has_freq ? 1 : 0) + (has_lw ? 1 : 0);
  const std::size_t m = frequency.size() + linewidth.size();
  if (m < 3 || m < param_count)
    throw FitError(FitError::Kind::underdetermined, "backaction fit: fewer detuning points than parameters");

  const OpticalCavity cavity{0.0, fixed.kappa - fixed.kappa_ex, fixed.kappa_ex};
  const Drive unit_drive{fixed.omega_L, 1.0, 0.0, 0.0};  // shifts are linear in P
  const bool coupled = options.scale_mode == FitScaleMode::coupled;
  const double nominal_power = fixed.power > 0.0 ? fixed.power : 1.0;

  const double omega_ref = p0.omega_m;
  const double rate_scale = p0.gamma_m > 0.0 ? p0.gamma_m : 1.0;
  const double g_ref = p0.g0 > 0.0 ? p0.g0 : 1.0;
  const double x_ref = coupled ? (p0.g0 > 0.0 ? p0.g0 * p0.g0 : 1.0) * nominal_power : 0.0;

  // Internal parameters: [(omega_m - omega_ref)/rate_scale], [gamma_m/rate_scale], scale.
  std::vector<double> guess;
  std::vector<std::string> names;
  if (has_freq) {
    guess.push_back(0.0);
    names.emplace_back("omega_m");
  }
  if (has_lw) {
    guess.push_back(p0.gamma_m / rate_scale);
    names.emplace_back("gamma_m");
  }
  guess.push_back(coupled ? 1.0 : (p0.g0 > 0.0 ? 1.0 : 0.0));
  names.emplace_back(coupled ? "g0_sq_power" : "g0");

  auto unpack = [&](std::span<const double> p, double& omega_offset, double& gamma, double& g0_sq_power) {
    std::size_t k = 0;
    omega_offset = has_freq ? p[k++] * rate_scale : 0.0;
    gamma = has_lw ? p[k++] * rate_scale : p0.gamma_m;
    g0_sq_power = coupled ? p[k] * x_ref : (p[k] * g_ref) * (p[k] * g_ref) * fixed.power;
  };

  const ResidualFunction residuals = [&](std::span<const double> p, std::span<double> out) {
    double omega_offset = 0.0, gamma = 0.0, scale = 0.0;
    unpack(p, omega_offset, gamma, scale);
    const MechanicalMode unit_mode{omega_ref + omega_offset, kPlaceholderLinewidth, 1.0, {}};
    std::size_t i = 0;
    for (const auto& s : frequency) {
      const double shift = scale * delta_omega_m(cavity, unit_drive, unit_mode, s.delta);
      out[i++] = ((s.value - omega_ref) - omega_offset - shift) / s.sigma;
    }
    for (const auto& s : linewidth) {
      const double shift = scale * delta_gamma_m(cavity, unit_drive, unit_mode, s.delta);
      out[i++] = (s.value - gamma - shift) / s.sigma;
    }
  };

  FitResult fit = nlls_minimize(residuals, m, guess, options.nlls, names);

  // Map back to physical parameters (linear except g0 = |u| g_ref).
  const auto n = static_cast<Eigen::Index>(fit.params.size());
  Eigen::VectorXd d(n);
  std::size_t k = 0;
  if (has_freq) {
    d(static_cast<Eigen::Index>(k)) = rate_scale;
    fit.params[k] = omega_ref + fit.params[k] * rate_scale;
    ++k;
  }
  if (has_lw) {
    d(static_cast<Eigen::Index>(k)) = rate_scale;
    fit.params[k] *= rate_scale;
    ++k;
  }
  if (coupled) {
    d(static_cast<Eigen::Index>(k)) = x_ref;
    fit.params[k] *= x_ref;
  } else {
    d(static_cast<Eigen::Index>(k)) = g_ref;
    fit.params[k] = std::abs(fit.params[k]) * g_ref;
  }
  fit.covariance = d.asDiagonal() * fit.covariance * d.asDiagonal();
  return fit;
}

}  // namespace omkit
