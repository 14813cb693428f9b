#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace omkit {

// Levenberg-Marquardt with Marquardt diagonal scaling:
//   (J^T J + lambda diag(J^T J)) step = -J^T r
// lambda starts at lambda_initial, is divided by lambda_factor on an accepted
// step and multiplied by it on a rejected one.
struct FitOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;      // ||step|| / ||p||
  double residual_tolerance = 1e-12;  // relative decrease of sum r^2
  double fd_relative_step = 1e-6;     // central differences, per parameter
  double lambda_initial = 1e-3;
  double lambda_factor = 10.0;
  double lambda_max = 1e16;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  Eigen::MatrixXd covariance;  // s^2 (J^T J)^+, s^2 = sum r^2 / (m - n)
  double residual_norm = 0.0;  // sqrt(sum r^2)
  int iterations = 0;
  bool converged = false;
  // Sum of squared residuals at p0 and after every accepted step.
  std::vector<double> residual_history;
  std::vector<std::string> warnings;

  // Lookups by parameter name; throw std::out_of_range for unknown names.
  double value(std::string_view name) const;
  double sigma(std::string_view name) const;
  std::size_t index(std::string_view name) const;
};

// Fills `residuals` (size m) for parameter vector `params`.
using ResidualFunction = std::function<void(std::span<const double> params, std::span<double> residuals)>;

// Scalar model y = f(params, x).
using Model = std::function<double(std::span<const double> params, double x)>;

// Minimizes sum residuals^2 over params starting at p0.
// Throws FitError(no_descent_direction) when no damping up to lambda_max yields
// a usable step, FitError(model_evaluation_failed) when the residuals at an
// accepted point are not finite.
FitResult nlls_minimize(const ResidualFunction& residuals, std::size_t residual_count,
                        std::span<const double> p0, const FitOptions& options = {},
                        std::vector<std::string> names = {});

// Weighted curve fit of y ~ model(params, x); sigma empty means unit weights.
FitResult nlls_solve(const Model& model, std::span<const double> x, std::span<const double> y,
                     std::span<const double> p0, const FitOptions& options = {},
                     std::span<const double> sigma = {}, std::vector<std::string> names = {});

// Central-difference Jacobian d residuals / d params (m x n), per-parameter step
// relative_step * |p_j| (relative_step when p_j = 0).
Eigen::MatrixXd finite_difference_jacobian(const ResidualFunction& residuals, std::size_t residual_count,
                                           std::span<const double> params, double relative_step);

}  // namespace omkit
