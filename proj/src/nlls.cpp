#include "omkit/nlls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "omkit/errors.hpp"

namespace omkit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool all_finite(const VectorXd& v) { return v.allFinite(); }

VectorXd evaluate(const ResidualFunction& f, std::size_t m, const VectorXd& p) {
  VectorXd r(static_cast<Eigen::Index>(m));
  f(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
    std::span<double>(r.data(), m));
  return r;
}

// Pseudo-inverse of a symmetric PSD matrix; eigenvalues below a relative cutoff
// are dropped so the result stays PSD even when J^T J is singular.
MatrixXd symmetric_pinv(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  const VectorXd& w = eig.eigenvalues();
  const double w_max = w.cwiseAbs().maxCoeff();
  const double cutoff = w_max * 1e-14 * static_cast<double>(a.rows());
  VectorXd inv = VectorXd::Zero(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > cutoff) inv(i) = 1.0 / w(i);
  MatrixXd out = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

double FitResult::value(std::string_view name) const { return params.at(index(name)); }

double FitResult::sigma(std::string_view name) const {
  const std::size_t i = index(name);
  const auto k = static_cast<Eigen::Index>(i);
  return std::sqrt(std::max(0.0, covariance(k, k)));
}

std::size_t FitResult::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::out_of_range("FitResult: no parameter named '" + std::string(name) + "'");
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFunction& residuals, std::size_t residual_count,
                                           std::span<const double> params, double relative_step) {
  const auto n = static_cast<Eigen::Index>(params.size());
  const auto m = static_cast<Eigen::Index>(residual_count);
  MatrixXd jac(m, n);
  VectorXd p = Eigen::Map<const VectorXd>(params.data(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double base = p(j);
    const double h = base != 0.0 ? relative_step * std::abs(base) : relative_step;
    p(j) = base + h;
    const VectorXd up = evaluate(residuals, residual_count, p);
    p(j) = base - h;
    const VectorXd down = evaluate(residuals, residual_count, p);
    p(j) = base;
    // Use the realised step so rounding of base +- h does not bias the quotient.
    jac.col(j) = (up - down) / ((base + h) - (base - h));
  }
  return jac;
}

FitResult nlls_minimize(const ResidualFunction& residuals, std::size_t residual_count,
                        std::span<const double> p0, const FitOptions& options,
                        std::vector<std::string> names) {
  const auto n = static_cast<Eigen::Index>(p0.size());
  if (n == 0) throw FitError(FitError::Kind::bad_input, "nlls: no parameters");
  if (residual_count < p0.size())
    throw FitError(FitError::Kind::underdetermined, "nlls: fewer residuals than parameters");
  for (double v : p0)
    if (!std::isfinite(v)) throw FitError(FitError::Kind::bad_input, "nlls: non-finite initial parameter");
  if (names.empty())
    for (Eigen::Index i = 0; i < n; ++i) names.push_back("p" + std::to_string(i));
  if (names.size() != p0.size()) throw FitError(FitError::Kind::bad_input, "nlls: names/params size mismatch");

  VectorXd p = Eigen::Map<const VectorXd>(p0.data(), n);
  VectorXd r = evaluate(residuals, residual_count, p);
  if (!all_finite(r)) throw FitError(FitError::Kind::model_evaluation_failed, "nlls: model evaluation failed at p0");
  double cost = r.squaredNorm();

  FitResult result;
  result.names = std::move(names);
  result.residual_history.push_back(cost);

  double lambda = options.lambda_initial;
  bool converged = cost == 0.0;
  int iteration = 0;

  while (!converged && iteration < options.max_iterations) {
    ++iteration;
    const MatrixXd jac = finite_difference_jacobian(
        residuals, residual_count, std::span<const double>(p.data(), static_cast<std::size_t>(n)),
        options.fd_relative_step);
    if (!jac.allFinite())
      throw FitError(FitError::Kind::model_evaluation_failed, "nlls: model evaluation failed in Jacobian");
    const MatrixXd jtj = jac.transpose() * jac;
    const VectorXd grad = jac.transpose() * r;

    VectorXd scale = jtj.diagonal();
    const double scale_max = scale.maxCoeff();
    const double floor = scale_max > 0.0 ? 1e-12 * scale_max : 1.0;
    scale = scale.cwiseMax(floor);

    bool accepted = false;
    while (!accepted) {
      MatrixXd damped = jtj;
      damped.diagonal() += lambda * scale;
      const Eigen::LDLT<MatrixXd> ldlt(damped);
      VectorXd step = ldlt.solve(-grad);
      const bool solved = ldlt.info() == Eigen::Success && all_finite(step);
      const double rel_step = solved ? step.norm() / (p.norm() + std::numeric_limits<double>::min()) : 0.0;

      if (solved) {
        const VectorXd trial = p + step;
        const VectorXd r_trial = evaluate(residuals, residual_count, trial);
        const double trial_cost = all_finite(r_trial) ? r_trial.squaredNorm() : std::numeric_limits<double>::infinity();
        if (trial_cost < cost) {
          const double rel_change = (cost - trial_cost) / cost;
          p = trial;
          r = r_trial;
          cost = trial_cost;
          result.residual_history.push_back(cost);
          lambda = std::max(lambda / options.lambda_factor, 1e-20);
          accepted = true;
          if (cost == 0.0 || rel_step < options.step_tolerance || rel_change < options.residual_tolerance)
            converged = true;
          break;
        }
        // Rejected: a negligible step cannot improve the fit any further.
        if (rel_step < options.step_tolerance) {
          converged = true;
          break;
        }
      }
      lambda *= options.lambda_factor;
      if (lambda > options.lambda_max)
        throw FitError(FitError::Kind::no_descent_direction, "nlls: no descent direction at maximum damping");
    }
  }

  result.params.assign(p.data(), p.data() + n);
  result.iterations = iteration;
  result.converged = converged;
  result.residual_norm = std::sqrt(cost);

  const MatrixXd jac = finite_difference_jacobian(
      residuals, residual_count, std::span<const double>(p.data(), static_cast<std::size_t>(n)),
      options.fd_relative_step);
  const auto dof = static_cast<double>(residual_count) - static_cast<double>(n);
  const double s2 = dof > 0.0 ? cost / dof : cost;
  result.covariance = jac.allFinite() ? MatrixXd(s2 * symmetric_pinv(jac.transpose() * jac))
                                      : MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  return result;
}

FitResult nlls_solve(const Model& model, std::span<const double> x, std::span<const double> y,
                     std::span<const double> p0, const FitOptions& options,
                     std::span<const double> sigma, std::vector<std::string> names) {
  if (x.size() != y.size()) throw FitError(FitError::Kind::bad_input, "nlls: x and y differ in length");
  if (!sigma.empty() && sigma.size() != y.size())
    throw FitError(FitError::Kind::bad_input, "nlls: sigma and y differ in length");
  for (double s : sigma)
    if (!(s > 0.0)) throw FitError(FitError::Kind::bad_input, "nlls: sigma must be > 0");
  if (x.size() < p0.size())
    throw FitError(FitError::Kind::underdetermined, "nlls: fewer data points than parameters");

  const ResidualFunction residuals = [&](std::span<const double> p, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = sigma.empty() ? 1.0 : sigma[i];
      out[i] = (y[i] - model(p, x[i])) / w;
    }
  };
  return nlls_minimize(residuals, x.size(), p0, options, std::move(names));
}

}  // namespace omkit
