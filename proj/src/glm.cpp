#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "modreg/error.hpp"
#include "modreg/linalg.hpp"
#include "modreg/modular.hpp"

namespace modreg {

double GlmFamily::potential(double t) const {
  switch (name) {
    case GlmFamilyName::gaussian: return 0.5 * t * t;
    case GlmFamilyName::logistic: return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    case GlmFamilyName::poisson: return std::exp(t);
  }
  return 0.0;
}

double GlmFamily::first(double t) const {
  switch (name) {
    case GlmFamilyName::gaussian: return t;
    case GlmFamilyName::logistic:
      if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
      else {
        const double e = std::exp(t);
        return e / (1.0 + e);
      }
    case GlmFamilyName::poisson: return std::exp(t);
  }
  return 0.0;
}

double GlmFamily::second(double t) const {
  switch (name) {
    case GlmFamilyName::gaussian: return 1.0;
    case GlmFamilyName::logistic: {
      const double s = first(t);
      return s * (1.0 - s);
    }
    case GlmFamilyName::poisson: return std::exp(t);
  }
  return 0.0;
}

GlmFamily GlmFamily::parse(const std::string& s) {
  if (s == "gaussian") return {GlmFamilyName::gaussian};
  if (s == "logistic") return {GlmFamilyName::logistic};
  if (s == "poisson") return {GlmFamilyName::poisson};
  throw std::invalid_argument("unknown GLM family '" + s + "' (expected gaussian, logistic or poisson)");
}

std::string to_string(GlmFamilyName name) {
  switch (name) {
    case GlmFamilyName::gaussian: return "gaussian";
    case GlmFamilyName::logistic: return "logistic";
    case GlmFamilyName::poisson: return "poisson";
  }
  return "?";
}

double glm_objective(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& c,
                     const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = x * theta;
  double sum = 0.0;
  for (Index i = 0; i < eta.size(); ++i) sum += family.potential(eta(i));
  return sum / static_cast<double>(x.rows()) - c.dot(theta);
}

namespace {

Eigen::VectorXd glm_gradient(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& c,
                             const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = x * theta;
  const Eigen::VectorXd w = eta.unaryExpr([&](double t) { return family.first(t); });
  return x.transpose() * w / static_cast<double>(x.rows()) - c;
}

Eigen::MatrixXd glm_hessian(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = x * theta;
  const Eigen::VectorXd w = eta.unaryExpr([&](double t) { return family.second(t); });
  Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x / static_cast<double>(x.rows());
  return 0.5 * (h + h.transpose());
}

/// Smallest generalized eigenvalue of H(theta) relative to H(0). Near zero
/// means the curvature has vanished along some direction, which is how
/// separation (or an all-zero Poisson response) shows up once the gradient
/// has become tiny.
double curvature_ratio(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd h0 = glm_hessian(x, family, Eigen::VectorXd::Zero(theta.size()));
  Eigen::LLT<Eigen::MatrixXd> llt(h0);
  if (llt.info() != Eigen::Success) return 1.0;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(glm_hessian(x, family, theta), h0,
                                                               Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return 1.0;
  return es.eigenvalues().minCoeff();
}

[[noreturn]] void separation_error(double norm) {
  throw NumericalError("GLM coefficients diverge (norm " + std::to_string(norm) +
                       ") while the loss keeps decreasing; the data look separable, add regularization");
}

}  // namespace

GlmSolution solve_glm(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& c,
                      const Eigen::VectorXd& init, const NewtonOptions& options) {
  if (x.cols() != c.size() || init.size() != c.size()) throw DataError("GLM: design, cross term and init disagree on p_x");
  GlmSolution sol;
  sol.theta = init;
  sol.objective = glm_objective(x, family, c, sol.theta);
  if (!std::isfinite(sol.objective)) throw NumericalError("GLM objective is not finite at the initial point");
  if (options.record_objective) sol.objective_trace.push_back(sol.objective);

  for (int step = 0; step <= options.max_steps; ++step) {
    const Eigen::VectorXd grad = glm_gradient(x, family, c, sol.theta);
    sol.grad_norm = grad.lpNorm<Eigen::Infinity>();
    sol.steps = step;
    if (sol.grad_norm <= options.grad_tol) {
      if (step > 0 && curvature_ratio(x, family, sol.theta) < options.flat_curvature) separation_error(sol.theta.norm());
      return sol;
    }
    if (step == options.max_steps) break;

    const Eigen::VectorXd dir = SpdFactor(glm_hessian(x, family, sol.theta)).solve(grad);
    const double slope = grad.dot(dir);
    double t = 1.0;
    bool accepted = false;
    const double roundoff = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(sol.objective));
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      const Eigen::VectorXd trial = sol.theta - t * dir;
      const double f = glm_objective(x, family, c, trial);
      if (!std::isfinite(f)) continue;
      bool ok = f < sol.objective && f <= sol.objective - options.armijo * t * slope;
      // near the optimum the decrease drops below the objective's resolution;
      // then the full Newton step is judged by the gradient instead
      if (!ok && h == 0 && f <= sol.objective + roundoff)
        ok = glm_gradient(x, family, c, trial).lpNorm<Eigen::Infinity>() < sol.grad_norm;
      if (!ok) continue;
      const bool decreased = f < sol.objective;
      sol.theta = trial;
      sol.objective = f;
      accepted = true;
      if (decreased && sol.theta.norm() > options.divergence_norm) separation_error(sol.theta.norm());
      break;
    }
    if (options.record_objective) sol.objective_trace.push_back(sol.objective);
    if (!accepted) {
      // no representable decrease left: accept if the gradient is at roundoff level
      if (sol.grad_norm <= 1e2 * options.grad_tol) return sol;
      throw NumericalError("GLM line search failed (gradient norm " + std::to_string(sol.grad_norm) + ")");
    }
  }
  throw NumericalError("GLM Newton iteration did not converge in " + std::to_string(options.max_steps) +
                       " steps (gradient norm " + std::to_string(sol.grad_norm) + ")");
}

Eigen::MatrixXd glm_sandwich_covariance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& per_row,
                                        const GlmFamily& family, const Eigen::VectorXd& theta) {
  if (per_row.rows() != x.rows() || per_row.cols() != x.cols()) throw DataError("sandwich covariance: shape mismatch");
  const Eigen::VectorXd eta = x * theta;
  const Eigen::VectorXd w = eta.unaryExpr([&](double t) { return family.first(t); });
  const Eigen::MatrixXd scores = per_row - scale_rows(x, w);
  const SpdFactor hess(glm_hessian(x, family, theta));
  const Eigen::MatrixXd phi = hess.solve(Eigen::MatrixXd(scores.transpose())).transpose();
  return row_covariance(phi) / static_cast<double>(x.rows());
}

ModularFit modular_glm(const Dataset& d, const ProxyCrossTerm& c, const GlmFamily& family,
                       const std::optional<Eigen::VectorXd>& init, const NewtonOptions& options) {
  if (c.p() != d.p_x()) throw DataError("cross term length does not match p_x");
  const bool identity = c.kind == CrossTermKind::identity;
  if (identity && family.name == GlmFamilyName::logistic && d.has_y())
    for (Index i = 0; i < d.rows(); ++i)
      if (d.y()(i) != 0.0 && d.y()(i) != 1.0) throw DataError("logistic regression needs y in {0, 1}");

  const auto sol = solve_glm(d.x(), family, c.c_hat, init ? *init : Eigen::VectorXd::Zero(d.p_x()), options);
  ModularFit fit;
  fit.theta_hat = sol.theta;
  fit.objective_value = sol.objective;
  fit.tag = identity ? EstimatorTag::glm : EstimatorTag::mod_glm;
  fit.n = d.rows();
  fit.partition = c.partition;
  if (c.terms.size() == 1 && c.terms.front().rows.rows() == d.rows())
    fit.covariance = glm_sandwich_covariance(d.x(), c.per_row(), family, sol.theta);
  return fit;
}

}  // namespace modreg
