#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "modreg/crossfit.hpp"
#include "modreg/dataset.hpp"
#include "modreg/lambda_path.hpp"

namespace modreg {

enum class EstimatorTag { mod_ols, ols, mod_glm, glm, mod_lasso, lasso };

std::string to_string(EstimatorTag tag);

/// Result of any estimator in the library.
struct ModularFit {
  Eigen::VectorXd theta_hat;
  /// Estimated covariance of theta_hat, i.e. asymptotic covariance / n.
  std::optional<Eigen::MatrixXd> covariance;
  double objective_value = 0.0;
  EstimatorTag tag = EstimatorTag::mod_ols;
  Index n = 0;
  std::optional<LambdaPath> path;
  std::optional<StructurePartition> partition;

  Index p_x() const noexcept { return theta_hat.size(); }
};

/// theta = G^{-1} c with G = (1/n) X^T X, the minimizer of
/// 0.5 theta^T G theta - c^T theta. Shared by every unpenalized estimator.
Eigen::VectorXd solve_modular_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& c);

/// Modular least squares with cross term `c`. When `c` has per-row
/// contributions the plug-in influence-function covariance is attached.
ModularFit modular_ols(const Dataset& d, const ProxyCrossTerm& c);

/// Classical OLS, computed as the modular estimator with the identity cross term.
ModularFit ols(const Dataset& d);

enum class InfluenceKind { mod, ols };

/// Plug-in covariance of the influence function.
///
///   mod: phi_i = G^{-1} (X_i mu_y(Z_i) + mu_x(Z_i) Y_i - mu_x(Z_i) mu_y(Z_i) - X_i X_i^T theta)
///   ols: phi_i = G^{-1} (X_i Y_i - X_i X_i^T theta)
///
/// with G = (1/n) X^T X. Returns the (1/n) sample covariance of phi_i, an
/// estimate of the asymptotic covariance; divide by n for Var(theta_hat).
Eigen::MatrixXd influence_covariance(const Dataset& d, const CrossFitPredictions& preds, const Eigen::VectorXd& theta,
                                     InfluenceKind which);

/// Same, from the per-row contributions already stored in a cross term.
Eigen::MatrixXd influence_covariance(const Dataset& d, const ProxyCrossTerm& c, const Eigen::VectorXd& theta);

// ---------------------------------------------------------------------------
// Generalized linear models

enum class GlmFamilyName { gaussian, logistic, poisson };

/// Convex potential h(x, theta) = b(x^T theta) of a canonical-link GLM:
/// gaussian b(t) = t^2 / 2, logistic b(t) = log(1 + e^t), poisson b(t) = e^t.
/// The theta-gradient is b'(t) x and the Hessian b''(t) x x^T.
struct GlmFamily {
  GlmFamilyName name = GlmFamilyName::gaussian;

  double potential(double t) const;
  double first(double t) const;
  double second(double t) const;

  static GlmFamily parse(const std::string& s);
};

std::string to_string(GlmFamilyName name);

struct NewtonOptions {
  int max_steps = 100;
  double grad_tol = 1e-10;  ///< on ||gradient||_inf
  double armijo = 1e-4;
  int max_halvings = 60;
  double divergence_norm = 1e3;
  /// Converged iterates whose Hessian has lost this much curvature relative
  /// to theta = 0 in some direction are rejected as separated.
  double flat_curvature = 1e-6;
  bool record_objective = false;
};

/// GLM objective (1/n) sum h(X_i, theta) - c^T theta.
double glm_objective(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& c,
                     const Eigen::VectorXd& theta);

struct GlmSolution {
  Eigen::VectorXd theta;
  double objective = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
  std::vector<double> objective_trace;
};

/// Damped Newton on the GLM objective with backtracking (halving, Armijo).
/// Throws NumericalError on non-convergence, when ||theta|| exceeds
/// divergence_norm while the objective keeps decreasing, or when the converged
/// Hessian is flat relative to the one at zero (both signal separation).
GlmSolution solve_glm(const Eigen::MatrixXd& x, const GlmFamily& family, const Eigen::VectorXd& c,
                      const Eigen::VectorXd& init, const NewtonOptions& options = {});

/// Modular GLM: min (1/n) sum h(X_i, theta) - c^T theta. With the identity
/// cross term this is the maximum-likelihood fit. The sandwich covariance
/// H^{-1} Cov(C_i - b'(X_i^T theta) X_i) H^{-1} / n is attached when `c` has
/// per-row contributions.
///
/// Regularity of h (bounded third derivatives near the optimum) is assumed,
/// not checked.
ModularFit modular_glm(const Dataset& d, const ProxyCrossTerm& c, const GlmFamily& family,
                       const std::optional<Eigen::VectorXd>& init = std::nullopt, const NewtonOptions& options = {});

Eigen::MatrixXd glm_sandwich_covariance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& per_row,
                                        const GlmFamily& family, const Eigen::VectorXd& theta);

}  // namespace modreg
