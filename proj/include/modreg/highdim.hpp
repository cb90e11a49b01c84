#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "modreg/crossfit.hpp"
#include "modreg/dataset.hpp"
#include "modreg/lambda_path.hpp"
#include "modreg/learners.hpp"
#include "modreg/modular.hpp"

namespace modreg {

/// l1-penalized modular regression: min 0.5 theta^T G theta - c^T theta + lambda ||D theta||_1
/// with G = (1/n) X^T X, lambda chosen by K-fold CV on held-out (Y - X theta)^2.
/// The cross term's per-row contributions are re-averaged over each training
/// fold. Identity-kind c gives the plain Lasso (tag lasso).
ModularFit modular_lasso(const Dataset& d, const ProxyCrossTerm& c, const PenaltyConfig& config, std::uint64_t seed);

/// Plain Lasso of y on x (no intercept).
ModularFit lasso(const Dataset& d, const PenaltyConfig& config, std::uint64_t seed);

/// Default penalty settings for learn_structure: 1se rule.
PenaltyConfig structure_penalty();

/// Lasso of Y on (X, Z); J2 holds the X coordinates with a nonzero
/// coefficient at the CV-chosen lambda.
StructurePartition learn_structure(const Dataset& d, const PenaltyConfig& config, std::uint64_t seed);
inline StructurePartition learn_structure(const Dataset& d, std::uint64_t seed) {
  return learn_structure(d, structure_penalty(), seed);
}

/// Structure learned on a random half of the rows, estimation on the other.
struct HonestStructure {
  StructurePartition partition;
  std::vector<Index> structure_rows;  ///< sorted, 0-based rows of d
  Dataset estimation;                 ///< the remaining rows, in their original order
};

/// Splits d in two with split_folds(n, 2, derive_seed(seed, 0x5157)): fold 0
/// learns J2, fold 1 is returned for the cross term and the fit.
HonestStructure learn_structure_honest(const Dataset& d, const PenaltyConfig& config, std::uint64_t seed);

/// Conditioning set for the outcome sub-task: Z^full = (Z, X_J2) or Z alone.
enum class OutcomeFeatures { full, z_only };

/// Structured cross term. For j in J1 the three-term contribution is
///   X_ij mu_y(W_i) + mu_x,j(W_i) Y_i - mu_x,j(W_i) mu_y(W_i),  W = (Z, X_J2);
/// for j in J2 it is X_ij Y_i.
ProxyCrossTerm proxy_cross_term_struct(const Dataset& d, const StructurePartition& partition,
                                       const Learner& learner_x, const Learner& learner_y,
                                       const FoldAssignment& folds, OutcomeFeatures mode = OutcomeFeatures::full);

/// Symmetric linear smoother standing in for the sub-task regressions.
struct ProjectionOperator {
  enum class Source { identity, ols_hat, ridge_hat };
  Eigen::MatrixXd pi;
  Source source = Source::identity;
  double eta = 0.0;

  Index rows() const noexcept { return pi.rows(); }
  static ProjectionOperator identity(Index n);
};

/// Z (Z^T Z + eta I)^{-1} Z^T through a p_z x p_z factorization.
ProjectionOperator ridge_hat(const Eigen::MatrixXd& z, double eta);
/// Z (Z^T Z)^{-1} Z^T.
ProjectionOperator ols_hat(const Eigen::MatrixXd& z);

/// (Pi_y + Pi_x - Pi_x Pi_y) y.
Eigen::VectorXd projected_response(const ProjectionOperator& pi_x, const ProjectionOperator& pi_y,
                                   const Eigen::VectorXd& y);

/// Lasso of X on the projected response, lambda by CV.
ModularFit projection_shortcut(const Dataset& d, const ProjectionOperator& pi_x, const ProjectionOperator& pi_y,
                               const PenaltyConfig& config, std::uint64_t seed);

struct EtaSelection {
  double eta_x = 0.0;
  double eta_y = 0.0;
  Eigen::MatrixXd cv_error;  ///< eta_x index x eta_y index, best over lambda
  ModularFit fit;
};

/// Grid search over (eta_x, eta_y) by K-fold CV. In each fold the ridge hats
/// are rebuilt from the training rows, the Lasso path is fitted on the
/// training projected response, and held-out rows are scored by (Y - X theta)^2
/// on the raw response. A cell's error is its best mean CV error over lambda.
/// The returned fit is projection_shortcut at the selected cell.
EtaSelection cv_projection_etas(const Dataset& d, const std::vector<double>& eta_grid_x,
                                const std::vector<double>& eta_grid_y, const PenaltyConfig& config,
                                std::uint64_t seed);

}  // namespace modreg
