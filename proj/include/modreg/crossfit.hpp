#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modreg/dataset.hpp"
#include "modreg/lambda_path.hpp"
#include "modreg/learners.hpp"

namespace modreg {

/// Out-of-fold estimates of E[X | Z] (n x p_x) and E[Y | Z] (n).
///
/// When `plan` is set, row i's values came from models fitted without fold
/// plan.fold_of_row[i]; `trained_without` records that fold per row. Oracle
/// (known-truth) predictions carry no plan.
struct CrossFitPredictions {
  Eigen::MatrixXd mu_x_hat;
  Eigen::VectorXd mu_y_hat;
  std::optional<FoldAssignment> plan;
  std::vector<int> trained_without;

  Index rows() const noexcept { return mu_y_hat.size(); }
};

/// Predictions that are exactly the observed values: mu_x(Z_i) = X_i and
/// mu_y(Z_i) = Y_i. Every modular estimator collapses to its classical
/// counterpart under this plug-in.
CrossFitPredictions identity_predictions(const Dataset& d);

/// Fits p_x + 1 sub-task regressions per fold and predicts out of fold.
///
/// The conditioning features default to d.z(). Learner failures are rethrown
/// as DataError naming the fold and target column.
CrossFitPredictions crossfit_means(const Dataset& d, const Learner& learner_x, const Learner& learner_y,
                                   const FoldAssignment& folds);

/// General form: targets_x regressed on features_x, targets_y on features_y.
/// targets_x may have zero columns.
CrossFitPredictions crossfit_means(const Eigen::MatrixXd& features_x, const Eigen::MatrixXd& targets_x,
                                   const Eigen::MatrixXd& features_y, const Eigen::VectorXd& targets_y,
                                   const Learner& learner_x, const Learner& learner_y, const FoldAssignment& folds);

/// Split of the X coordinates: j1 are treated as conditionally independent of
/// Y given (Z, X_j2); j2 are merged into the conditioning set. 0-based.
struct StructurePartition {
  std::vector<Index> j1;
  std::vector<Index> j2;

  static StructurePartition from_j2(Index p_x, std::vector<Index> j2);
  void validate(Index p_x) const;
};

enum class CrossTermKind { lm, structured, miss, part, identity };

std::string to_string(CrossTermKind kind);

/// Estimate C-hat of E[XY] used in place of (1/n) sum X_i Y_i.
///
/// `terms` hold the per-row contributions so that covariance estimation and
/// cross-validation never re-derive them: c_hat == evaluate_terms(terms).
/// Single-dataset kinds (lm, structured, identity) have exactly one term with
/// rows C_i indexed 0..n-1.
struct ProxyCrossTerm {
  Eigen::VectorXd c_hat;
  CrossTermKind kind = CrossTermKind::lm;
  std::optional<StructurePartition> partition;
  std::vector<RowAverageTerm> terms;

  /// Per-row C_i; throws when the kind has no single per-row decomposition.
  const Eigen::MatrixXd& per_row() const;
  Index p() const noexcept { return c_hat.size(); }
};

/// C_i = X_i mu_y(Z_i) + mu_x(Z_i) Y_i - mu_x(Z_i) mu_y(Z_i), row by row.
Eigen::MatrixXd cross_term_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& mu_x,
                                const Eigen::VectorXd& mu_y);

/// c_hat = (1/n) sum X_i Y_i.
ProxyCrossTerm identity_cross_term(const Dataset& d);

/// Three-term cross-fitted proxy: c_hat = (1/n) sum C_i.
ProxyCrossTerm proxy_cross_term_lm(const Dataset& d, const CrossFitPredictions& preds);

/// Wraps per-row contributions as a single-term cross term.
ProxyCrossTerm make_row_cross_term(Eigen::MatrixXd rows, CrossTermKind kind);

}  // namespace modreg
