#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "modreg/dataset.hpp"
#include "modreg/l1_solver.hpp"

namespace modreg {

using Eigen::Index;

enum class CvRule { min, one_se };

/// Penalty settings shared by every l1 path in the library.
struct PenaltyConfig {
  /// Strictly decreasing, positive. Empty means the default grid: n_lambda
  /// log-spaced values from lambda_max = ||c||_inf down to
  /// lambda_min_ratio * lambda_max.
  std::vector<double> lambda_grid;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  double ridge_eta = 0.0;
  int cv_folds = 10;
  CvRule cv_rule = CvRule::min;
  /// Penalize on the scale where every column has unit root-mean-square;
  /// coefficients are always reported on the original scale.
  bool standardize = true;
  L1Options solver;
  int jobs = 1;  ///< CV folds evaluated concurrently

  void validate() const;
};

/// One signed row average contributing to a linear term:
///   contribution = sign * mean(rows).
/// `row_ids` place each row in a shared index space so that CV folds can
/// split all averages consistently.
struct RowAverageTerm {
  Eigen::MatrixXd rows;
  std::vector<Index> row_ids;
  double sign = 1.0;
};

Eigen::VectorXd evaluate_terms(const std::vector<RowAverageTerm>& terms, Index p);

enum class CvLoss {
  squared_error,      ///< held-out mean of (y - x^T theta)^2
  modular_quadratic,  ///< held-out 0.5 theta^T G theta - c^T theta (no (x, y) pairs needed)
};

/// Everything a cross-validated l1 path needs.
///
/// The Gram matrix is the average of x x^T over `gram_rows`; the linear term
/// is the signed sum of row averages in `terms`. During CV both are
/// recomputed from the training rows of each fold.
struct PenalizedProblem {
  Eigen::MatrixXd gram_rows;
  std::vector<Index> gram_ids;
  std::vector<RowAverageTerm> terms;
  Eigen::MatrixXd score_x;  ///< held-out scoring rows (squared_error only)
  Eigen::VectorXd score_y;
  std::vector<Index> score_ids;
  Index n_ids = 0;  ///< size of the shared row-id space
  CvLoss loss = CvLoss::squared_error;
  /// CV folds over the id space; default split_folds(n_ids, cv_folds, seed).
  std::optional<FoldAssignment> folds;

  /// Full-data quantities. Filled by the caller when they must match a value
  /// computed elsewhere bit for bit; otherwise derived from the rows.
  std::optional<Eigen::MatrixXd> gram;
  std::optional<Eigen::VectorXd> linear;

  Index p() const noexcept { return gram_rows.cols(); }
};

/// Plain Lasso of y on x: one term with rows x_i y_i.
PenalizedProblem lasso_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Generic problem on one dataset: Gram from x, linear term from per-row
/// contributions, scoring on (x, y).
PenalizedProblem row_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& per_row_terms);

struct LambdaPath {
  std::vector<double> lambdas;    ///< penalty levels of the (possibly rescaled) problem
  Eigen::MatrixXd coefficients;   ///< p x L, original scale
  Eigen::VectorXd cv_error;       ///< empty when no CV was run
  Eigen::VectorXd cv_se;
  std::vector<Index> nnz;
  Index chosen = 0;
  double max_kkt_residual = 0.0;  ///< over all full-data fits (scaled problem)

  double chosen_lambda() const { return lambdas.at(static_cast<std::size_t>(chosen)); }
  Eigen::VectorXd chosen_theta() const { return coefficients.col(chosen); }
};

std::vector<double> default_lambda_grid(double lambda_max, int n, double min_ratio);

/// lambda_max = ||D^{-1} c||_inf where D holds the penalty scales.
double lambda_max(const Eigen::MatrixXd& gram, const Eigen::VectorXd& linear, bool standardize);

/// Warm-started path over a fixed grid, no CV.
LambdaPath solve_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& linear, const std::vector<double>& lambdas,
                      bool standardize, const L1Options& solver = {});

/// Index chosen by `rule` from a CV curve over a decreasing lambda grid.
Index choose_lambda(const Eigen::VectorXd& cv_error, const Eigen::VectorXd& cv_se, CvRule rule);

/// K-fold CV over the lambda grid, then the full-data path.
///
/// The grid and the penalty scales come from the full data and are shared by
/// every fold. Per lambda, the CV error is the mean of the per-fold held-out
/// losses and cv_se their standard error. Folds are reduced in fold order.
LambdaPath cv_lambda_path(const PenalizedProblem& problem, const PenaltyConfig& config, std::uint64_t seed);

/// Plain Lasso of y on x.
LambdaPath cv_lambda_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const PenaltyConfig& config,
                          std::uint64_t seed);

/// Modular objective: linear term from per-row contributions, scored on (x, y).
LambdaPath cv_lambda_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& per_row_terms,
                          const PenaltyConfig& config, std::uint64_t seed);

}  // namespace modreg
