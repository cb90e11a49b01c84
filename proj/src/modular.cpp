#include "modreg/modular.hpp"

#include "modreg/error.hpp"
#include "modreg/linalg.hpp"

namespace modreg {

std::string to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::mod_ols: return "mod-ols";
    case EstimatorTag::ols: return "ols";
    case EstimatorTag::mod_glm: return "mod-glm";
    case EstimatorTag::glm: return "glm";
    case EstimatorTag::mod_lasso: return "mod-lasso";
    case EstimatorTag::lasso: return "lasso";
  }
  return "?";
}

Eigen::VectorXd solve_modular_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& c) {
  if (gram.rows() != c.size()) throw DataError("Gram matrix and cross term disagree on p_x");
  return SpdFactor(gram).solve(c);
}

ModularFit modular_ols(const Dataset& d, const ProxyCrossTerm& c) {
  if (c.p() != d.p_x()) throw DataError("cross term length does not match p_x");
  const Eigen::MatrixXd gram = second_moment(d.x());
  ModularFit fit;
  fit.theta_hat = solve_modular_normal_equations(gram, c.c_hat);
  fit.objective_value = 0.5 * fit.theta_hat.dot(gram * fit.theta_hat) - c.c_hat.dot(fit.theta_hat);
  fit.tag = EstimatorTag::mod_ols;
  fit.n = d.rows();
  fit.partition = c.partition;
  if (c.terms.size() == 1 && c.terms.front().rows.rows() == d.rows())
    fit.covariance = influence_covariance(d, c, fit.theta_hat) / static_cast<double>(d.rows());
  return fit;
}

ModularFit ols(const Dataset& d) {
  ModularFit fit = modular_ols(d, identity_cross_term(d));
  fit.tag = EstimatorTag::ols;
  return fit;
}

namespace {

Eigen::MatrixXd influence_from_scores(const Eigen::MatrixXd& x, const Eigen::MatrixXd& per_row,
                                      const Eigen::VectorXd& theta) {
  if (per_row.rows() != x.rows() || per_row.cols() != x.cols() || theta.size() != x.cols())
    throw DataError("influence covariance: shapes do not conform");
  const SpdFactor gram(second_moment(x));
  const Eigen::MatrixXd scores = per_row - scale_rows(x, x * theta);
  const Eigen::MatrixXd phi = gram.solve(Eigen::MatrixXd(scores.transpose())).transpose();
  return row_covariance(phi);
}

}  // namespace

Eigen::MatrixXd influence_covariance(const Dataset& d, const CrossFitPredictions& preds, const Eigen::VectorXd& theta,
                                     InfluenceKind which) {
  const Eigen::MatrixXd per_row = which == InfluenceKind::mod
                                      ? cross_term_rows(d.x(), d.y(), preds.mu_x_hat, preds.mu_y_hat)
                                      : scale_rows(d.x(), d.y());
  return influence_from_scores(d.x(), per_row, theta);
}

Eigen::MatrixXd influence_covariance(const Dataset& d, const ProxyCrossTerm& c, const Eigen::VectorXd& theta) {
  return influence_from_scores(d.x(), c.per_row(), theta);
}

}  // namespace modreg
