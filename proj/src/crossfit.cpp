#include "modreg/crossfit.hpp"

#include <algorithm>
#include <numeric>

#include "modreg/error.hpp"
#include "modreg/linalg.hpp"

namespace modreg {

CrossFitPredictions identity_predictions(const Dataset& d) {
  CrossFitPredictions p;
  p.mu_x_hat = d.x();
  p.mu_y_hat = d.y();
  return p;
}

CrossFitPredictions crossfit_means(const Dataset& d, const Learner& learner_x, const Learner& learner_y,
                                   const FoldAssignment& folds) {
  if (d.p_z() < 1) throw DataError("cross-fitting needs at least one auxiliary (z) column");
  return crossfit_means(d.z(), d.x(), d.z(), d.y(), learner_x, learner_y, folds);
}

CrossFitPredictions crossfit_means(const Eigen::MatrixXd& features_x, const Eigen::MatrixXd& targets_x,
                                   const Eigen::MatrixXd& features_y, const Eigen::VectorXd& targets_y,
                                   const Learner& learner_x, const Learner& learner_y, const FoldAssignment& folds) {
  const Index n = targets_y.size();
  if (features_x.rows() != n || targets_x.rows() != n || features_y.rows() != n)
    throw DataError("cross-fitting inputs disagree on the row count");
  if (folds.rows() != n)
    throw DataError("fold assignment covers " + std::to_string(folds.rows()) + " rows, data has " + std::to_string(n));

  CrossFitPredictions out;
  out.mu_x_hat.resize(n, targets_x.cols());
  out.mu_y_hat.resize(n);
  out.plan = folds;
  out.trained_without.assign(static_cast<std::size_t>(n), -1);

  for (int k = 0; k < folds.k; ++k) {
    const auto train = folds.rows_not_in(k);
    const auto test = folds.rows_in(k);
    if (test.empty()) continue;
    if (train.empty()) throw DataError("fold " + std::to_string(k) + " leaves no training rows");

    if (targets_x.cols() > 0) {
      const Eigen::MatrixXd fx_train = features_x(train, Eigen::all);
      const Eigen::MatrixXd fx_test = features_x(test, Eigen::all);
      std::vector<std::unique_ptr<Model>> models;
      try {
        models = learner_x.fit_columns(fx_train, targets_x(train, Eigen::all));
      } catch (const std::exception& e) {
        throw DataError("learner '" + learner_x.name() + "' failed on fold " + std::to_string(k) +
                        " for the x targets: " + e.what());
      }
      for (Index j = 0; j < targets_x.cols(); ++j) {
        try {
          out.mu_x_hat(test, j) = models[static_cast<std::size_t>(j)]->predict(fx_test);
        } catch (const std::exception& e) {
          throw DataError("learner '" + learner_x.name() + "' failed on fold " + std::to_string(k) +
                          ", x column " + std::to_string(j) + ": " + e.what());
        }
      }
    }
    try {
      const auto model = learner_y.fit(features_y(train, Eigen::all), targets_y(train));
      out.mu_y_hat(test) = model->predict(features_y(test, Eigen::all));
    } catch (const std::exception& e) {
      throw DataError("learner '" + learner_y.name() + "' failed on fold " + std::to_string(k) +
                      " for the y target: " + e.what());
    }
    for (Index i : test) out.trained_without[static_cast<std::size_t>(i)] = k;
  }
  if (!out.mu_x_hat.allFinite() || !out.mu_y_hat.allFinite())
    throw NumericalError("cross-fitted predictions contain NaN or Inf");
  return out;
}

StructurePartition StructurePartition::from_j2(Index p_x, std::vector<Index> j2) {
  std::sort(j2.begin(), j2.end());
  j2.erase(std::unique(j2.begin(), j2.end()), j2.end());
  StructurePartition part;
  part.j2 = std::move(j2);
  for (Index j = 0; j < p_x; ++j)
    if (!std::binary_search(part.j2.begin(), part.j2.end(), j)) part.j1.push_back(j);
  part.validate(p_x);
  return part;
}

void StructurePartition::validate(Index p_x) const {
  std::vector<int> seen(static_cast<std::size_t>(p_x), 0);
  for (const auto* set : {&j1, &j2})
    for (Index j : *set) {
      if (j < 0 || j >= p_x) throw DataError("structure partition index " + std::to_string(j) + " out of range");
      if (seen[static_cast<std::size_t>(j)]++) throw DataError("structure partition index " + std::to_string(j) + " repeated");
    }
  if (static_cast<Index>(j1.size() + j2.size()) != p_x) throw DataError("structure partition does not cover every x column");
}

std::string to_string(CrossTermKind kind) {
  switch (kind) {
    case CrossTermKind::lm: return "lm";
    case CrossTermKind::structured: return "struct";
    case CrossTermKind::miss: return "miss";
    case CrossTermKind::part: return "part";
    case CrossTermKind::identity: return "identity";
  }
  return "?";
}

const Eigen::MatrixXd& ProxyCrossTerm::per_row() const {
  if (terms.size() != 1) throw DataError("cross term of kind '" + to_string(kind) + "' has no per-row decomposition");
  return terms.front().rows;
}

Eigen::MatrixXd cross_term_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& mu_x,
                                const Eigen::VectorXd& mu_y) {
  if (x.rows() != y.size() || mu_x.rows() != x.rows() || mu_x.cols() != x.cols() || mu_y.size() != y.size())
    throw DataError("cross term: predictions are not conformable with the data");
  const Eigen::ArrayXXd a = x.array().colwise() * mu_y.array();
  const Eigen::ArrayXXd b = mu_x.array().colwise() * y.array();
  const Eigen::ArrayXXd c = mu_x.array().colwise() * mu_y.array();
  return ((a + b) - c).matrix();
}

ProxyCrossTerm make_row_cross_term(Eigen::MatrixXd rows, CrossTermKind kind) {
  ProxyCrossTerm ct;
  ct.kind = kind;
  std::vector<Index> ids(static_cast<std::size_t>(rows.rows()));
  std::iota(ids.begin(), ids.end(), Index{0});
  const Index p = rows.cols();
  ct.terms.push_back(RowAverageTerm{std::move(rows), std::move(ids), 1.0});
  ct.c_hat = evaluate_terms(ct.terms, p);
  if (!ct.c_hat.allFinite()) throw NumericalError("cross term is not finite");
  return ct;
}

ProxyCrossTerm identity_cross_term(const Dataset& d) {
  return make_row_cross_term(scale_rows(d.x(), d.y()), CrossTermKind::identity);
}

ProxyCrossTerm proxy_cross_term_lm(const Dataset& d, const CrossFitPredictions& preds) {
  return make_row_cross_term(cross_term_rows(d.x(), d.y(), preds.mu_x_hat, preds.mu_y_hat), CrossTermKind::lm);
}

}  // namespace modreg
