#include "modreg/learners.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "modreg/dataset.hpp"
#include "modreg/error.hpp"
#include "modreg/linalg.hpp"

namespace modreg {

std::vector<std::unique_ptr<Model>> Learner::fit_columns(const Eigen::MatrixXd& features,
                                                         const Eigen::MatrixXd& targets) const {
  std::vector<std::unique_ptr<Model>> models;
  models.reserve(static_cast<std::size_t>(targets.cols()));
  for (Index j = 0; j < targets.cols(); ++j) models.push_back(fit(features, targets.col(j)));
  return models;
}

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& features) const {
  if (features.cols() != coef_.size())
    throw DataError("linear model expects " + std::to_string(coef_.size()) + " features, got " +
                    std::to_string(features.cols()));
  Eigen::VectorXd out = features * coef_;
  out.array() += intercept_;
  return out;
}

namespace {

void check_training(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) {
  if (features.rows() != targets.size()) throw DataError("features and targets disagree on the row count");
  if (targets.size() == 0) throw DataError("cannot fit on an empty training set");
  if (!features.allFinite() || !targets.allFinite()) throw DataError("training data contains NaN or Inf");
}

class ConstantModel final : public Model {
 public:
  explicit ConstantModel(double value) : value_{value} {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override {
    return Eigen::VectorXd::Constant(features.rows(), value_);
  }

 private:
  double value_;
};

/// Fits on centered data and folds the means back into an intercept.
template <class Fit>
std::unique_ptr<Model> centered_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, Fit fit) {
  const Eigen::RowVectorXd fm = features.colwise().mean();
  const double tm = targets.mean();
  const Eigen::MatrixXd fc = features.rowwise() - fm;
  const Eigen::VectorXd tc = targets.array() - tm;
  Eigen::VectorXd coef = fit(fc, tc);
  const double intercept = tm - fm.dot(coef);
  return std::make_unique<LinearModel>(std::move(coef), intercept);
}

}  // namespace

LinearModel fit_ols(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) {
  check_training(features, targets);
  const SpdFactor factor(features.transpose() * features);
  return LinearModel(factor.solve(Eigen::VectorXd(features.transpose() * targets)));
}

LinearModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("ridge penalty eta must be nonnegative");
  check_training(features, targets);
  if (eta == 0.0) return fit_ols(features, targets);
  Eigen::MatrixXd g = features.transpose() * features;
  g.diagonal().array() += eta;
  const SpdFactor factor(g);
  return LinearModel(factor.solve(Eigen::VectorXd(features.transpose() * targets)));
}

std::unique_ptr<Model> MeanLearner::fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const {
  check_training(features, targets);
  return std::make_unique<ConstantModel>(targets.mean());
}

std::unique_ptr<Model> ConstantLearner::fit(const Eigen::MatrixXd&, const Eigen::VectorXd&) const {
  return std::make_unique<ConstantModel>(value_);
}

std::unique_ptr<Model> OlsLearner::fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const {
  check_training(features, targets);
  if (!intercept_) return std::make_unique<LinearModel>(fit_ols(features, targets));
  return centered_fit(features, targets,
                      [](const Eigen::MatrixXd& f, const Eigen::VectorXd& t) { return fit_ols(f, t).coefficients(); });
}

std::unique_ptr<Model> RidgeLearner::fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const {
  check_training(features, targets);
  const double eta = eta_;
  if (!intercept_) return std::make_unique<LinearModel>(fit_ridge(features, targets, eta));
  return centered_fit(features, targets, [eta](const Eigen::MatrixXd& f, const Eigen::VectorXd& t) {
    return fit_ridge(f, t, eta).coefficients();
  });
}

// ---------------------------------------------------------------------------
// Ridge with CV over eta, shared SVD per fold

namespace {

struct CenteredSvd {
  Eigen::RowVectorXd feature_mean;
  Eigen::RowVectorXd target_mean;
  Eigen::MatrixXd u;
  Eigen::VectorXd d;
  Eigen::MatrixXd v;
  Eigen::MatrixXd ut_targets;  // U^T (T - mean)
};

CenteredSvd centered_svd(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
  CenteredSvd s;
  s.feature_mean = features.colwise().mean();
  s.target_mean = targets.colwise().mean();
  const Eigen::MatrixXd fc = features.rowwise() - s.feature_mean;
  const Eigen::MatrixXd tc = targets.rowwise() - s.target_mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(fc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  s.u = svd.matrixU();
  s.d = svd.singularValues();
  s.v = svd.matrixV();
  s.ut_targets = s.u.transpose() * tc;
  return s;
}

/// d_i / (d_i^2 + eta), zero where the denominator vanishes.
Eigen::VectorXd ridge_shrinkage(const Eigen::VectorXd& d, double eta) {
  Eigen::VectorXd shrink(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    const double denom = d(i) * d(i) + eta;
    shrink(i) = denom > 0.0 ? d(i) / denom : 0.0;
  }
  return shrink;
}

std::vector<double> ridge_grid(const RidgeCvOptions& opt, const Eigen::MatrixXd& features) {
  if (!opt.eta_grid.empty()) return opt.eta_grid;
  const Eigen::MatrixXd fc = features.rowwise() - features.colwise().mean();
  const double rank_bound = static_cast<double>(std::max<Index>(1, std::min(fc.rows(), fc.cols())));
  double scale = fc.squaredNorm() / rank_bound;
  if (!(scale > 0.0)) scale = 1.0;
  std::vector<double> grid(static_cast<std::size_t>(opt.n_eta));
  const double lo = std::log10(opt.eta_low), hi = std::log10(opt.eta_high);
  for (int i = 0; i < opt.n_eta; ++i) {
    const double t = opt.n_eta == 1 ? 0.0 : static_cast<double>(i) / (opt.n_eta - 1);
    grid[static_cast<std::size_t>(i)] = scale * std::pow(10.0, hi + t * (lo - hi));  // decreasing
  }
  return grid;
}

}  // namespace

std::unique_ptr<Model> RidgeCvLearner::fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const {
  auto models = fit_columns(features, Eigen::MatrixXd(targets));
  return std::move(models.front());
}

std::vector<std::unique_ptr<Model>> RidgeCvLearner::fit_columns(const Eigen::MatrixXd& features,
                                                                const Eigen::MatrixXd& targets) const {
  if (targets.cols() == 0) return {};
  check_training(features, targets.col(0));
  if (!targets.allFinite()) throw DataError("training targets contain NaN or Inf");
  const Index n = features.rows();
  const Index m = targets.cols();
  const int k = static_cast<int>(std::min<Index>(opt_.cv_folds, n));
  if (k < 2) throw DataError("ridge CV needs at least two training rows");

  const std::vector<double> grid = ridge_grid(opt_, features);
  const auto n_eta = static_cast<Index>(grid.size());
  const FoldAssignment folds = split_folds(n, k, opt_.seed);

  // fold_error[f](e, t)
  std::vector<Eigen::MatrixXd> fold_error(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    const auto train = folds.rows_not_in(f);
    const auto test = folds.rows_in(f);
    const CenteredSvd s = centered_svd(features(train, Eigen::all), targets(train, Eigen::all));
    const Eigen::MatrixXd zt = features(test, Eigen::all).rowwise() - s.feature_mean;
    const Eigen::MatrixXd tt = targets(test, Eigen::all).rowwise() - s.target_mean;
    const Eigen::MatrixXd zv = zt * s.v;
    Eigen::MatrixXd err(n_eta, m);
    for (Index e = 0; e < n_eta; ++e) {
      const Eigen::VectorXd shrink = ridge_shrinkage(s.d, grid[e]);
      const Eigen::MatrixXd pred = zv * (shrink.asDiagonal() * s.ut_targets);
      err.row(e) = (tt - pred).array().square().colwise().mean();
    }
    fold_error[static_cast<std::size_t>(f)] = std::move(err);
  }

  const CenteredSvd full = centered_svd(features, targets);
  std::vector<std::unique_ptr<Model>> models;
  models.reserve(static_cast<std::size_t>(m));
  for (Index t = 0; t < m; ++t) {
    Eigen::VectorXd mean_err = Eigen::VectorXd::Zero(n_eta);
    for (const auto& fe : fold_error) mean_err += fe.col(t);
    mean_err /= k;
    Eigen::VectorXd se(n_eta);
    for (Index e = 0; e < n_eta; ++e) {
      double ss = 0.0;
      for (const auto& fe : fold_error) ss += (fe(e, t) - mean_err(e)) * (fe(e, t) - mean_err(e));
      se(e) = std::sqrt(ss / (k - 1) / k);
    }
    const Index chosen = choose_lambda(mean_err, se, opt_.cv_rule);
    Eigen::VectorXd coef = full.v * (ridge_shrinkage(full.d, grid[chosen]).asDiagonal() * full.ut_targets.col(t));
    const double intercept = full.target_mean(t) - full.feature_mean.dot(coef);
    models.push_back(std::make_unique<LinearModel>(std::move(coef), intercept));
  }
  return models;
}

std::unique_ptr<Model> LassoCvLearner::fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const {
  check_training(features, targets);
  PenaltyConfig config = config_;
  config.cv_folds = static_cast<int>(std::min<Index>(config.cv_folds, features.rows()));
  if (config.cv_folds < 2) throw DataError("lasso CV needs at least two training rows");
  const std::uint64_t seed = seed_;
  return centered_fit(features, targets, [&](const Eigen::MatrixXd& f, const Eigen::VectorXd& t) {
    return cv_lambda_path(f, t, config, seed).chosen_theta();
  });
}

std::unique_ptr<Learner> make_learner(const std::string& name, std::uint64_t seed) {
  if (name == "mean") return std::make_unique<MeanLearner>();
  if (name == "linear" || name == "ols") return std::make_unique<OlsLearner>(true);
  if (name == "ridge" || name == "ridge-cv") {
    RidgeCvOptions opt;
    opt.seed = seed;
    return std::make_unique<RidgeCvLearner>(opt);
  }
  if (name == "lasso" || name == "lasso-cv") return std::make_unique<LassoCvLearner>(PenaltyConfig{}, seed);
  throw std::invalid_argument("unknown learner '" + name + "' (expected mean, linear, ridge or lasso)");
}

}  // namespace modreg
