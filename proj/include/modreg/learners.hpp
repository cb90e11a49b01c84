#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modreg/lambda_path.hpp"

namespace modreg {

/// A fitted conditional-mean model. Immutable after construction.
class Model {
 public:
  virtual ~Model() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& features) const = 0;
};

/// Sub-task learner: fits E[target | features].
///
/// Implementations must be deterministic and must not share mutable state
/// between fit calls, so fits on disjoint data may run concurrently.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const = 0;

  /// One model per column of `targets`. The default loops over fit(); learners
  /// that can share work across targets (a common decomposition of the
  /// features, say) override it.
  virtual std::vector<std::unique_ptr<Model>> fit_columns(const Eigen::MatrixXd& features,
                                                          const Eigen::MatrixXd& targets) const;

  virtual std::string name() const = 0;
};

/// Affine model: features * coefficients + intercept.
class LinearModel final : public Model {
 public:
  LinearModel(Eigen::VectorXd coefficients, double intercept = 0.0)
      : coef_{std::move(coefficients)}, intercept_{intercept} {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override;

  const Eigen::VectorXd& coefficients() const noexcept { return coef_; }
  double intercept() const noexcept { return intercept_; }

 private:
  Eigen::VectorXd coef_;
  double intercept_;
};

/// Least squares without intercept. The Gram matrix goes through SpdFactor,
/// so a rank-deficient design gets one jittered retry before failing.
LinearModel fit_ols(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets);

/// Solves (X^T X + eta I) beta = X^T y; no intercept.
LinearModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double eta);

/// Predicts the training mean of the targets.
class MeanLearner final : public Learner {
 public:
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const override;
  std::string name() const override { return "mean"; }
};

/// Predicts a fixed value regardless of data; also fits on empty training sets.
class ConstantLearner final : public Learner {
 public:
  explicit ConstantLearner(double value) : value_{value} {}
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const override;
  std::string name() const override { return "constant"; }

 private:
  double value_;
};

class OlsLearner final : public Learner {
 public:
  explicit OlsLearner(bool intercept = true) : intercept_{intercept} {}
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const override;
  std::string name() const override { return "linear"; }

 private:
  bool intercept_;
};

class RidgeLearner final : public Learner {
 public:
  explicit RidgeLearner(double eta, bool intercept = true) : eta_{eta}, intercept_{intercept} {}
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const override;
  std::string name() const override { return "ridge"; }

 private:
  double eta_;
  bool intercept_;
};

struct RidgeCvOptions {
  /// Explicit eta values; empty means a log grid scaled by the mean squared
  /// singular value of the centered training features.
  std::vector<double> eta_grid;
  int n_eta = 40;
  double eta_low = 1e-4;
  double eta_high = 1e4;
  int cv_folds = 10;
  CvRule cv_rule = CvRule::min;
  std::uint64_t seed = 0;
};

/// Ridge with intercept and eta picked by K-fold CV. fit_columns shares one
/// SVD per fold across all targets.
class RidgeCvLearner final : public Learner {
 public:
  explicit RidgeCvLearner(RidgeCvOptions options = {}) : opt_{std::move(options)} {}
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const override;
  std::vector<std::unique_ptr<Model>> fit_columns(const Eigen::MatrixXd& features,
                                                  const Eigen::MatrixXd& targets) const override;
  std::string name() const override { return "ridge-cv"; }

 private:
  RidgeCvOptions opt_;
};

/// Lasso with intercept (by centering) and lambda picked by K-fold CV.
class LassoCvLearner final : public Learner {
 public:
  explicit LassoCvLearner(PenaltyConfig config = {}, std::uint64_t seed = 0)
      : config_{std::move(config)}, seed_{seed} {}
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const override;
  std::string name() const override { return "lasso-cv"; }

 private:
  PenaltyConfig config_;
  std::uint64_t seed_;
};

/// Builds a learner by name: mean, linear, ridge (CV), lasso (CV).
std::unique_ptr<Learner> make_learner(const std::string& name, std::uint64_t seed = 0);

}  // namespace modreg
