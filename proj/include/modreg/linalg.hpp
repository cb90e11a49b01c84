#pragma once

#include <Eigen/Dense>

namespace modreg {

/// Cholesky factor of a symmetric positive-definite matrix with one retry.
///
/// The first attempt factors `gram` as given. If that fails (non-positive or
/// relatively negligible pivot) the diagonal is raised by
/// 1e-10 * trace(gram) / p and factorization is attempted once more; a second
/// failure throws SingularMatrixError carrying the smallest LDLT pivot.
class SpdFactor {
 public:
  explicit SpdFactor(const Eigen::MatrixXd& gram);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  Eigen::MatrixXd inverse() const;

  bool jittered() const noexcept { return jitter_ > 0.0; }
  double jitter() const noexcept { return jitter_; }
  Eigen::Index size() const noexcept { return llt_.rows(); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// (1/n) * X^T X
Eigen::MatrixXd second_moment(const Eigen::MatrixXd& x);

/// Population (1/n) covariance of the rows of `rows`.
Eigen::MatrixXd row_covariance(const Eigen::MatrixXd& rows);

/// Row-wise products x_i * y_i, i.e. diag(y) X.
Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

}  // namespace modreg
