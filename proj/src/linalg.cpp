#include "modreg/linalg.hpp"

#include <cmath>
#include <string>

#include "modreg/error.hpp"

namespace modreg {
namespace {

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& gram) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().array().square();
  if (!pivots.allFinite()) return false;
  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  return pivots.minCoeff() > 1e-14 * scale;
}

double smallest_ldlt_pivot(const Eigen::MatrixXd& gram) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return std::nan("");
  return ldlt.vectorD().minCoeff();
}

}  // namespace

SpdFactor::SpdFactor(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0)
    throw DataError("Gram matrix must be square and non-empty, got " + std::to_string(gram.rows()) + "x" +
                    std::to_string(gram.cols()));
  llt_.compute(gram);
  if (factor_ok(llt_, gram)) return;

  const double p = static_cast<double>(gram.rows());
  jitter_ = 1e-10 * gram.trace() / p;
  Eigen::MatrixXd raised = gram;
  if (jitter_ > 0.0 && std::isfinite(jitter_)) {
    raised.diagonal().array() += jitter_;
    llt_.compute(raised);
    if (factor_ok(llt_, raised)) return;
  }
  throw SingularMatrixError("Gram matrix is singular after jitter", smallest_ldlt_pivot(raised));
}

Eigen::MatrixXd SpdFactor::inverse() const {
  return llt_.solve(Eigen::MatrixXd::Identity(llt_.rows(), llt_.cols()));
}

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd g = (x.transpose() * x) / n;
  return g;
}

Eigen::MatrixXd row_covariance(const Eigen::MatrixXd& rows) {
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows.rows());
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.array().colwise() * y.array()).matrix();
}

}  // namespace modreg
