#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "modreg/error.hpp"

namespace modreg {

/// S(u, lambda) = sign(u) * max(|u| - lambda, 0)
template <typename Scalar>
Scalar soft_threshold(Scalar u, Scalar lambda) {
  if (u > lambda) return u - lambda;
  if (u < -lambda) return u + lambda;
  return Scalar(0);
}

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// 0.5 theta^T G theta - c^T theta + lambda ||theta||_1
template <typename Scalar>
Scalar l1_objective(const DenseMatrix<Scalar>& gram, const DenseVector<Scalar>& linear, Scalar lambda,
                    const DenseVector<Scalar>& theta) {
  return Scalar(0.5) * theta.dot(gram * theta) - linear.dot(theta) + lambda * theta.template lpNorm<1>();
}

/// Largest violation of the subgradient optimality conditions. Coordinates
/// with a zero diagonal entry are pinned at zero and excluded.
template <typename Scalar>
Scalar l1_kkt_residual(const DenseMatrix<Scalar>& gram, const DenseVector<Scalar>& linear, Scalar lambda,
                       const DenseVector<Scalar>& theta) {
  const DenseVector<Scalar> grad = linear - gram * theta;  // negative gradient of the smooth part
  Scalar worst(0);
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (!(gram(j, j) > Scalar(0))) continue;
    Scalar r;
    if (theta(j) > Scalar(0))
      r = std::abs(grad(j) - lambda);
    else if (theta(j) < Scalar(0))
      r = std::abs(grad(j) + lambda);
    else
      r = std::max(std::abs(grad(j)) - lambda, Scalar(0));
    worst = std::max(worst, r);
  }
  return worst;
}

struct L1Options {
  double coef_tol = 1e-7;  ///< max |change| <= coef_tol * max(1, ||theta||_inf)
  double kkt_tol = 1e-6;   ///< residual <= kkt_tol * max(1, ||c||_inf)
  int max_sweeps = 10000;
  bool record_objective = false;
};

template <typename Scalar>
struct L1Result {
  DenseVector<Scalar> theta;
  Scalar kkt_residual{};
  int sweeps = 0;
  std::vector<Scalar> objective_trace;  ///< after each sweep, when requested
};

/// Minimizes 0.5 theta^T G theta - c^T theta + lambda ||theta||_1 by cyclic
/// coordinate descent with covariance updates.
///
/// `gram` must be symmetric with nonnegative diagonal. Coordinates with a zero
/// diagonal are held at zero. The running vector c - G theta is updated in
/// O(p) per coordinate move. Sweeps stop when both the coefficient-change and
/// KKT criteria of `options` hold; hitting max_sweeps throws ConvergenceError
/// with the last iterate.
template <typename Scalar>
L1Result<Scalar> solve_l1_quadratic(const DenseMatrix<Scalar>& gram, const DenseVector<Scalar>& linear,
                                    Scalar lambda, const std::optional<DenseVector<Scalar>>& warm_start = std::nullopt,
                                    const L1Options& options = {}) {
  const Eigen::Index p = linear.size();
  if (gram.rows() != p || gram.cols() != p) throw DataError("solve_l1_quadratic: Gram and linear term disagree");
  if (lambda < Scalar(0)) throw std::invalid_argument("solve_l1_quadratic: lambda must be nonnegative");

  L1Result<Scalar> out;
  out.theta = warm_start ? *warm_start : DenseVector<Scalar>::Zero(p);
  if (out.theta.size() != p) throw DataError("solve_l1_quadratic: warm start has wrong length");
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(gram(j, j) > Scalar(0))) out.theta(j) = Scalar(0);

  DenseVector<Scalar> resid = linear - gram * out.theta;
  const Scalar kkt_limit = Scalar(options.kkt_tol) * std::max(Scalar(1), linear.template lpNorm<Eigen::Infinity>());

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    Scalar max_change(0);
    for (Eigen::Index j = 0; j < p; ++j) {
      const Scalar gjj = gram(j, j);
      if (!(gjj > Scalar(0))) continue;
      const Scalar old = out.theta(j);
      const Scalar updated = soft_threshold(resid(j) + gjj * old, lambda) / gjj;
      const Scalar delta = updated - old;
      if (delta != Scalar(0)) {
        out.theta(j) = updated;
        resid.noalias() -= delta * gram.col(j);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    out.sweeps = sweep;
    if (options.record_objective) out.objective_trace.push_back(l1_objective(gram, linear, lambda, out.theta));

    const Scalar scale = std::max(Scalar(1), out.theta.template lpNorm<Eigen::Infinity>());
    if (max_change <= Scalar(options.coef_tol) * scale) {
      // the incremental residual drifts; refresh before judging optimality
      resid = linear - gram * out.theta;
      out.kkt_residual = l1_kkt_residual(gram, linear, lambda, out.theta);
      if (out.kkt_residual <= kkt_limit) return out;
    }
  }
  out.kkt_residual = l1_kkt_residual(gram, linear, lambda, out.theta);
  throw ConvergenceError("coordinate descent did not converge in " + std::to_string(options.max_sweeps) + " sweeps",
                         out.theta.template cast<double>(), static_cast<double>(out.kkt_residual));
}

}  // namespace modreg
