#pragma once

// Independent reference implementations used as test oracles. None of them
// calls into the library's solvers.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "modreg/random.hpp"

namespace testing_support {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Least squares via column-pivoted QR of the design.
inline VectorXd qr_least_squares(const MatrixXd& x, const VectorXd& y) {
  return x.colPivHouseholderQr().solve(y);
}

/// Proximal gradient (ISTA) on 0.5 t'Gt - c't + lambda * sum w_j |t_j|.
inline VectorXd prox_gradient_l1(const MatrixXd& g, const VectorXd& c, double lambda, const VectorXd& weights,
                                 double tol = 1e-13, int max_iter = 2'000'000) {
  const double lip = Eigen::SelfAdjointEigenSolver<MatrixXd>(g).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(lip, 1e-300);
  VectorXd t = VectorXd::Zero(c.size());
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd u = t - step * (g * t - c);
    VectorXd next(t.size());
    for (Index j = 0; j < t.size(); ++j) {
      const double thr = step * lambda * weights(j);
      next(j) = u(j) > thr ? u(j) - thr : (u(j) < -thr ? u(j) + thr : 0.0);
    }
    const double change = (next - t).lpNorm<Eigen::Infinity>();
    t = next;
    if (change < tol) break;
  }
  return t;
}

inline VectorXd prox_gradient_l1(const MatrixXd& g, const VectorXd& c, double lambda) {
  return prox_gradient_l1(g, c, lambda, VectorXd::Ones(c.size()));
}

/// Canonical-link GLM MLE by iteratively reweighted least squares (QR
/// solves of the weighted design), family given by its mean function.
template <class Mean, class Var>
VectorXd irls(const MatrixXd& x, const VectorXd& y, Mean mean, Var var, int iters = 200) {
  VectorXd beta = VectorXd::Zero(x.cols());
  for (int it = 0; it < iters; ++it) {
    const VectorXd eta = x * beta;
    VectorXd w(eta.size()), zwork(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      w(i) = var(eta(i));
      zwork(i) = eta(i) + (y(i) - mean(eta(i))) / w(i);
    }
    const VectorXd sw = w.cwiseSqrt();
    const MatrixXd xw = sw.asDiagonal() * x;
    const VectorXd next = xw.colPivHouseholderQr().solve(VectorXd(sw.cwiseProduct(zwork)));
    const double change = (next - beta).lpNorm<Eigen::Infinity>();
    beta = next;
    if (change < 1e-14) break;
  }
  return beta;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

/// Sample variance with divisor (n - 1).
inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double a : v) s += (a - m) * (a - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testing_support
