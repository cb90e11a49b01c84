#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace modreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, inconsistent or missing input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a trustworthy answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Gram matrix still not positive definite after the jitter retry.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double smallest_pivot)
      : NumericalError(what + " (smallest pivot " + std::to_string(smallest_pivot) + ")"),
        smallest_pivot_{smallest_pivot} {}

  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

/// An iterative solver hit its iteration cap. Carries the last iterate.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double kkt_residual)
      : NumericalError(what + " (KKT residual " + std::to_string(kkt_residual) + ")"),
        last_iterate_{std::move(last_iterate)},
        kkt_residual_{kkt_residual} {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double kkt_residual() const noexcept { return kkt_residual_; }

 private:
  Eigen::VectorXd last_iterate_;
  double kkt_residual_;
};

}  // namespace modreg
