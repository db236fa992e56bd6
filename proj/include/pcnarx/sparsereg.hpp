#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace pcnarx {

/// Linear least-squares problem y ~ A c.
struct RegressionProblem {
  Eigen::MatrixXd A;  // N x P information matrix
  Eigen::VectorXd y;  // N responses

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }
  /// Throws ArgumentError on empty or inconsistent shapes and non-finite data.
  void validate() const;
  /// Problem restricted to the given columns (in that order).
  RegressionProblem restrict(const std::vector<Eigen::Index>& columns) const;
};

/// Reciprocal-condition threshold below which ols_fit reports singularity.
inline constexpr double kRcondThreshold = 1e-12;
/// Leverage values at or above 1 - this are rejected by loo_error.
inline constexpr double kLeverageGuard = 1e-10;

/// Least-squares coefficients via column-pivoted Householder QR on the
/// column-equilibrated matrix. Throws SingularityError if the reciprocal
/// condition estimate is below kRcondThreshold, ArgumentError if N < P.
Eigen::VectorXd ols_fit(const RegressionProblem& prob);

/// Diagonal of the hat matrix A (A^T A)^-1 A^T.
Eigen::VectorXd leverages(const Eigen::MatrixXd& A);

/// Mean squared leave-one-out error (1/N) sum ((y_i - yhat_i) / (1 - h_i))^2.
double loo_error(const RegressionProblem& prob, const Eigen::VectorXd& coefficients);

/// Empirical variance of y (or its mean square if y is constant); used to
/// express LOO errors relative to the response scale.
double response_scale(const Eigen::VectorXd& y);

struct LarsStep {
  std::vector<Eigen::Index> active;  // columns in order of entry
  Eigen::VectorXd coefficients;      // OLS refit on `active`, same order
  double loo = 0.0;                  // mean squared LOO of the refit
  double relative_loo = 0.0;         // loo / response_scale(y)
};

struct LarsPath {
  std::vector<LarsStep> steps;

  bool empty() const { return steps.empty(); }
  /// Earliest step attaining the minimum relative LOO. Values at or below
  /// kExactFitLoo count as exact fits and tie with each other.
  std::size_t best_step() const;
};

/// Relative LOO values at or below this are treated as exact fits.
inline constexpr double kExactFitLoo = 1e-20;

struct LarsOptions {
  std::size_t max_steps = std::numeric_limits<std::size_t>::max();
  /// Stop once the relative LOO has not improved for this many consecutive
  /// steps (0 disables early stopping).
  std::size_t patience = 0;
};

/// Hybrid LARS-OLS path. Candidate columns are centred and scaled to unit
/// norm for the selection; constant columns are only scaled. Each step
/// stores the OLS refit on the active set and its LOO error.
LarsPath lars_path(const RegressionProblem& prob, const LarsOptions& options = {});

}  // namespace pcnarx
