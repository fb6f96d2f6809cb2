#pragma once

#include <Eigen/Dense>

namespace monomvn {

struct ClassicalFit {
  double beta0 = 0.0;
  Eigen::VectorXd beta;  // raw units
  double sigma2 = 0.0;   // residual sum of squares / n
  double lambda = 0.0;   // ridge penalty in standardized units; 0 for OLS
};

/// Least squares with intercept. Throws NumericError when X is rank deficient.
ClassicalFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Ridge with intercept on the standardized design, penalty chosen by
/// generalized cross-validation over a log grid using the SVD.
ClassicalFit ridge_gcv_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace monomvn
