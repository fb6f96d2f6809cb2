#include "monomvn/classical.hpp"

#include "monomvn/error.hpp"

#include <cmath>
#include <limits>

namespace monomvn {

ClassicalFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  ClassicalFit f;
  const double ybar = y.mean();
  if (X.cols() == 0) {
    f.beta.resize(0);
    f.beta0 = ybar;
    f.sigma2 = (y.array() - ybar).square().sum() / static_cast<double>(n);
    return f;
  }
  const Eigen::RowVectorXd xbar = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - xbar;
  const Eigen::VectorXd yc = y.array() - ybar;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    throw NumericError("OLS design is rank deficient (" + std::to_string(qr.rank()) + " < " +
                       std::to_string(X.cols()) + " columns on " + std::to_string(n) + " rows)");
  }
  f.beta = qr.solve(yc);
  f.beta0 = ybar - xbar.dot(f.beta);
  f.sigma2 = (yc - Xc * f.beta).squaredNorm() / static_cast<double>(n);
  return f;
}

ClassicalFit ridge_gcv_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (p == 0) return ols_fit(X, y);
  const double ybar = y.mean();
  const Eigen::RowVectorXd xbar = X.colwise().mean();
  Eigen::MatrixXd Xs = X.rowwise() - xbar;
  Eigen::VectorXd scale = Xs.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    // A constant column carries no information; it gets a zero coefficient.
    if (scale[j] <= 1e-12 * std::sqrt(static_cast<double>(n)) * std::max(1.0, std::abs(xbar[j]))) {
      scale[j] = 0.0;
      Xs.col(j).setZero();
    } else {
      Xs.col(j) /= scale[j];
    }
  }
  const Eigen::VectorXd yc = y.array() - ybar;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd d = svd.singularValues();
  const Eigen::VectorXd uty = svd.matrixU().transpose() * yc;
  const double resid_out = std::max(0.0, yc.squaredNorm() - uty.squaredNorm());
  const double dmax2 = d.size() > 0 ? d[0] * d[0] : 1.0;

  double best_gcv = std::numeric_limits<double>::infinity();
  double best_lambda = dmax2;
  const int grid = 400;
  for (int g = 0; g < grid; ++g) {
    const double lambda = dmax2 * std::pow(10.0, -8.0 + 12.0 * g / (grid - 1));
    double rss = resid_out;
    double df = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double d2 = d[i] * d[i];
      const double shrink = lambda / (d2 + lambda);
      rss += shrink * shrink * uty[i] * uty[i];
      df += d2 / (d2 + lambda);
    }
    const double denom = static_cast<double>(n) - 1.0 - df;
    if (denom <= 0.5) continue;
    const double gcv = static_cast<double>(n) * rss / (denom * denom);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_lambda = lambda;
    }
  }

  Eigen::VectorXd coef_s = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd w(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) w[i] = d[i] / (d[i] * d[i] + best_lambda) * uty[i];
  coef_s = svd.matrixV() * w;

  ClassicalFit f;
  f.lambda = best_lambda;
  f.beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (scale[j] > 0.0) f.beta[j] = coef_s[j] / scale[j];
  f.beta0 = ybar - xbar.dot(f.beta);
  f.sigma2 = (yc - Xs * coef_s).squaredNorm() / static_cast<double>(n);
  return f;
}

}  // namespace monomvn
