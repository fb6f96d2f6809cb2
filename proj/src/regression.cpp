#include "monomvn/regression.hpp"

#include "monomvn/distributions.hpp"
#include "monomvn/error.hpp"
#include "monomvn/nu_sampler.hpp"

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace monomvn {

PriorKind parse_prior(const std::string& name) {
  if (name == "lasso") return PriorKind::lasso;
  if (name == "ng") return PriorKind::ng;
  if (name == "ridge") return PriorKind::ridge;
  if (name == "flat" || name == "none") return PriorKind::flat;
  throw UsageError("unknown prior '" + name + "' (expected lasso, ng, ridge or flat)");
}

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::lasso: return "lasso";
    case PriorKind::ng: return "ng";
    case PriorKind::ridge: return "ridge";
    case PriorKind::flat: return "flat";
  }
  return "?";
}

StandardizedDesign standardize(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y,
                               const Eigen::VectorXd* fixed_scales) {
  const Eigen::Index n = X_raw.rows();
  if (n < 2) throw DataError("standardize: need at least 2 rows");
  if (y.size() != n) throw UsageError("standardize: response length does not match design");
  StandardizedDesign d;
  d.centers = X_raw.colwise().mean().transpose();
  d.X = X_raw.rowwise() - d.centers.transpose();
  if (fixed_scales) {
    if (fixed_scales->size() != X_raw.cols()) throw UsageError("standardize: wrong number of scales");
    d.scales = *fixed_scales;
  } else {
    d.scales = d.X.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < d.scales.size(); ++j) {
      const double ref = std::sqrt(static_cast<double>(n)) * std::max(1.0, std::abs(d.centers[j]));
      if (!(d.scales[j] > 1e-12 * ref)) throw DataError("standardize: column " + std::to_string(j + 1) + " is constant");
    }
  }
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) d.X.col(j) /= d.scales[j];
  d.y_bar = y.mean();
  d.y_tilde = y.array() - d.y_bar;
  return d;
}

RawCoefficients unstandardize(double beta0, const Eigen::VectorXd& beta_full, const StandardizedDesign& d) {
  RawCoefficients r;
  r.beta = beta_full.cwiseQuotient(d.scales);
  r.beta0 = beta0 - r.beta.dot(d.centers);
  return r;
}

Eigen::VectorXd RegressionState::full_beta(int p) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < active.size(); ++i) b[active[i]] = beta[static_cast<Eigen::Index>(i)];
  return b;
}

namespace {

// Local variances are kept where 1/tau^2 and log tau^2 stay finite.
constexpr double kTau2Min = 1e-150;
constexpr double kTau2Max = 1e150;

double bound_tau2(double t) { return std::clamp(t, kTau2Min, kTau2Max); }

}  // namespace

Eigen::VectorXd draw_tau2_lasso(Rng& rng, const Eigen::VectorXd& beta, double sigma2, double lambda2) {
  Eigen::VectorXd t(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double b2 = beta[j] * beta[j];
    if (b2 == 0.0) {
      t[j] = bound_tau2(rng.exponential(0.5 * lambda2));
    } else {
      t[j] = bound_tau2(1.0 / rinvgauss(rng, std::sqrt(lambda2 * sigma2 / b2), lambda2));
    }
  }
  return t;
}

double draw_tau2_ng(Rng& rng, double beta_j, double sigma2, double lambda2, double gamma) {
  const double chi = beta_j * beta_j / sigma2;
  if (chi <= 1e-300 && gamma <= 0.5) return bound_tau2(rng.gamma(gamma, 0.5 * lambda2));
  return bound_tau2(rgig(rng, gamma - 0.5, chi, lambda2));
}

double draw_tau2_ridge(Rng& rng, const Eigen::VectorXd& beta, double sigma2, double a_tau, double b_tau) {
  const double shape = 0.5 * (a_tau + static_cast<double>(beta.size()));
  const double rate = 0.5 * (b_tau + beta.squaredNorm() / sigma2);
  if (!(shape > 0.0 && rate > 0.0)) throw NumericError("ridge tau^2 conditional is improper");
  return rng.inv_gamma(shape, rate);
}

double draw_lambda2(Rng& rng, const Eigen::VectorXd& tau2, double gamma, double a_lambda, double b_lambda) {
  const double shape = a_lambda + static_cast<double>(tau2.size()) * gamma;
  const double rate = b_lambda / gamma + 0.5 * tau2.sum();
  if (!(shape > 0.0 && rate > 0.0)) throw NumericError("lambda^2 conditional is improper");
  return rng.gamma(shape, rate);
}

double gamma_log_accept(double gamma, double gamma_new, const Eigen::VectorXd& tau2, double lambda2, double a_lambda,
                        double b_lambda, bool jacobian) {
  const double k = static_cast<double>(tau2.size());
  const auto log_prior = [&](double g) { return -a_lambda * std::log(g) - g - b_lambda * lambda2 / g; };
  const double sum_log_tau2 = tau2.array().log().sum();
  double v = log_prior(gamma_new) - log_prior(gamma) + k * (std::lgamma(gamma) - std::lgamma(gamma_new)) +
             (gamma_new - gamma) * (k * std::log(0.5 * lambda2) + sum_log_tau2);
  if (jacobian) v += std::log(gamma_new) - std::log(gamma);
  return v;
}

Eigen::VectorXd draw_omega2(Rng& rng, const Eigen::VectorXd& residuals, double sigma2, double nu) {
  Eigen::VectorXd w(residuals.size());
  const double shape = 0.5 * (nu + 1.0);
  for (Eigen::Index i = 0; i < residuals.size(); ++i)
    w[i] = rng.inv_gamma(shape, 0.5 * (nu + residuals[i] * residuals[i] / sigma2));
  return w;
}

double draw_pi(Rng& rng, int k, int p_star, double g, double h) {
  return rng.beta(g + k, h + p_star - k);
}

double empirical_bayes_bsigma(double yty, double a, double alpha) {
  if (!(yty > 0.0)) throw NumericError("empirical Bayes b_sigma: response has zero variation");
  if (!(alpha > 0.0 && alpha < 1.0) || !(a > 0.0)) throw UsageError("empirical Bayes b_sigma: bad a or alpha");
  return yty * boost::math::gamma_q_inv(a, 1.0 - alpha);
}

double log_model_prior(int k, int p, int p_star, double pi) {
  if (k < 0 || k > p_star) return -INFINITY;
  const double log_bin = std::log(boost::math::binomial_coefficient<double>(p_star, k)) + k * std::log(pi) +
                         (p_star - k) * std::log1p(-pi);
  return log_bin - std::log(boost::math::binomial_coefficient<double>(p, k));
}

double rj_move_probability(int k, int p, int p_star, bool birth) {
  if (p_star <= 0) return 0.0;
  if (birth) {
    if (k == 0) return 1.0 / p;
    if (k < p_star) return 1.0 / (2.0 * (p - k));
    return 0.0;
  }
  if (k == p_star) return 1.0 / p_star;
  if (k >= 1) return 1.0 / (2.0 * k);
  return 0.0;
}

BayesRegression::BayesRegression(StandardizedDesign design, RegressionHyper hyper)
    : design_(std::move(design)), hyper_(hyper) {
  const int n_ = design_.n();
  const int p_ = design_.p();
  if (n_ < 2) throw DataError("regression needs at least 2 observations");
  if (hyper_.prior == PriorKind::flat && hyper_.model_averaging)
    throw UsageError("model averaging requires a proper coefficient prior (lasso, ng or ridge)");
  p_star_ = std::min(p_, n_ - 1);
  if (hyper_.p_star >= 0) p_star_ = std::min(p_, hyper_.p_star);
  if (hyper_.prior == PriorKind::lasso) state_.gamma = 1.0;

  const int k0 = hyper_.model_averaging ? p_star_ : p_;
  for (int j = 0; j < k0; ++j) state_.active.push_back(j);
  state_.beta = Eigen::VectorXd::Zero(k0);
  switch (hyper_.prior) {
    case PriorKind::lasso:
    case PriorKind::ng: state_.tau2 = Eigen::VectorXd::Ones(k0); break;
    case PriorKind::ridge: state_.tau2 = Eigen::VectorXd::Ones(1); break;
    case PriorKind::flat: state_.tau2.resize(0); break;
  }
  state_.sigma2 = std::max(design_.y_tilde.squaredNorm() / (n_ - 1), 1e-8);
  state_.beta0 = design_.y_bar;
  state_.omega2 = Eigen::VectorXd::Ones(n_);
  state_.nu = std::min(1.0 / hyper_.theta, 100.0);
  state_.pi = hyper_.g / (hyper_.g + hyper_.h);
  refresh_gram();
}

void BayesRegression::set_design(StandardizedDesign design) {
  if (design.n() != design_.n() || design.p() != design_.p()) throw UsageError("set_design: shape changed");
  // Keep the same raw-coordinate model when only the centering moved.
  for (int i = 0; i < state_.k(); ++i) {
    const int a = state_.active[static_cast<std::size_t>(i)];
    state_.beta0 += state_.beta[i] * (design.centers[a] - design_.centers[a]) / design.scales[a];
  }
  design_ = std::move(design);
  refresh_gram();
}

void BayesRegression::refresh_gram() {
  const int n_ = design_.n();
  const int p_ = design_.p();
  Eigen::MatrixXd Z(n_, p_ + 1);
  Z.col(0).setOnes();
  Z.rightCols(p_) = design_.X;
  if (hyper_.student_t) {
    const Eigen::VectorXd w = state_.omega2.cwiseInverse();
    const Eigen::MatrixXd WZ = w.asDiagonal() * Z;
    gram_ = Z.transpose() * WZ;
    zwy_ = WZ.transpose() * design_.y_tilde;
    ywy_ = design_.y_tilde.dot(w.cwiseProduct(design_.y_tilde));
  } else {
    gram_ = Z.transpose() * Z;
    zwy_ = Z.transpose() * design_.y_tilde;
    ywy_ = design_.y_tilde.squaredNorm();
  }
}

Eigen::VectorXd BayesRegression::tau2_for_active(const std::vector<int>& active, const Eigen::VectorXd& tau2) const {
  const auto k = static_cast<Eigen::Index>(active.size());
  switch (hyper_.prior) {
    case PriorKind::ridge: return Eigen::VectorXd::Constant(k, tau2[0]);
    case PriorKind::flat: return Eigen::VectorXd::Constant(k, INFINITY);
    default: return tau2;
  }
}

ModelFit BayesRegression::fit(const std::vector<int>& active, const Eigen::VectorXd& tau2_active) const {
  const bool icpt = hyper_.student_t;
  const auto k = static_cast<Eigen::Index>(active.size());
  const Eigen::Index off = icpt ? 1 : 0;
  const Eigen::Index q = k + off;
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(q));
  if (icpt) idx.push_back(0);
  for (int a : active) idx.push_back(a + 1);

  Eigen::MatrixXd A(q, q);
  ModelFit f;
  f.rhs.resize(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    f.rhs[r] = zwy_[idx[r]];
    for (Eigen::Index c = 0; c < q; ++c) A(r, c) = gram_(idx[r], idx[c]);
  }
  f.n_flat = icpt ? 1 : 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double t = tau2_active[j];
    if (std::isinf(t)) {
      ++f.n_flat;
    } else {
      A(j + off, j + off) += 1.0 / t;
      f.sum_log_tau2 += std::log(t);
      ++f.n_proper;
    }
  }
  f.chol.compute(A);
  if (f.chol.info() != Eigen::Success) throw NumericError("regression system A is not positive definite");
  const auto& L = f.chol.matrixL();
  f.log_det_A = 0.0;
  for (Eigen::Index r = 0; r < q; ++r) {
    const double d = L(r, r);
    if (!(d > 0.0) || !std::isfinite(d)) throw NumericError("regression system A is not positive definite");
    f.log_det_A += 2.0 * std::log(d);
  }
  f.beta_tilde = f.chol.solve(f.rhs);
  f.quad = f.rhs.dot(f.beta_tilde);
  return f;
}

double BayesRegression::log_model_likelihood(const ModelFit& f, double sigma2) const {
  return -0.5 * f.sum_log_tau2 - 0.5 * f.log_det_A + f.quad / (2.0 * sigma2);
}

double BayesRegression::log_birth_ratio(int col, double tau2_new) const {
  const int k = state_.k();
  std::vector<int> big = state_.active;
  big.push_back(col);
  Eigen::VectorXd tau_small = tau2_for_active(state_.active, state_.tau2);
  Eigen::VectorXd tau_big(k + 1);
  tau_big.head(k) = tau_small;
  tau_big[k] = hyper_.prior == PriorKind::ridge ? state_.tau2[0] : tau2_new;
  const double ll_small = log_model_likelihood(fit(state_.active, tau_small), state_.sigma2);
  const double ll_big = log_model_likelihood(fit(big, tau_big), state_.sigma2);
  const int p_ = p();
  return ll_big - ll_small + log_model_prior(k + 1, p_, p_star_, state_.pi) -
         log_model_prior(k, p_, p_star_, state_.pi) + std::log(rj_move_probability(k + 1, p_, p_star_, false)) -
         std::log(rj_move_probability(k, p_, p_star_, true));
}

Eigen::VectorXd BayesRegression::residuals() const {
  Eigen::VectorXd r = design_.y_tilde;
  if (hyper_.student_t) r.array() -= state_.beta0 - design_.y_bar;
  for (int i = 0; i < state_.k(); ++i) r -= state_.beta[i] * design_.X.col(state_.active[static_cast<std::size_t>(i)]);
  return r;
}

double BayesRegression::prior_tau2_draw(Rng& rng) const {
  // Exp(lambda^2/2) is Gamma(1, lambda^2/2); the NG prior has shape gamma.
  return bound_tau2(rng.gamma(state_.gamma, 0.5 * state_.lambda2));
}

void BayesRegression::step_omega2(Rng& rng) {
  if (!hyper_.student_t) return;
  state_.omega2 = draw_omega2(rng, residuals(), state_.sigma2, state_.nu);
  refresh_gram();
}

double BayesRegression::omega_eta_part() const {
  return 0.5 * (state_.omega2.array().log() + state_.omega2.array().inverse()).sum();
}

void BayesRegression::step_nu(Rng& rng) {
  if (!hyper_.student_t || hyper_.fixed.nu) return;
  NuDrawInfo info;
  state_.nu = draw_nu(rng, omega_eta_part() + hyper_.theta, static_cast<double>(n()), &info);
  ++diag_.nu_draws;
  diag_.nu_attempts += info.attempts;
}

void BayesRegression::step_tau2(Rng& rng) {
  if (hyper_.fixed.tau2) return;
  switch (hyper_.prior) {
    case PriorKind::flat: return;
    case PriorKind::ridge: {
      if (state_.k() > 0 || (hyper_.a_tau > 0.0 && hyper_.b_tau > 0.0))
        state_.tau2[0] = draw_tau2_ridge(rng, state_.beta, state_.sigma2, hyper_.a_tau, hyper_.b_tau);
      return;
    }
    case PriorKind::lasso:
      state_.tau2 = draw_tau2_lasso(rng, state_.beta, state_.sigma2, state_.lambda2);
      return;
    case PriorKind::ng:
      if (state_.gamma == 1.0) {
        state_.tau2 = draw_tau2_lasso(rng, state_.beta, state_.sigma2, state_.lambda2);
      } else {
        for (int j = 0; j < state_.k(); ++j)
          state_.tau2[j] = draw_tau2_ng(rng, state_.beta[j], state_.sigma2, state_.lambda2, state_.gamma);
      }
      return;
  }
}

void BayesRegression::step_lambda2(Rng& rng) {
  if (hyper_.fixed.lambda2) return;
  if (hyper_.prior != PriorKind::lasso && hyper_.prior != PriorKind::ng) return;
  const double shape = hyper_.a_lambda + state_.k() * state_.gamma;
  const double rate = hyper_.b_lambda / state_.gamma + 0.5 * state_.tau2.sum();
  if (!(shape > 0.0 && rate > 0.0)) return;  // improper prior with nothing to learn from
  state_.lambda2 = draw_lambda2(rng, state_.tau2, state_.gamma, hyper_.a_lambda, hyper_.b_lambda);
}

void BayesRegression::step_gamma(Rng& rng) {
  if (hyper_.prior != PriorKind::ng || hyper_.fixed.gamma) return;
  const double g = state_.gamma;
  const double g_new = g * std::exp(hyper_.sigma_gamma * rng.normal());
  const double la = gamma_log_accept(g, g_new, state_.tau2, state_.lambda2, hyper_.a_lambda, hyper_.b_lambda);
  const bool accept = std::log(rng.uniform()) <= la;
  if (accept) state_.gamma = g_new;
  ++diag_.gamma_proposals;
  diag_.gamma_accepts += accept;
  if (adapt_) {
    ++adapt_iter_;
    const double rate = std::pow(static_cast<double>(adapt_iter_), -0.6);
    hyper_.sigma_gamma *= std::exp(rate * ((accept ? 1.0 : 0.0) - 0.25));
    hyper_.sigma_gamma = std::clamp(hyper_.sigma_gamma, 1e-3, 10.0);
  }
}

void BayesRegression::step_rj(Rng& rng) {
  if (!hyper_.model_averaging || p_star_ == 0) return;
  const int p_ = p();
  const bool per_tau = hyper_.prior != PriorKind::ridge;
  std::vector<int> absent;
  for (int move = 0; move < p_; ++move) {
    const int k = state_.k();
    const bool birth = k == 0 || (k < p_star_ && rng.uniform() < 0.5);
    if (birth) {
      absent.clear();
      for (int j = 0; j < p_; ++j)
        if (std::find(state_.active.begin(), state_.active.end(), j) == state_.active.end()) absent.push_back(j);
      const int col = absent[rng.index(absent.size())];
      const double t_new = per_tau ? prior_tau2_draw(rng) : 0.0;
      const double la = log_birth_ratio(col, t_new);
      ++diag_.births_proposed;
      if (std::log(rng.uniform()) <= la) {
        ++diag_.births_accepted;
        state_.active.push_back(col);
        state_.beta.conservativeResize(k + 1);
        state_.beta[k] = 0.0;
        if (per_tau) {
          state_.tau2.conservativeResize(k + 1);
          state_.tau2[k] = t_new;
        }
      }
    } else {
      const auto pos = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
      const int col = state_.active[static_cast<std::size_t>(pos)];
      const double t_col = per_tau ? state_.tau2[pos] : 0.0;
      // Evaluate the reverse birth from the reduced model.
      RegressionState saved = state_;
      state_.active.erase(state_.active.begin() + pos);
      std::vector<double> b(saved.beta.data(), saved.beta.data() + k);
      b.erase(b.begin() + pos);
      state_.beta = Eigen::Map<Eigen::VectorXd>(b.data(), k - 1);
      if (per_tau) {
        std::vector<double> t(saved.tau2.data(), saved.tau2.data() + k);
        t.erase(t.begin() + pos);
        state_.tau2 = Eigen::Map<Eigen::VectorXd>(t.data(), k - 1);
      }
      const double la = -log_birth_ratio(col, t_col);
      ++diag_.deaths_proposed;
      if (std::log(rng.uniform()) <= la) {
        ++diag_.deaths_accepted;
      } else {
        state_ = std::move(saved);
      }
    }
  }
}

void BayesRegression::step_sigma2(Rng& rng) {
  if (hyper_.fixed.sigma2) return;
  const double n_eff = hyper_.student_t ? n() : n() - 1;
  double shape = 0.0;
  double rate = 0.0;
  if (hyper_.marginal_sigma2) {
    const ModelFit f = fit(state_.active, tau2_for_active(state_.active, state_.tau2));
    // For Student-t the flat intercept sits in Z and is counted in n_flat.
    shape = 0.5 * (hyper_.a_sigma + n_eff - f.n_flat);
    rate = 0.5 * (hyper_.b_sigma + ywy_ - f.quad);
  } else {
    const Eigen::VectorXd r = residuals();
    double psi = hyper_.student_t ? r.dot(state_.omega2.cwiseInverse().cwiseProduct(r)) : r.squaredNorm();
    int n_proper = 0;
    if (hyper_.prior != PriorKind::flat) {
      const Eigen::VectorXd t = tau2_for_active(state_.active, state_.tau2);
      for (int j = 0; j < state_.k(); ++j) psi += state_.beta[j] * state_.beta[j] / t[j];
      n_proper = state_.k();
    }
    shape = 0.5 * (hyper_.a_sigma + n_eff + n_proper);
    rate = 0.5 * (hyper_.b_sigma + psi);
  }
  if (!(rate > 0.0) || !std::isfinite(rate)) throw NumericError("sigma^2 conditional has non-positive scale");
  if (!(shape > 0.0)) throw NumericError("sigma^2 conditional is improper: too many flat coefficients for n");
  state_.sigma2 = rng.inv_gamma(shape, rate);
}

void BayesRegression::step_beta(Rng& rng) {
  const ModelFit f = fit(state_.active, tau2_for_active(state_.active, state_.tau2));
  const Eigen::Index q = f.beta_tilde.size();
  Eigen::VectorXd z(q);
  for (Eigen::Index i = 0; i < q; ++i) z[i] = rng.normal();
  const Eigen::VectorXd coef = f.beta_tilde + std::sqrt(state_.sigma2) * f.chol.matrixU().solve(z);
  if (hyper_.student_t) {
    state_.beta0 = design_.y_bar + coef[0];
    state_.beta = coef.tail(q - 1);
  } else {
    state_.beta = coef;
    state_.beta0 = design_.y_bar + std::sqrt(state_.sigma2 / n()) * rng.normal();
  }
}

void BayesRegression::step_pi(Rng& rng) {
  if (!hyper_.model_averaging || !hyper_.hierarchical_pi || hyper_.fixed.pi) return;
  state_.pi = draw_pi(rng, state_.k(), p_star_, hyper_.g, hyper_.h);
}

void BayesRegression::sweep(Rng& rng, bool external_nu) {
  if (hyper_.student_t) {
    step_omega2(rng);
    if (!external_nu) step_nu(rng);
  }
  step_tau2(rng);
  step_lambda2(rng);
  step_gamma(rng);
  step_rj(rng);
  if (hyper_.marginal_sigma2) {
    step_sigma2(rng);
    step_beta(rng);
  } else {
    step_beta(rng);
    step_sigma2(rng);
  }
  step_pi(rng);
}

double BayesRegression::log_posterior() const {
  const double two_pi = 2.0 * std::numbers::pi;
  const double s2 = state_.sigma2;
  Eigen::VectorXd r = design_.y_tilde;
  r.array() -= state_.beta0 - design_.y_bar;
  for (int i = 0; i < state_.k(); ++i) r -= state_.beta[i] * design_.X.col(state_.active[static_cast<std::size_t>(i)]);
  double lp = 0.0;
  if (hyper_.student_t) {
    lp -= 0.5 * (n() * std::log(two_pi * s2) + state_.omega2.array().log().sum() +
                 r.dot(state_.omega2.cwiseInverse().cwiseProduct(r)) / s2);
    const double a = 0.5 * state_.nu;
    for (Eigen::Index i = 0; i < state_.omega2.size(); ++i)
      lp += a * std::log(a) - std::lgamma(a) - (a + 1.0) * std::log(state_.omega2[i]) - a / state_.omega2[i];
    lp += std::log(hyper_.theta) - hyper_.theta * state_.nu;
  } else {
    lp -= 0.5 * (n() * std::log(two_pi * s2) + r.squaredNorm() / s2);
  }
  if (hyper_.prior != PriorKind::flat) {
    const Eigen::VectorXd t = tau2_for_active(state_.active, state_.tau2);
    for (int j = 0; j < state_.k(); ++j)
      lp -= 0.5 * (std::log(two_pi * s2 * t[j]) + state_.beta[j] * state_.beta[j] / (s2 * t[j]));
  }
  const double as = 0.5 * hyper_.a_sigma;
  const double bs = 0.5 * hyper_.b_sigma;
  lp -= (as + 1.0) * std::log(s2) + (bs > 0.0 ? bs / s2 : 0.0);
  if (hyper_.prior == PriorKind::lasso || hyper_.prior == PriorKind::ng) {
    const double rate = 0.5 * state_.lambda2;
    const double g = state_.gamma;
    for (Eigen::Index j = 0; j < state_.tau2.size(); ++j)
      lp += g * std::log(rate) - std::lgamma(g) + (g - 1.0) * std::log(state_.tau2[j]) - rate * state_.tau2[j];
    lp += (hyper_.a_lambda - 1.0) * std::log(state_.lambda2) - hyper_.b_lambda / g * state_.lambda2;
  } else if (hyper_.prior == PriorKind::ridge) {
    const double at = 0.5 * hyper_.a_tau;
    const double bt = 0.5 * hyper_.b_tau;
    lp -= (at + 1.0) * std::log(state_.tau2[0]) + (bt > 0.0 ? bt / state_.tau2[0] : 0.0);
  }
  if (hyper_.model_averaging) lp += log_model_prior(state_.k(), p(), p_star_, state_.pi);
  return lp;
}

RawCoefficients BayesRegression::raw_coefficients() const {
  return unstandardize(state_.beta0, state_.full_beta(p()), design_);
}

void apply_default_hyper(RegressionHyper& hyper, const StandardizedDesign& d) {
  const int n = d.n();
  const int p = d.p();
  const double yty = d.y_tilde.squaredNorm();
  const double s0 = std::max(yty / (n - 1), 1e-300);
  double tau_hat = 1.0;
  if (p > 0) {
    const Eigen::VectorXd xy = d.X.transpose() * d.y_tilde;
    tau_hat = std::max(xy.squaredNorm() / p / s0 - 1.0, 1e-2);
  }
  if (hyper.prior == PriorKind::lasso || hyper.prior == PriorKind::ng) {
    hyper.a_lambda = 2.0;
    hyper.b_lambda = 0.5 * tau_hat;  // M = tau_hat, the prior mean of tau^2
  }
  if (hyper.prior == PriorKind::ridge) {
    hyper.a_tau = 3.0;
    hyper.b_tau = tau_hat;
  }
  if (p >= n && !hyper.model_averaging && hyper.a_sigma == 0.0 && hyper.b_sigma == 0.0 && yty > 0.0) {
    hyper.a_sigma = 3.0;
    hyper.b_sigma = 2.0 * empirical_bayes_bsigma(yty, 1.5, 0.05);
  }
}

}  // namespace monomvn
