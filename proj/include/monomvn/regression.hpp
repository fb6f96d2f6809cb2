#pragma once

#include "monomvn/rng.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace monomvn {

enum class PriorKind { lasso, ng, ridge, flat };

PriorKind parse_prior(const std::string& name);
std::string to_string(PriorKind kind);

/// Which blocks of the sampler are held at their current value.
struct FixedBlocks {
  bool tau2 = false;
  bool lambda2 = false;
  bool gamma = false;
  bool sigma2 = false;
  bool nu = false;
  bool pi = false;
};

/// Priors: sigma^2 ~ IG(a_sigma/2, b_sigma/2); lambda^2 | gamma ~ G(a_lambda, b_lambda/gamma);
/// gamma ~ Exp(1) (NG only); ridge tau^2 ~ IG(a_tau/2, b_tau/2); nu ~ Exp(theta);
/// model size k ~ Bin(p_star, pi), pi ~ Beta(g, h).
struct RegressionHyper {
  PriorKind prior = PriorKind::lasso;
  double a_sigma = 0.0;
  double b_sigma = 0.0;
  double a_lambda = 2.0;
  double b_lambda = 0.5;
  double a_tau = 0.0;
  double b_tau = 0.0;
  double theta = 0.1;
  double sigma_gamma = 0.5;
  double g = 1.0;
  double h = 1.0;
  bool model_averaging = false;
  bool student_t = false;
  bool marginal_sigma2 = true;
  bool hierarchical_pi = true;
  int p_star = -1;  // < 0: min(p, n - 1)
  FixedBlocks fixed;
};

/// Centered, unit-norm design plus the transform needed to undo it.
struct StandardizedDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd centers;
  Eigen::VectorXd scales;
  Eigen::VectorXd y_tilde;
  double y_bar = 0.0;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

/// Throws DataError on a constant column. With `fixed_scales`, columns are
/// only centered and then divided by the supplied scales.
StandardizedDesign standardize(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y,
                               const Eigen::VectorXd* fixed_scales = nullptr);

struct RawCoefficients {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
};

/// Maps a full-length standardized coefficient vector back to raw units.
RawCoefficients unstandardize(double beta0, const Eigen::VectorXd& beta_full, const StandardizedDesign& d);

struct RegressionState {
  double beta0 = 0.0;
  std::vector<int> active;  // predictor indices, aligned with beta
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::VectorXd tau2;  // one per active predictor; a single entry for ridge; empty for flat
  double lambda2 = 1.0;
  double gamma = 1.0;
  Eigen::VectorXd omega2;
  double nu = 10.0;
  double pi = 0.5;

  int k() const { return static_cast<int>(active.size()); }
  Eigen::VectorXd full_beta(int p) const;
};

struct RegressionDiagnostics {
  long gamma_proposals = 0;
  long gamma_accepts = 0;
  long births_proposed = 0;
  long births_accepted = 0;
  long deaths_proposed = 0;
  long deaths_accepted = 0;
  long nu_draws = 0;
  long nu_attempts = 0;
};

// Individual full conditionals.

Eigen::VectorXd draw_tau2_lasso(Rng& rng, const Eigen::VectorXd& beta, double sigma2, double lambda2);
double draw_tau2_ng(Rng& rng, double beta_j, double sigma2, double lambda2, double gamma);
double draw_tau2_ridge(Rng& rng, const Eigen::VectorXd& beta, double sigma2, double a_tau, double b_tau);
double draw_lambda2(Rng& rng, const Eigen::VectorXd& tau2, double gamma, double a_lambda, double b_lambda);
/// Log acceptance ratio of gamma -> gamma_new. Without the Jacobian term this
/// is the product of the prior ratio, the gamma-function ratio and the
/// tau^2/lambda^2 power term.
double gamma_log_accept(double gamma, double gamma_new, const Eigen::VectorXd& tau2, double lambda2, double a_lambda,
                        double b_lambda, bool jacobian = true);
Eigen::VectorXd draw_omega2(Rng& rng, const Eigen::VectorXd& residuals, double sigma2, double nu);
double draw_pi(Rng& rng, int k, int p_star, double g, double h);
/// b such that IG(a, b) has its (1 - alpha) quantile at yty.
double empirical_bayes_bsigma(double yty, double a, double alpha);
/// log of Bin(k; p_star, pi) / C(p, k), the prior mass of one model of size k.
double log_model_prior(int k, int p, int p_star, double pi);
/// Probability of proposing a particular birth (up) or death (down) from size k.
double rj_move_probability(int k, int p, int p_star, bool birth);

/// Summary of A = Z'WZ + D^-1 for one active set.
struct ModelFit {
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd rhs;         // Z'W y
  Eigen::VectorXd beta_tilde;  // A^-1 Z'W y
  double log_det_A = 0.0;
  double quad = 0.0;           // beta_tilde' A beta_tilde
  double sum_log_tau2 = 0.0;   // over proper prior terms
  int n_flat = 0;              // coefficients with zero prior precision
  int n_proper = 0;
};

/// One Bayesian shrinkage regression, sampled by blocked Gibbs with optional
/// reversible-jump model moves and Student-t errors.
class BayesRegression {
 public:
  BayesRegression(StandardizedDesign design, RegressionHyper hyper);

  const StandardizedDesign& design() const { return design_; }
  const RegressionHyper& hyper() const { return hyper_; }
  const RegressionState& state() const { return state_; }
  RegressionState& mutable_state() { return state_; }
  const RegressionDiagnostics& diagnostics() const { return diag_; }
  int p() const { return design_.p(); }
  int n() const { return design_.n(); }
  int p_star() const { return p_star_; }

  /// Replaces the data (same shape); the state is kept.
  void set_design(StandardizedDesign design);

  /// One full scan. When `external_nu` is set the degrees of freedom are
  /// left to the caller (common-nu pooling).
  void sweep(Rng& rng, bool external_nu = false);

  void step_omega2(Rng& rng);
  void step_nu(Rng& rng);
  void step_tau2(Rng& rng);
  void step_lambda2(Rng& rng);
  void step_gamma(Rng& rng);
  void step_rj(Rng& rng);
  void step_sigma2(Rng& rng);
  void step_beta(Rng& rng);
  void step_pi(Rng& rng);

  /// Turns on Robbins-Monro adaptation of sigma_gamma toward 25% acceptance.
  void set_adapt(bool on) { adapt_ = on; }

  /// Fit summary for an active set with matching prior variances.
  ModelFit fit(const std::vector<int>& active, const Eigen::VectorXd& tau2_active) const;
  /// log p(y | S, sigma^2, tau^2) up to an S-free constant.
  double log_model_likelihood(const ModelFit& f, double sigma2) const;
  /// Log acceptance ratio for adding predictor `col` with prior variance tau2_new.
  double log_birth_ratio(int col, double tau2_new) const;

  /// Sum of log prior and log likelihood at the current state (MAP bookkeeping).
  double log_posterior() const;

  /// Half sum of log w + 1/w over the latent scales, and their count.
  double omega_eta_part() const;

  /// Raw-coordinate coefficients (full length p).
  RawCoefficients raw_coefficients() const;

 private:
  void refresh_gram();
  Eigen::VectorXd tau2_for_active(const std::vector<int>& active, const Eigen::VectorXd& tau2) const;
  Eigen::VectorXd residuals() const;
  double prior_tau2_draw(Rng& rng) const;

  StandardizedDesign design_;
  RegressionHyper hyper_;
  RegressionState state_;
  RegressionDiagnostics diag_;
  int p_star_ = 0;
  bool adapt_ = false;
  long adapt_iter_ = 0;

  // Weighted Gram of [1, X]; index 0 is the intercept.
  Eigen::MatrixXd gram_;
  Eigen::VectorXd zwy_;
  double ywy_ = 0.0;
};

/// Defaults for the hyperparameters that depend on the data: lambda^2 and
/// ridge tau^2 priors matched to a moment estimate of the signal, and the
/// empirical-Bayes sigma^2 prior when p >= n without model averaging.
void apply_default_hyper(RegressionHyper& hyper, const StandardizedDesign& d);

}  // namespace monomvn
