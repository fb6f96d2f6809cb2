#pragma once

#include "monomvn/data_layout.hpp"
#include "monomvn/regression.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace monomvn {

struct MvnEstimate {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
};

/// How gap cells are imputed inside the sampler.
enum class MdaMode {
  /// Gap rows stay in their column's regression and are drawn from their full
  /// conditional, including the later regressions that use them as predictors.
  exact,
  /// Gap rows are left out of their column's regression and drawn from that
  /// regression's predictive only.
  predictive,
};

struct EngineConfig {
  double delta = 0.2;
  RegressionHyper hyper;   // prior kind, Student-t and model-averaging switches, fixed priors
  bool auto_hyper = true;  // data-driven lambda / tau / sigma defaults per column
  bool common_nu = false;
  bool mda = false;
  MdaMode mda_mode = MdaMode::exact;
  int samples = 1000;
  int burnin = -1;  // sweeps; < 0 means 20% of samples * thin
  int thin = -1;    // sweeps per saved draw; < 0 means automatic
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct ColumnDiagnostics {
  std::string label;
  std::string regression;  // prior actually used for the column
  int n = 0;
  int p = 0;
  RegressionDiagnostics counts;
  double sigma_gamma = 0.0;
};

struct GapCell {
  int row = 0;  // original row index
  int col = 0;  // original column index
};

/// Posterior draws of (mu, Sigma) in the original column order of the asset block.
struct PosteriorDrawSet {
  std::vector<std::string> labels;          // asset labels, original order
  std::vector<std::string> factor_labels;   // K factor labels
  std::vector<MvnEstimate> draws;
  Eigen::MatrixXd nu;                       // T x m per-column nu (Student-t); empty otherwise
  /// Per draw, an m x (K + m) 0/1 matrix: entry (a, b) says whether factor b
  /// (b < K) or asset b - K was an active predictor in asset a's regression.
  /// Predictors that are not in the regression at all are marked -1.
  std::vector<Eigen::MatrixXi> inclusion;
  std::vector<GapCell> gaps;
  Eigen::MatrixXd imputed;                  // T x #gaps
  std::vector<double> log_posterior;        // per draw, summed over columns
  std::vector<ColumnDiagnostics> columns;   // layout order, factors first
  int burnin = 0;
  int thin = 1;

  int size() const { return static_cast<int>(draws.size()); }
  int dim() const { return static_cast<int>(labels.size()); }
};

/// Extends (mu, Sigma) of dimension j by one coordinate from a regression of
/// the new coordinate on the first j.
void phi_inverse(double beta0, const Eigen::VectorXd& beta, double sigma2, Eigen::VectorXd& mu, Eigen::MatrixXd& Sigma);

/// Monotone MLE: OLS where delta * n_j >= j (1-based j), ridge with GCV otherwise.
MvnEstimate mle_path(const DataMatrix& d, double delta);

PosteriorDrawSet bayes_path(const DataMatrix& d, const EngineConfig& cfg);

/// Prepends the completely observed factor columns, runs the sampler on the
/// joint vector and keeps the asset block.
PosteriorDrawSet with_factors(const DataMatrix& d, const Eigen::MatrixXd& factors, const EngineConfig& cfg,
                              std::vector<std::string> factor_labels = {});

/// Single nu for all columns from the pooled latent scales.
double common_nu_draw(const std::vector<const BayesRegression*>& regressions, double theta, Rng& rng);

/// Lambda' Omega Lambda + diag(sigma2) with Lambda K x m.
Eigen::MatrixXd factor_model_sigma(const Eigen::MatrixXd& Lambda, const Eigen::MatrixXd& Omega,
                                   const Eigen::VectorXd& sigma2);

Eigen::MatrixXd ledoit_combine(const Eigen::MatrixXd& Sigma_f, const Eigen::MatrixXd& Sigma_c, double alpha);

enum class SummaryKind { mean, map };
MvnEstimate summarize(const PosteriorDrawSet& draws, SummaryKind kind);

/// Fraction of draws in which each predictor was active; -1 marks pairs that
/// are not predictor/response pairs. Shape m x (K + m).
Eigen::MatrixXd inclusion_probabilities(const PosteriorDrawSet& draws);

}  // namespace monomvn
