#pragma once

#include "monomvn/data_layout.hpp"
#include "monomvn/engine.hpp"
#include "monomvn/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace monomvn {

enum class GeneratorMethod { normwish, parsimonious };
GeneratorMethod parse_generator(const std::string& name);
std::string to_string(GeneratorMethod m);

struct GeneratorSpec {
  GeneratorMethod method = GeneratorMethod::normwish;
  int m = 10;
  int n = 100;
  double sparsity = 0.1;  // parsimonious: per-predictor nonzero probability
  std::uint64_t seed = 1;
};

/// Random MVN parameters. normwish: mu ~ N(0, I), Sigma ~ Wishart(m, I).
/// parsimonious: sequential regressions with Bin(j-1, sparsity) nonzero
/// N(0, 1) coefficients, sigma_j^2 ~ G(2, 2), mapped through phi_inverse.
/// `nonzeros`, when given, receives the coefficient count of each column.
MvnEstimate randmvn(const GeneratorSpec& spec, Rng& rng, std::vector<int>* nonzeros = nullptr);

/// n draws from N(mu, Sigma) as rows.
Eigen::MatrixXd rmvnorm(Rng& rng, int n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma);

/// Imposes a random monotone pattern: column 1 stays complete, the others
/// keep their first n_j rows with n_j uniform on [floor, n], sorted
/// non-increasing. floor < 0 means max(2, ceil(n / 10)).
DataMatrix rmono(const Eigen::MatrixXd& Y, Rng& rng, int floor = -1);

struct EllScore {
  double value = 0.0;
  double entropy = 0.0;     // -0.5 log((2 pi e)^N |Sigma|)
  double divergence = 0.0;  // KL(p || q)
};

/// E_p[log q] for p = N(mu, Sigma) and q = N(mu_hat, Sigma_hat).
/// `drop_n_term` drops the -N inside the divergence bracket, shifting the
/// value down by N/2.
EllScore ell(const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& Sigma_hat, const Eigen::VectorXd& mu,
             const Eigen::MatrixXd& Sigma, bool drop_n_term = false);

/// One posterior draw of the Student-t regression, in raw units.
struct TDraw {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  double nu = 1.0;
};

/// log of the mean over draws of p(y | psi, normal) / p(y | psi, nu, t).
/// Positive values favour the normal model.
double bayes_factor_normal_vs_t(const std::vector<TDraw>& draws, const Eigen::VectorXd& y, const Eigen::MatrixXd& X);

struct TChainConfig {
  int samples = 1000;
  int burnin = 200;
  int thin = 10;
};

/// Runs the Student-t lasso regression of y on X and returns its draws.
std::vector<TDraw> student_t_chain(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TChainConfig& cfg,
                                   Rng& rng);

// ---------------------------------------------------------------------------

struct EstimatorSpec {
  std::string name;
  bool bayesian = true;
  PriorKind prior = PriorKind::lasso;  // classical estimators are ridge/OLS only
  bool rj = true;
  double delta = 0.0;
};

/// "bayes-lasso", "bayes-ng", "bayes-ridge" (optionally "@delta") and
/// "mle-ridge".
EstimatorSpec parse_estimator(const std::string& token);

struct RankConfig {
  GeneratorSpec generator;
  std::vector<EstimatorSpec> estimators;
  int reps = 20;
  int samples = 300;
  int burnin = 100;
  int jobs = 1;
  bool drop_n_ell = false;
};

struct RankTable {
  std::vector<std::string> estimators;
  Eigen::MatrixXd ell;     // reps x E; -inf marks a failed fit
  Eigen::MatrixXi ranks;   // reps x E, each row a permutation of 1..E
  std::vector<std::vector<bool>> failed;
  Eigen::VectorXd min_rank, mean_rank, max_rank;
};

/// Ranks are assigned by descending ELL; ties keep estimator order.
Eigen::VectorXi rank_scores(const Eigen::VectorXd& scores);

RankTable rank_experiment(const RankConfig& cfg);

struct BfConfig {
  std::vector<int> n_grid{30, 75, 100, 200};
  std::vector<double> nu_grid{3, 5, 7, 10, std::numeric_limits<double>::infinity()};
  int reps = 30;
  TChainConfig chain;
  double log10_threshold = 0.0;  // a call counts only when |log10 BF| > threshold; 1 asks for "strong" evidence
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct BfCell {
  int n = 0;
  double nu = 0.0;
  int correct = 0;
  int reps = 0;
  std::vector<double> log_bf;
  double frequency() const { return reps > 0 ? static_cast<double>(correct) / reps : 0.0; }
};

/// Coefficients and intercept of the synthetic selectability design.
Eigen::VectorXd bf_design_beta();
double bf_design_intercept();

/// n rows uniform on [0,1]^7 and y = 1 + X beta + St(0, 1; nu) errors
/// (normal when nu is infinite).
void bf_simulate(Rng& rng, int n, double nu, Eigen::MatrixXd& X, Eigen::VectorXd& y);

std::vector<BfCell> bf_frequency_experiment(const BfConfig& cfg);

}  // namespace monomvn
