#pragma once

#include "monomvn/data_layout.hpp"
#include "monomvn/engine.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace monomvn {

/// Dense convex QP: min 0.5 x'Hx + f'x s.t. A_eq x = b_eq, A_in x >= b_in.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_in;  // >= 0; zero for inactive rows
  std::vector<int> active;    // active inequality rows at the solution
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Primal active-set method for positive semidefinite H. `x0` must be feasible.
QpResult solve_qp(const QpProblem& qp, const Eigen::VectorXd& x0, int max_iter = 5000);

/// Largest violation of stationarity, feasibility, dual feasibility and
/// complementary slackness for a candidate primal-dual triple.
double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_eq,
                    const Eigen::VectorXd& lambda_in);

struct PortfolioProblem {
  Eigen::MatrixXd Sigma;
  std::optional<Eigen::VectorXd> mu;
  std::optional<double> mu_min;
  std::optional<double> risk_free;
  double cap = 1.0;
};

struct Weights {
  Eigen::VectorXd w;
  double objective = 0.0;  // w' Sigma w
  std::vector<bool> at_lower;
  std::vector<bool> at_upper;
  bool target_binding = false;
  double kkt_residual = 0.0;
  QpResult qp;
};

/// min w'Sigma w  s.t. sum w = 1, 0 <= w <= cap.
Weights solve_min_variance(const PortfolioProblem& p);

/// Adds w'mu >= mu_min; with a risk-free rate the budget becomes sum w <= 1 and
/// the target w'mu + (1 - sum w) R_f >= mu_min. Throws InfeasibleError.
Weights solve_mean_variance(const PortfolioProblem& p);

/// Predictive moments: mean of mu draws, and mean of Sigma draws plus the
/// covariance of the mu draws (divisor T).
MvnEstimate estimation_risk_moments(const std::vector<MvnEstimate>& draws);

enum class Strategy { equal_weight, sample, mle, bayes, bayes_risk };
Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

struct BacktestConfig {
  int window = 60;
  int rebalance = 12;
  int min_obs = 12;
  Strategy strategy = Strategy::equal_weight;
  double cap = 1.0;
  std::optional<double> target;  // monthly excess-return target for mean-variance
  double delta = 0.2;
  EngineConfig engine;  // for the Bayesian strategies
};

struct BacktestReport {
  std::string strategy;
  double mean = 0.0;    // annualized
  double sd = 0.0;      // annualized
  double sharpe = 0.0;  // NaN when sd == 0
  double te = 0.0;
  double cm = 0.0;
  double wmin = 0.0;
  bool sharpe_undefined = false;
  int periods = 0;
  int rebalances = 0;
  std::vector<int> flagged;  // rebalance indices where previous weights were carried
  Eigen::VectorXd returns;   // realized monthly portfolio returns
};

/// Rolling-window backtest on per-period returns. benchmark and riskfree are
/// aligned with the rows of `returns`.
BacktestReport backtest(const DataMatrix& returns, const Eigen::VectorXd& benchmark, const Eigen::VectorXd& riskfree,
                        const BacktestConfig& cfg);

/// Summary statistics of a realized series against its benchmark.
BacktestReport backtest_statistics(const Eigen::VectorXd& r, const Eigen::VectorXd& benchmark,
                                   const Eigen::VectorXd& riskfree);

}  // namespace monomvn
