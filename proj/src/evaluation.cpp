#include "monomvn/evaluation.hpp"

#include "monomvn/distributions.hpp"
#include "monomvn/error.hpp"
#include "monomvn/parallel.hpp"
#include "monomvn/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace monomvn {

GeneratorMethod parse_generator(const std::string& name) {
  if (name == "normwish") return GeneratorMethod::normwish;
  if (name == "parsimonious") return GeneratorMethod::parsimonious;
  throw UsageError("unknown generator '" + name + "' (expected normwish or parsimonious)");
}

std::string to_string(GeneratorMethod m) { return m == GeneratorMethod::normwish ? "normwish" : "parsimonious"; }

MvnEstimate randmvn(const GeneratorSpec& spec, Rng& rng, std::vector<int>* nonzeros) {
  if (spec.m < 1 || spec.n < 1) throw UsageError("randmvn: m and n must be positive");
  if (!(spec.sparsity >= 0.0 && spec.sparsity <= 1.0)) throw UsageError("randmvn: sparsity must lie in [0, 1]");
  const int m = spec.m;
  MvnEstimate e;
  if (nonzeros) nonzeros->assign(static_cast<std::size_t>(m), 0);
  if (spec.method == GeneratorMethod::normwish) {
    e.mu.resize(m);
    for (int j = 0; j < m; ++j) e.mu[j] = rng.normal();
    // Bartlett decomposition with m degrees of freedom.
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      L(i, i) = std::sqrt(2.0 * rng.gamma(0.5 * (m - i), 1.0));
      for (int k = 0; k < i; ++k) L(i, k) = rng.normal();
    }
    e.Sigma = L * L.transpose();
    return e;
  }
  e.mu.resize(0);
  e.Sigma.resize(0, 0);
  std::vector<int> idx;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(j);
    int k = 0;
    for (int t = 0; t < j; ++t) k += rng.uniform() < spec.sparsity;
    idx.resize(static_cast<std::size_t>(j));
    std::iota(idx.begin(), idx.end(), 0);
    for (int t = 0; t < k; ++t) {
      const auto pick = t + static_cast<int>(rng.index(static_cast<std::size_t>(j - t)));
      std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(pick)]);
      beta[idx[static_cast<std::size_t>(t)]] = rng.normal();
    }
    if (nonzeros) (*nonzeros)[static_cast<std::size_t>(j)] = k;
    const double beta0 = rng.normal();
    const double s2 = rng.gamma(2.0, 2.0);
    phi_inverse(beta0, beta, s2, e.mu, e.Sigma);
  }
  return e;
}

Eigen::MatrixXd rmvnorm(Rng& rng, int n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma) {
  const Eigen::Index m = mu.size();
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw NumericError("rmvnorm: covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd Y(n, m);
  Eigen::VectorXd z(m);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) z[j] = rng.normal();
    Y.row(i) = (mu + L * z).transpose();
  }
  return Y;
}

DataMatrix rmono(const Eigen::MatrixXd& Y, Rng& rng, int floor) {
  const int n = static_cast<int>(Y.rows());
  const int m = static_cast<int>(Y.cols());
  if (floor < 0) floor = std::max(2, static_cast<int>(std::ceil(0.1 * n)));
  floor = std::min(floor, n);
  std::vector<int> counts(static_cast<std::size_t>(m), n);
  for (int j = 1; j < m; ++j)
    counts[static_cast<std::size_t>(j)] = floor + static_cast<int>(rng.index(static_cast<std::size_t>(n - floor + 1)));
  std::sort(counts.begin() + 1, counts.end(), std::greater<>());
  DataMatrix d(Y);
  for (int j = 1; j < m; ++j)
    for (int i = counts[static_cast<std::size_t>(j)]; i < n; ++i) d.set_missing(i, j);
  return d;
}

EllScore ell(const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& Sigma_hat, const Eigen::VectorXd& mu,
             const Eigen::MatrixXd& Sigma, bool drop_n_term) {
  const Eigen::Index N = mu.size();
  if (mu_hat.size() != N || Sigma.rows() != N || Sigma_hat.rows() != N) throw UsageError("ell: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> lp(Sigma);
  Eigen::LLT<Eigen::MatrixXd> lq(Sigma_hat);
  if (lp.info() != Eigen::Success) throw NumericError("ell: true covariance is not positive definite");
  if (lq.info() != Eigen::Success) throw NumericError("ell: estimated covariance is not positive definite");
  const Eigen::MatrixXd Lp = lp.matrixL();
  const Eigen::MatrixXd Lq = lq.matrixL();
  const double logdet_p = 2.0 * Lp.diagonal().array().log().sum();
  const double logdet_q = 2.0 * Lq.diagonal().array().log().sum();
  // tr(Sigma_hat^-1 Sigma) = ||Lq^-1 Lp||_F^2
  const Eigen::MatrixXd M = lq.matrixL().solve(Lp);
  const Eigen::VectorXd dz = lq.matrixL().solve(mu_hat - mu);
  const double n = static_cast<double>(N);
  EllScore s;
  s.entropy = -0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet_p);
  s.divergence = 0.5 * (logdet_q - logdet_p + M.squaredNorm() + dz.squaredNorm() - n);
  s.value = s.entropy - s.divergence - (drop_n_term ? 0.5 * n : 0.0);
  return s;
}

double bayes_factor_normal_vs_t(const std::vector<TDraw>& draws, const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
  if (draws.empty()) throw UsageError("bayes factor: no posterior draws");
  std::vector<double> lr;
  lr.reserve(draws.size());
  for (const TDraw& d : draws) {
    const Eigen::VectorXd r = (y - X * d.beta).array() - d.beta0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      s += normal_log_density(r[i], 0.0, d.sigma2) - student_t_log_density(r[i], 0.0, d.sigma2, d.nu);
    lr.push_back(s);
  }
  const double mx = *std::max_element(lr.begin(), lr.end());
  double acc = 0.0;
  for (double v : lr) acc += std::exp(v - mx);
  return mx + std::log(acc / static_cast<double>(lr.size()));
}

std::vector<TDraw> student_t_chain(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TChainConfig& cfg,
                                   Rng& rng) {
  if (cfg.samples < 1 || cfg.thin < 1 || cfg.burnin < 0) throw UsageError("student_t_chain: bad chain lengths");
  StandardizedDesign d = standardize(X, y);
  RegressionHyper h;
  h.prior = PriorKind::lasso;
  h.student_t = true;
  apply_default_hyper(h, d);
  BayesRegression reg(std::move(d), h);
  std::vector<TDraw> out;
  out.reserve(static_cast<std::size_t>(cfg.samples));
  reg.set_adapt(true);
  for (int s = 0; s < cfg.burnin; ++s) reg.sweep(rng);
  reg.set_adapt(false);
  for (int t = 0; t < cfg.samples; ++t) {
    for (int s = 0; s < cfg.thin; ++s) reg.sweep(rng);
    const RawCoefficients rc = reg.raw_coefficients();
    out.push_back({rc.beta0, rc.beta, reg.state().sigma2, reg.state().nu});
  }
  return out;
}

EstimatorSpec parse_estimator(const std::string& token) {
  EstimatorSpec e;
  std::string base = token;
  const auto at = token.find('@');
  if (at != std::string::npos) {
    base = token.substr(0, at);
    try {
      e.delta = std::stod(token.substr(at + 1));
    } catch (const std::exception&) {
      throw UsageError("bad delta in estimator '" + token + "'");
    }
  }
  e.name = token;
  if (base == "bayes-lasso") {
    e.prior = PriorKind::lasso;
  } else if (base == "bayes-ng") {
    e.prior = PriorKind::ng;
  } else if (base == "bayes-ridge") {
    e.prior = PriorKind::ridge;
  } else if (base == "mle-ridge") {
    e.bayesian = false;
    e.prior = PriorKind::ridge;
    e.rj = false;
  } else {
    throw UsageError("unknown estimator '" + token + "' (expected bayes-lasso, bayes-ng, bayes-ridge or mle-ridge)");
  }
  if (!(e.delta >= 0.0 && e.delta < 1.0)) throw UsageError("estimator delta must lie in [0, 1)");
  return e;
}

Eigen::VectorXi rank_scores(const Eigen::VectorXd& scores) {
  const auto E = scores.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(E));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
  Eigen::VectorXi r(E);
  for (std::size_t k = 0; k < order.size(); ++k) r[order[k]] = static_cast<int>(k) + 1;
  return r;
}

RankTable rank_experiment(const RankConfig& cfg) {
  if (cfg.estimators.empty()) throw UsageError("rank experiment: no estimators");
  if (cfg.reps < 1) throw UsageError("rank experiment: reps must be positive");
  const auto E = static_cast<Eigen::Index>(cfg.estimators.size());
  RankTable t;
  for (const auto& e : cfg.estimators) t.estimators.push_back(e.name);
  t.ell = Eigen::MatrixXd::Zero(cfg.reps, E);
  t.ranks = Eigen::MatrixXi::Zero(cfg.reps, E);
  t.failed.assign(static_cast<std::size_t>(cfg.reps), std::vector<bool>(static_cast<std::size_t>(E), false));

  parallel_for(cfg.reps, cfg.jobs, [&](int r) {
    Rng rng(cfg.generator.seed, streams::replicate_base + static_cast<std::uint64_t>(r));
    const MvnEstimate truth = randmvn(cfg.generator, rng);
    const Eigen::MatrixXd Y = rmvnorm(rng, cfg.generator.n, truth.mu, truth.Sigma);
    const DataMatrix d = rmono(Y, rng);
    for (Eigen::Index e = 0; e < E; ++e) {
      const EstimatorSpec& es = cfg.estimators[static_cast<std::size_t>(e)];
      double score = -std::numeric_limits<double>::infinity();
      try {
        MvnEstimate est;
        if (es.bayesian) {
          EngineConfig ec;
          ec.delta = es.delta;
          ec.hyper.prior = es.prior;
          ec.hyper.model_averaging = es.rj;
          ec.samples = cfg.samples;
          ec.burnin = cfg.burnin;
          ec.thin = 1;
          ec.seed = cfg.generator.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(r + 1));
          est = summarize(bayes_path(d, ec), SummaryKind::mean);
        } else {
          est = mle_path(d, es.delta);
        }
        score = ell(est.mu, est.Sigma, truth.mu, truth.Sigma, cfg.drop_n_ell).value;
        if (!std::isfinite(score)) throw NumericError("non-finite ELL");
      } catch (const Error&) {
        score = -std::numeric_limits<double>::infinity();
        t.failed[static_cast<std::size_t>(r)][static_cast<std::size_t>(e)] = true;
      }
      t.ell(r, e) = score;
    }
    t.ranks.row(r) = rank_scores(t.ell.row(r).transpose()).transpose();
  });

  t.min_rank.resize(E);
  t.mean_rank.resize(E);
  t.max_rank.resize(E);
  for (Eigen::Index e = 0; e < E; ++e) {
    t.min_rank[e] = t.ranks.col(e).minCoeff();
    t.max_rank[e] = t.ranks.col(e).maxCoeff();
    t.mean_rank[e] = t.ranks.col(e).cast<double>().mean();
  }
  return t;
}

Eigen::VectorXd bf_design_beta() {
  Eigen::VectorXd b(7);
  b << 2.0, -3.0, 0.0, 0.75, 0.0, 0.0, -0.9;
  return b;
}

double bf_design_intercept() { return 1.0; }

void bf_simulate(Rng& rng, int n, double nu, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  const Eigen::VectorXd beta = bf_design_beta();
  X.resize(n, 7);
  y.resize(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 7; ++k) X(i, k) = rng.uniform();
  for (int i = 0; i < n; ++i) {
    double e = rng.normal();
    if (std::isfinite(nu)) e *= std::sqrt(rng.inv_gamma(0.5 * nu, 0.5 * nu));
    y[i] = bf_design_intercept() + X.row(i).dot(beta) + e;
  }
}

std::vector<BfCell> bf_frequency_experiment(const BfConfig& cfg) {
  if (cfg.n_grid.empty() || cfg.nu_grid.empty()) throw UsageError("bf experiment: empty grid");
  if (cfg.reps < 1) throw UsageError("bf experiment: reps must be positive");
  std::vector<BfCell> cells;
  for (int n : cfg.n_grid) {
    if (n < 10) throw UsageError("bf experiment: n must be at least 10");
    for (double nu : cfg.nu_grid) {
      if (!(nu > 0.0)) throw UsageError("bf experiment: nu must be positive");
      BfCell c;
      c.n = n;
      c.nu = nu;
      c.reps = cfg.reps;
      c.log_bf.assign(static_cast<std::size_t>(cfg.reps), 0.0);
      cells.push_back(c);
    }
  }
  const int C = static_cast<int>(cells.size());
  parallel_for(C * cfg.reps, cfg.jobs, [&](int task) {
    const int ci = task / cfg.reps;
    const int r = task % cfg.reps;
    BfCell& c = cells[static_cast<std::size_t>(ci)];
    Rng rng(cfg.seed, streams::replicate_base + static_cast<std::uint64_t>(task));
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    bf_simulate(rng, c.n, c.nu, X, y);
    const auto draws = student_t_chain(X, y, cfg.chain, rng);
    c.log_bf[static_cast<std::size_t>(r)] = bayes_factor_normal_vs_t(draws, y, X);
  });
  const double cut = cfg.log10_threshold * std::log(10.0);
  for (auto& c : cells) {
    c.correct = 0;
    for (double v : c.log_bf) c.correct += std::isfinite(c.nu) ? (v < -cut) : (v > cut);
  }
  return cells;
}

}  // namespace monomvn
