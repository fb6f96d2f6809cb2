#include "monomvn/portfolio.hpp"

#include "monomvn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace monomvn {

double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_eq,
                    const Eigen::VectorXd& lambda_in) {
  Eigen::VectorXd stat = qp.H * x + qp.f;
  if (qp.A_eq.rows() > 0) stat -= qp.A_eq.transpose() * lambda_eq;
  if (qp.A_in.rows() > 0) stat -= qp.A_in.transpose() * lambda_in;
  double r = stat.cwiseAbs().maxCoeff();
  if (qp.A_eq.rows() > 0) r = std::max(r, (qp.A_eq * x - qp.b_eq).cwiseAbs().maxCoeff());
  if (qp.A_in.rows() > 0) {
    const Eigen::VectorXd slack = qp.A_in * x - qp.b_in;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      r = std::max(r, -slack[i]);
      r = std::max(r, -lambda_in[i]);
      r = std::max(r, std::abs(lambda_in[i] * slack[i]));
    }
  }
  return r;
}

namespace {

Eigen::MatrixXd stack_rows(const QpProblem& qp, const std::vector<int>& W) {
  Eigen::MatrixXd A(qp.A_eq.rows() + static_cast<Eigen::Index>(W.size()), qp.H.cols());
  if (qp.A_eq.rows() > 0) A.topRows(qp.A_eq.rows()) = qp.A_eq;
  for (std::size_t k = 0; k < W.size(); ++k) A.row(qp.A_eq.rows() + static_cast<Eigen::Index>(k)) = qp.A_in.row(W[k]);
  return A;
}

bool independent_of(const Eigen::MatrixXd& A, const Eigen::RowVectorXd& a) {
  Eigen::MatrixXd B(A.rows() + 1, a.size());
  if (A.rows() > 0) B.topRows(A.rows()) = A;
  B.bottomRows(1) = a;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == B.rows();
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, const Eigen::VectorXd& x0, int max_iter) {
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index meq = qp.A_eq.rows();
  const Eigen::Index min = qp.A_in.rows();
  constexpr double feas_tol = 1e-9;
  if (meq > 0 && (qp.A_eq * x0 - qp.b_eq).cwiseAbs().maxCoeff() > feas_tol)
    throw UsageError("solve_qp: starting point violates an equality constraint");
  if (min > 0 && (qp.A_in * x0 - qp.b_in).minCoeff() < -feas_tol)
    throw UsageError("solve_qp: starting point violates an inequality constraint");

  Eigen::VectorXd x = x0;
  std::vector<int> W;
  {
    Eigen::MatrixXd A = qp.A_eq;
    for (Eigen::Index i = 0; i < min; ++i) {
      if (std::abs(qp.A_in.row(i).dot(x) - qp.b_in[i]) <= feas_tol && independent_of(A, qp.A_in.row(i))) {
        W.push_back(static_cast<int>(i));
        A = stack_rows(qp, W);
      }
    }
  }

  QpResult res;
  const double hscale = std::max(1.0, qp.H.cwiseAbs().maxCoeff());
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    const Eigen::VectorXd g = qp.H * x + qp.f;
    const Eigen::MatrixXd A = stack_rows(qp, W);
    const Eigen::Index q = A.rows();

    Eigen::MatrixXd Z;
    if (q == 0) {
      Z = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(A.transpose());
      const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
      Z = Q.rightCols(n - q);
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    bool ray = false;
    if (Z.cols() > 0) {
      const Eigen::MatrixXd Hr = Z.transpose() * qp.H * Z;
      const Eigen::VectorXd r = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Hr + Hr.transpose()));
      const Eigen::VectorXd ev = es.eigenvalues();
      const Eigen::MatrixXd V = es.eigenvectors();
      const double etol = 1e-11 * std::max(hscale, ev.cwiseAbs().maxCoeff());
      Eigen::VectorXd u = Eigen::VectorXd::Zero(Z.cols());
      Eigen::VectorXd rnull = Eigen::VectorXd::Zero(Z.cols());
      for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double c = V.col(k).dot(r);
        if (ev[k] > etol)
          u -= (c / ev[k]) * V.col(k);
        else
          rnull += c * V.col(k);
      }
      if (rnull.norm() > 1e-12 * std::max(1.0, g.norm())) {
        p = -Z * rnull;
        ray = true;
      } else {
        p = Z * u;
      }
    }

    if (!ray && p.cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      Eigen::VectorXd lam = Eigen::VectorXd::Zero(q);
      if (q > 0) lam = A.transpose().colPivHouseholderQr().solve(g);
      int worst = -1;
      double worst_val = -1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff());
      for (std::size_t k = 0; k < W.size(); ++k) {
        const double v = lam[meq + static_cast<Eigen::Index>(k)];
        if (v < worst_val) {
          worst_val = v;
          worst = static_cast<int>(k);
        }
      }
      if (worst < 0) {
        res.x = x;
        res.lambda_eq = lam.head(meq);
        res.lambda_in = Eigen::VectorXd::Zero(min);
        for (std::size_t k = 0; k < W.size(); ++k)
          res.lambda_in[W[k]] = std::max(0.0, lam[meq + static_cast<Eigen::Index>(k)]);
        res.active = W;
        std::sort(res.active.begin(), res.active.end());
        res.kkt_residual = kkt_residual(qp, x, res.lambda_eq, res.lambda_in);
        return res;
      }
      W.erase(W.begin() + worst);
      continue;
    }

    double alpha = ray ? std::numeric_limits<double>::infinity() : 1.0;
    int blocking = -1;
    for (Eigen::Index i = 0; i < min; ++i) {
      if (std::find(W.begin(), W.end(), static_cast<int>(i)) != W.end()) continue;
      const double ap = qp.A_in.row(i).dot(p);
      if (ap >= -1e-14 * qp.A_in.row(i).norm() * p.norm()) continue;
      const double s = std::max(0.0, (qp.b_in[i] - qp.A_in.row(i).dot(x)) / ap);
      if (s < alpha) {
        alpha = s;
        blocking = static_cast<int>(i);
      }
    }
    if (!std::isfinite(alpha)) throw NumericError("solve_qp: objective is unbounded below");
    x += alpha * p;
    if (blocking >= 0) W.push_back(blocking);
  }
  throw NumericError("solve_qp: active-set iterations exhausted");
}

namespace {

void check_sigma(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols() || S.rows() == 0) throw UsageError("portfolio: Sigma must be a non-empty square matrix");
  if (!S.allFinite()) throw NumericError("portfolio: Sigma has non-finite entries");
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, S.cwiseAbs().maxCoeff()))
    throw NumericError("portfolio: Sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(S.trace(), 1e-300))
    throw NumericError("portfolio: Sigma is not positive semidefinite");
}

void add_box(QpProblem& qp, Eigen::Index m, double cap, Eigen::Index first_row) {
  for (Eigen::Index i = 0; i < m; ++i) {
    qp.A_in(first_row + i, i) = 1.0;
    qp.b_in[first_row + i] = 0.0;
  }
  if (cap < 1.0) {
    for (Eigen::Index i = 0; i < m; ++i) {
      qp.A_in(first_row + m + i, i) = -1.0;
      qp.b_in[first_row + m + i] = -cap;
    }
  }
}

// Maximizes score'w over the capped simplex (or the capped sub-simplex when
// `budget_le`, taking only positive scores).
Eigen::VectorXd greedy_vertex(const Eigen::VectorXd& score, double cap, bool budget_le) {
  const Eigen::Index m = score.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return score[a] > score[b]; });
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  double left = 1.0;
  for (Eigen::Index i : idx) {
    if (left <= 0.0) break;
    if (budget_le && score[i] <= 0.0) break;
    const double take = std::min(cap, left);
    w[i] = take;
    left -= take;
  }
  return w;
}

Weights finish(const QpProblem& qp, const QpResult& r, const Eigen::MatrixXd& Sigma, double cap,
               std::optional<Eigen::Index> target_row) {
  Weights out;
  out.qp = r;
  out.w = r.x;
  out.objective = r.x.dot(Sigma * r.x);
  out.kkt_residual = r.kkt_residual;
  const Eigen::Index m = r.x.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    out.at_lower.push_back(r.x[i] <= 1e-10);
    out.at_upper.push_back(r.x[i] >= cap - 1e-10);
  }
  if (target_row) {
    out.target_binding = std::abs(qp.A_in.row(*target_row).dot(r.x) - qp.b_in[*target_row]) <= 1e-9;
  }
  return out;
}

}  // namespace

Weights solve_min_variance(const PortfolioProblem& p) {
  check_sigma(p.Sigma);
  const Eigen::Index m = p.Sigma.rows();
  if (!(p.cap > 0.0) || p.cap * static_cast<double>(m) < 1.0 - 1e-12)
    throw InfeasibleError("weight cap " + std::to_string(p.cap) + " cannot reach full investment with " +
                          std::to_string(m) + " assets");
  const double cap = std::min(p.cap, 1.0);
  QpProblem qp;
  qp.H = 2.0 * p.Sigma;
  qp.f = Eigen::VectorXd::Zero(m);
  qp.A_eq = Eigen::MatrixXd::Ones(1, m);
  qp.b_eq = Eigen::VectorXd::Ones(1);
  const Eigen::Index rows = cap < 1.0 ? 2 * m : m;
  qp.A_in = Eigen::MatrixXd::Zero(rows, m);
  qp.b_in = Eigen::VectorXd::Zero(rows);
  add_box(qp, m, cap, 0);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  return finish(qp, solve_qp(qp, x0), p.Sigma, cap, std::nullopt);
}

Weights solve_mean_variance(const PortfolioProblem& p) {
  check_sigma(p.Sigma);
  if (!p.mu || !p.mu_min) throw UsageError("mean-variance problem needs mu and a target mu_min");
  const Eigen::Index m = p.Sigma.rows();
  const Eigen::VectorXd& mu = *p.mu;
  if (mu.size() != m) throw UsageError("mu and Sigma dimensions differ");
  const double cap = std::min(p.cap, 1.0);
  if (!(cap > 0.0)) throw InfeasibleError("weight cap must be positive");
  const double target = *p.mu_min;
  QpProblem qp;
  qp.H = 2.0 * p.Sigma;
  qp.f = Eigen::VectorXd::Zero(m);
  const Eigen::Index box_rows = cap < 1.0 ? 2 * m : m;

  if (!p.risk_free) {
    if (cap * static_cast<double>(m) < 1.0 - 1e-12) throw InfeasibleError("weight cap cannot reach full investment");
    qp.A_eq = Eigen::MatrixXd::Ones(1, m);
    qp.b_eq = Eigen::VectorXd::Ones(1);
    qp.A_in = Eigen::MatrixXd::Zero(box_rows + 1, m);
    qp.b_in = Eigen::VectorXd::Zero(box_rows + 1);
    add_box(qp, m, cap, 0);
    qp.A_in.row(box_rows) = mu.transpose();
    qp.b_in[box_rows] = target;
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    if (mu.dot(x0) < target) {
      x0 = greedy_vertex(mu, cap, false);
      if (mu.dot(x0) < target - 1e-12)
        throw InfeasibleError("target return " + std::to_string(target) + " exceeds the best attainable " +
                              std::to_string(mu.dot(x0)));
      // Exact feasibility for the active-set start.
      if (mu.dot(x0) < target) qp.b_in[box_rows] = mu.dot(x0);
    }
    return finish(qp, solve_qp(qp, x0), p.Sigma, cap, box_rows);
  }

  const double rf = *p.risk_free;
  const Eigen::VectorXd excess = mu.array() - rf;
  qp.A_eq.resize(0, m);
  qp.b_eq.resize(0);
  qp.A_in = Eigen::MatrixXd::Zero(box_rows + 2, m);
  qp.b_in = Eigen::VectorXd::Zero(box_rows + 2);
  add_box(qp, m, cap, 0);
  qp.A_in.row(box_rows) = -Eigen::RowVectorXd::Ones(m);
  qp.b_in[box_rows] = -1.0;
  qp.A_in.row(box_rows + 1) = excess.transpose();
  qp.b_in[box_rows + 1] = target - rf;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m);
  if (target - rf > 0.0) {
    x0 = greedy_vertex(excess, cap, true);
    if (excess.dot(x0) < target - rf - 1e-12)
      throw InfeasibleError("target return " + std::to_string(target) + " is not attainable with the risk-free asset");
    if (excess.dot(x0) < target - rf) qp.b_in[box_rows + 1] = excess.dot(x0);
  }
  return finish(qp, solve_qp(qp, x0), p.Sigma, cap, box_rows + 1);
}

MvnEstimate estimation_risk_moments(const std::vector<MvnEstimate>& draws) {
  if (draws.size() < 2) throw UsageError("estimation risk needs at least 2 draws");
  const Eigen::Index m = draws.front().mu.size();
  MvnEstimate e;
  e.mu = Eigen::VectorXd::Zero(m);
  e.Sigma = Eigen::MatrixXd::Zero(m, m);
  for (const auto& d : draws) {
    e.mu += d.mu;
    e.Sigma += d.Sigma;
  }
  const double T = static_cast<double>(draws.size());
  e.mu /= T;
  e.Sigma /= T;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(m, m);
  for (const auto& d : draws) {
    const Eigen::VectorXd c = d.mu - e.mu;
    V.noalias() += c * c.transpose();
  }
  e.Sigma += V / T;
  return e;
}

Strategy parse_strategy(const std::string& name) {
  if (name == "equal" || name == "equal-weight") return Strategy::equal_weight;
  if (name == "sample") return Strategy::sample;
  if (name == "mle") return Strategy::mle;
  if (name == "bayes") return Strategy::bayes;
  if (name == "bayes-risk") return Strategy::bayes_risk;
  throw UsageError("unknown strategy '" + name + "' (expected equal, sample, mle, bayes or bayes-risk)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::equal_weight: return "equal";
    case Strategy::sample: return "sample";
    case Strategy::mle: return "mle";
    case Strategy::bayes: return "bayes";
    case Strategy::bayes_risk: return "bayes-risk";
  }
  return "?";
}

namespace {

double sample_sd(const Eigen::VectorXd& x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt((x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1));
}

MvnEstimate listwise_moments(const DataMatrix& d) {
  std::vector<int> rows;
  for (int i = 0; i < d.rows(); ++i) {
    bool ok = true;
    for (int j = 0; j < d.cols() && ok; ++j) ok = d.observed(i, j);
    if (ok) rows.push_back(i);
  }
  if (rows.size() < 2) throw DataError("sample estimator: fewer than 2 complete rows");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), d.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = d.values.row(rows[r]);
  MvnEstimate e;
  e.mu = X.colwise().mean().transpose();
  const Eigen::MatrixXd C = X.rowwise() - e.mu.transpose();
  e.Sigma = C.transpose() * C / static_cast<double>(X.rows());
  return e;
}

}  // namespace

BacktestReport backtest_statistics(const Eigen::VectorXd& r, const Eigen::VectorXd& benchmark,
                                   const Eigen::VectorXd& riskfree) {
  BacktestReport rep;
  rep.returns = r;
  rep.periods = static_cast<int>(r.size());
  if (r.size() < 2) throw DataError("backtest: fewer than 2 realized periods");
  rep.mean = 12.0 * r.mean();
  rep.sd = std::sqrt(12.0) * sample_sd(r);
  const double excess = 12.0 * (r - riskfree).mean();
  if (rep.sd > 0.0) {
    rep.sharpe = excess / rep.sd;
  } else {
    rep.sharpe = std::numeric_limits<double>::quiet_NaN();
    rep.sharpe_undefined = true;
  }
  const Eigen::VectorXd diff = r - benchmark;
  rep.te = std::sqrt(12.0) * sample_sd(diff);
  const double sb = sample_sd(benchmark);
  const double sr = sample_sd(r);
  if (sb > 0.0 && sr > 0.0) {
    const double cov = ((r.array() - r.mean()) * (benchmark.array() - benchmark.mean())).sum() /
                       static_cast<double>(r.size() - 1);
    rep.cm = cov / (sb * sr);
  } else {
    rep.cm = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

BacktestReport backtest(const DataMatrix& returns, const Eigen::VectorXd& benchmark, const Eigen::VectorXd& riskfree,
                        const BacktestConfig& cfg) {
  const int n = returns.rows();
  const int m = returns.cols();
  if (benchmark.size() != n || riskfree.size() != n)
    throw DataError("backtest: benchmark and risk-free series must have one entry per return row");
  if (cfg.window < 2 || cfg.rebalance < 1) throw UsageError("backtest: bad window or rebalance period");
  if (n <= cfg.window) throw DataError("backtest: need more rows than the estimation window");

  std::vector<double> realized;
  std::vector<double> bench;
  std::vector<double> rf;
  BacktestReport rep;
  Eigen::VectorXd prev;  // weights over all m assets
  double wcount = 0.0;
  int k = 0;
  for (int t = cfg.window; t < n; t += cfg.rebalance, ++k) {
    // Eligible: observed in the last period of the window and often enough in it.
    std::vector<int> elig;
    for (int j = 0; j < m; ++j) {
      if (!returns.observed(t - 1, j)) continue;
      int c = 0;
      for (int i = t - cfg.window; i < t; ++i) c += returns.observed(i, j);
      if (c >= cfg.min_obs) elig.push_back(j);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    bool flagged = false;
    try {
      if (elig.empty()) throw DataError("no eligible assets");
      const auto me = static_cast<Eigen::Index>(elig.size());
      if (cfg.strategy == Strategy::equal_weight) {
        for (int j : elig) w[j] = 1.0 / static_cast<double>(me);
      } else {
        Eigen::MatrixXd V(cfg.window, me);
        std::vector<std::string> labels;
        for (Eigen::Index a = 0; a < me; ++a) {
          labels.push_back(returns.labels[static_cast<std::size_t>(elig[static_cast<std::size_t>(a)])]);
          for (int i = 0; i < cfg.window; ++i) {
            const int row = t - cfg.window + i;
            const int j = elig[static_cast<std::size_t>(a)];
            V(i, a) = returns.observed(row, j) ? returns.values(row, j) - riskfree[row]
                                               : std::numeric_limits<double>::quiet_NaN();
          }
        }
        const DataMatrix win(V, labels);
        MvnEstimate est;
        switch (cfg.strategy) {
          case Strategy::sample: est = listwise_moments(win); break;
          case Strategy::mle: est = mle_path(win, cfg.delta); break;
          case Strategy::bayes:
          case Strategy::bayes_risk: {
            EngineConfig ec = cfg.engine;
            ec.delta = cfg.delta;
            ec.mda = true;
            ec.seed = cfg.engine.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(k + 1);
            const PosteriorDrawSet ds = bayes_path(win, ec);
            est = cfg.strategy == Strategy::bayes ? summarize(ds, SummaryKind::mean)
                                                  : estimation_risk_moments(ds.draws);
            break;
          }
          default: break;
        }
        PortfolioProblem pp;
        pp.Sigma = 0.5 * (est.Sigma + est.Sigma.transpose());
        pp.cap = cfg.cap;
        Weights sol;
        if (cfg.target) {
          pp.mu = est.mu;
          pp.mu_min = *cfg.target;
          pp.risk_free = 0.0;
          sol = solve_mean_variance(pp);
        } else {
          sol = solve_min_variance(pp);
        }
        for (Eigen::Index a = 0; a < me; ++a) w[elig[static_cast<std::size_t>(a)]] = std::max(0.0, sol.w[a]);
      }
    } catch (const Error&) {
      flagged = true;
      if (prev.size() == m) {
        w = prev;
      } else {
        for (int j : elig) w[j] = 1.0 / static_cast<double>(elig.size());
      }
    }
    if (flagged) rep.flagged.push_back(k);
    prev = w;
    wcount += static_cast<double>((w.array() > 0.005).count());
    for (int s = t; s < std::min(n, t + cfg.rebalance); ++s) {
      double r = 0.0;
      for (int j = 0; j < m; ++j)
        if (w[j] != 0.0 && returns.observed(s, j)) r += w[j] * returns.values(s, j);
      r += (1.0 - w.sum()) * riskfree[s];
      realized.push_back(r);
      bench.push_back(benchmark[s]);
      rf.push_back(riskfree[s]);
    }
  }
  const auto T = static_cast<Eigen::Index>(realized.size());
  BacktestReport stats = backtest_statistics(Eigen::Map<Eigen::VectorXd>(realized.data(), T),
                                             Eigen::Map<Eigen::VectorXd>(bench.data(), T),
                                             Eigen::Map<Eigen::VectorXd>(rf.data(), T));
  stats.strategy = to_string(cfg.strategy);
  stats.rebalances = k;
  stats.wmin = wcount / static_cast<double>(k);
  stats.flagged = rep.flagged;
  return stats;
}

}  // namespace monomvn
