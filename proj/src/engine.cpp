#include "monomvn/engine.hpp"

#include "monomvn/classical.hpp"
#include "monomvn/distributions.hpp"
#include "monomvn/error.hpp"
#include "monomvn/nu_sampler.hpp"
#include "monomvn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>

namespace monomvn {

void phi_inverse(double beta0, const Eigen::VectorXd& beta, double sigma2, Eigen::VectorXd& mu,
                 Eigen::MatrixXd& Sigma) {
  const Eigen::Index j = mu.size();
  if (beta.size() != j || Sigma.rows() != j || Sigma.cols() != j)
    throw UsageError("phi_inverse: dimension mismatch");
  const Eigen::VectorXd s = Sigma * beta;
  mu.conservativeResize(j + 1);
  mu[j] = beta0 + beta.dot(mu.head(j));
  Sigma.conservativeResize(j + 1, j + 1);
  Sigma.col(j).head(j) = s;
  Sigma.row(j).head(j) = s.transpose();
  Sigma(j, j) = sigma2 + beta.dot(s);
}

namespace {

void require_monotone(const DataMatrix& d, const MonotoneLayout& layout, const char* what) {
  const auto bad = check_monotone(layout, d);
  if (!bad.empty()) {
    const int i = layout.row_order[static_cast<std::size_t>(bad.front().first)];
    const int j = layout.col_order[static_cast<std::size_t>(bad.front().second)];
    throw DataError(std::string(what) + ": missingness is not monotone (" + std::to_string(bad.size()) +
                    " gap cell(s), first at row " + std::to_string(i + 1) + ", column '" + d.labels[j] +
                    "'); run fit with --mda to impute them");
  }
}

}  // namespace

MvnEstimate mle_path(const DataMatrix& d, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw UsageError("delta must lie in [0, 1)");
  validate_matrix(d);
  const MonotoneLayout L = order_monotone(d);
  require_monotone(d, L, "mle");
  const int m = d.cols();
  Eigen::VectorXd mu(0);
  Eigen::MatrixXd Sigma(0, 0);
  for (int j = 0; j < m; ++j) {
    const ColumnDesign cd = design_for_column(j, d, L, false);
    const int nj = L.n_obs[j];
    ClassicalFit f;
    if (j == 0) {
      f = ols_fit(cd.Y, cd.y);
    } else if (delta * nj >= j + 1) {
      f = ols_fit(cd.Y, cd.y);
    } else {
      f = ridge_gcv_fit(cd.Y, cd.y);
    }
    if (!(f.sigma2 > 0.0)) throw NumericError("mle: zero residual variance in column '" + d.labels[L.col_order[j]] + "'");
    phi_inverse(f.beta0, f.beta, f.sigma2, mu, Sigma);
  }
  MvnEstimate out;
  out.mu.resize(m);
  out.Sigma.resize(m, m);
  for (int a = 0; a < m; ++a) {
    out.mu[L.col_order[a]] = mu[a];
    for (int b = 0; b < m; ++b) out.Sigma(L.col_order[a], L.col_order[b]) = Sigma(a, b);
  }
  return out;
}

double common_nu_draw(const std::vector<const BayesRegression*>& regressions, double theta, Rng& rng) {
  double eta = theta;
  double n = 0.0;
  for (const BayesRegression* r : regressions) {
    if (!r->hyper().student_t) continue;
    eta += r->omega_eta_part();
    n += r->n();
  }
  if (n <= 0.0) throw UsageError("common nu requires Student-t regressions");
  return draw_nu(rng, eta, n);
}

namespace {

struct Saved {
  double beta0 = 0.0;
  Eigen::VectorXd beta;  // raw, length j (ordered predictors)
  double sigma2 = 0.0;
  double nu = 0.0;
  std::vector<char> active;  // length j
  double log_post = 0.0;
};

struct Column {
  int j = 0;
  std::vector<int> preds;  // ordered predictor columns in the regression
  std::vector<int> rows;   // ordered rows in the regression
  Eigen::VectorXd scales;
  std::unique_ptr<BayesRegression> reg;
  std::unique_ptr<Rng> rng;
  std::string prior_name;
  std::vector<Saved> saved;
};

struct Problem {
  Eigen::MatrixXd W;  // ordered values, factors first, gaps filled
  std::vector<int> n_obs;
  std::vector<std::vector<int>> gaps;  // ordered rows per ordered column
  std::vector<int> row_orig;
  std::vector<int> col_orig;  // asset original index, or -1 for factors
  int K = 0;
  int M = 0;
};

void build_xy(const Problem& P, const Column& c, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  const auto nr = static_cast<Eigen::Index>(c.rows.size());
  X.resize(nr, static_cast<Eigen::Index>(c.preds.size()));
  y.resize(nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const int row = c.rows[static_cast<std::size_t>(r)];
    for (std::size_t k = 0; k < c.preds.size(); ++k) X(r, static_cast<Eigen::Index>(k)) = P.W(row, c.preds[k]);
    y[r] = P.W(row, c.j);
  }
}

Saved snapshot(const Column& c) {
  Saved s;
  const RegressionState& st = c.reg->state();
  const RawCoefficients raw = c.reg->raw_coefficients();
  s.beta0 = raw.beta0;
  s.beta = Eigen::VectorXd::Zero(c.j);
  s.active.assign(static_cast<std::size_t>(c.j), 0);
  for (std::size_t k = 0; k < c.preds.size(); ++k) s.beta[c.preds[k]] = raw.beta[static_cast<Eigen::Index>(k)];
  for (int a : st.active) s.active[static_cast<std::size_t>(c.preds[static_cast<std::size_t>(a)])] = 1;
  s.sigma2 = st.sigma2;
  s.nu = c.reg->hyper().student_t ? st.nu : 0.0;
  s.log_post = c.reg->log_posterior();
  return s;
}

void refresh_design(const Problem& P, Column& c) {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  build_xy(P, c, X, y);
  c.reg->set_design(standardize(X, y, &c.scales));
}

// Raw coefficients (beta0, full ordered beta of length j) of a column's current state.
struct RawFull {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
};

RawFull raw_full(const Column& c) {
  const RawCoefficients raw = c.reg->raw_coefficients();
  RawFull f;
  f.beta0 = raw.beta0;
  f.beta = Eigen::VectorXd::Zero(c.j);
  for (std::size_t k = 0; k < c.preds.size(); ++k) f.beta[c.preds[k]] = raw.beta[static_cast<Eigen::Index>(k)];
  f.sigma2 = c.reg->state().sigma2;
  return f;
}

double row_prediction(const Problem& P, const RawFull& f, int row) {
  double v = f.beta0;
  for (Eigen::Index l = 0; l < f.beta.size(); ++l)
    if (f.beta[l] != 0.0) v += f.beta[l] * P.W(row, l);
  return v;
}

// Position of an ordered row inside a column's regression rows, or -1.
int row_position(const Column& c, int row) {
  const auto it = std::lower_bound(c.rows.begin(), c.rows.end(), row);
  if (it == c.rows.end() || *it != row) return -1;
  return static_cast<int>(it - c.rows.begin());
}

void impute_column(Problem& P, std::vector<Column>& cols, int j, MdaMode mode, Rng& rng) {
  if (P.gaps[j].empty()) return;
  const Column& c = cols[static_cast<std::size_t>(j)];
  const RawFull own = raw_full(c);
  const bool t = c.reg->hyper().student_t;
  std::vector<RawFull> down;
  if (mode == MdaMode::exact)
    for (int k = j + 1; k < P.M; ++k) down.push_back(raw_full(cols[static_cast<std::size_t>(k)]));

  for (int row : P.gaps[j]) {
    const double pred = row_prediction(P, own, row);
    double w_own = 1.0;
    if (t) {
      const double nu = c.reg->state().nu;
      if (mode == MdaMode::exact) {
        const int pos = row_position(c, row);
        w_own = c.reg->state().omega2[pos];
      } else {
        w_own = rng.inv_gamma(0.5 * nu, 0.5 * nu);
      }
    }
    double prec = 1.0 / (own.sigma2 * w_own);
    double lin = pred * prec;
    if (mode == MdaMode::exact) {
      for (int k = j + 1; k < P.M; ++k) {
        const RawFull& f = down[static_cast<std::size_t>(k - j - 1)];
        const double coef = f.beta[j];
        if (coef == 0.0) continue;
        const Column& ck = cols[static_cast<std::size_t>(k)];
        const int pos = row_position(ck, row);
        if (pos < 0) continue;
        const double w = ck.reg->hyper().student_t ? ck.reg->state().omega2[pos] : 1.0;
        const double v = f.sigma2 * w;
        const double rest = row_prediction(P, f, row) - coef * P.W(row, j);
        prec += coef * coef / v;
        lin += coef * (P.W(row, k) - rest) / v;
      }
    }
    P.W(row, j) = lin / prec + rng.normal() / std::sqrt(prec);
  }
}

PosteriorDrawSet run_sampler(Problem P, const EngineConfig& cfg, std::vector<std::string> labels,
                             std::vector<std::string> factor_labels, const std::vector<std::string>& ordered_labels) {
  const int n = static_cast<int>(P.W.rows());
  const int M = P.M;
  const bool student_t = cfg.hyper.student_t;
  if (cfg.samples < 1) throw UsageError("samples must be at least 1");
  if (!(cfg.delta >= 0.0 && cfg.delta < 1.0)) throw UsageError("delta must lie in [0, 1)");
  if (cfg.common_nu && !student_t) throw UsageError("--common-nu requires --student-t");
  const int thin = cfg.thin > 0 ? cfg.thin : (student_t ? std::max(1, n / 10) : 1);
  const int burnin = cfg.burnin >= 0 ? cfg.burnin : (cfg.samples * thin) / 5;
  const bool coupled = cfg.mda || cfg.common_nu;
  const bool exact = cfg.mda_mode == MdaMode::exact;

  // Gap cells start at the mean of the observed entries in their column.
  for (int j = 0; j < M; ++j) {
    if (P.gaps[j].empty()) continue;
    double s = 0.0;
    int c = 0;
    for (int r = 0; r < P.n_obs[j]; ++r) {
      if (std::binary_search(P.gaps[j].begin(), P.gaps[j].end(), r)) continue;
      s += P.W(r, j);
      ++c;
    }
    for (int r : P.gaps[j]) P.W(r, j) = s / c;
  }

  std::vector<Column> cols(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    Column& c = cols[static_cast<std::size_t>(j)];
    c.j = j;
    for (int r = 0; r < P.n_obs[j]; ++r) {
      if (!exact && std::binary_search(P.gaps[j].begin(), P.gaps[j].end(), r)) continue;
      c.rows.push_back(r);
    }
    if (c.rows.size() < 2)
      throw DataError("column '" + ordered_labels[static_cast<std::size_t>(j)] + "' has fewer than 2 usable rows");
    // Predictors constant over the column's rows carry no information.
    for (int l = 0; l < j; ++l) {
      double lo = P.W(c.rows[0], l);
      double hi = lo;
      for (int r : c.rows) {
        lo = std::min(lo, P.W(r, l));
        hi = std::max(hi, P.W(r, l));
      }
      if (hi - lo > 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) c.preds.push_back(l);
    }
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    build_xy(P, c, X, y);
    StandardizedDesign sd = standardize(X, y);
    c.scales = sd.scales;
    RegressionHyper h = cfg.hyper;
    const int nj = static_cast<int>(c.rows.size());
    const bool ols = cfg.delta * nj >= j + 1;
    if (ols) {
      h.prior = PriorKind::flat;
      h.model_averaging = false;
    }
    if (cfg.auto_hyper) apply_default_hyper(h, sd);
    c.prior_name = (ols ? std::string("flat") : to_string(h.prior)) + (h.model_averaging ? "+rj" : "");
    c.reg = std::make_unique<BayesRegression>(std::move(sd), h);
    c.rng = std::make_unique<Rng>(cfg.seed, static_cast<std::uint64_t>(j) + 1);
  }

  const int total = burnin + cfg.samples * thin;
  std::vector<Eigen::VectorXd> imputed_trace;
  std::vector<int> gap_cols;
  for (int j = 0; j < M; ++j)
    for (std::size_t g = 0; g < P.gaps[j].size(); ++g) gap_cols.push_back(j);

  if (!coupled) {
    parallel_for(M, cfg.jobs, [&](int j) {
      Column& c = cols[static_cast<std::size_t>(j)];
      c.saved.reserve(static_cast<std::size_t>(cfg.samples));
      c.reg->set_adapt(true);
      for (int s = 0; s < total; ++s) {
        if (s == burnin) c.reg->set_adapt(false);
        c.reg->sweep(*c.rng);
        if (s >= burnin && (s - burnin + 1) % thin == 0) c.saved.push_back(snapshot(c));
      }
    });
  } else {
    Rng nu_rng(cfg.seed, streams::common_nu);
    double nu_common = std::min(1.0 / cfg.hyper.theta, 100.0);
    for (auto& c : cols) c.reg->set_adapt(true);
    for (int s = 0; s < total; ++s) {
      if (s == burnin)
        for (auto& c : cols) c.reg->set_adapt(false);
      for (int j = 0; j < M; ++j) {
        Column& c = cols[static_cast<std::size_t>(j)];
        if (cfg.mda) refresh_design(P, c);
        if (cfg.common_nu) c.reg->mutable_state().nu = nu_common;
        c.reg->sweep(*c.rng, cfg.common_nu);
        if (cfg.mda) impute_column(P, cols, j, cfg.mda_mode, *c.rng);
      }
      if (cfg.common_nu) {
        std::vector<const BayesRegression*> regs;
        for (const auto& c : cols) regs.push_back(c.reg.get());
        nu_common = common_nu_draw(regs, cfg.hyper.theta, nu_rng);
        for (auto& c : cols) c.reg->mutable_state().nu = nu_common;
      }
      if (s >= burnin && (s - burnin + 1) % thin == 0) {
        for (auto& c : cols) c.saved.push_back(snapshot(c));
        Eigen::VectorXd v(static_cast<Eigen::Index>(gap_cols.size()));
        Eigen::Index g = 0;
        for (int j = 0; j < M; ++j)
          for (int r : P.gaps[j]) v[g++] = P.W(r, j);
        imputed_trace.push_back(std::move(v));
      }
    }
  }

  // Assemble theta-space draws.
  const int m = M - P.K;
  const int T = cfg.samples;
  PosteriorDrawSet out;
  out.labels = std::move(labels);
  out.factor_labels = std::move(factor_labels);
  out.burnin = burnin;
  out.thin = thin;
  out.draws.resize(static_cast<std::size_t>(T));
  out.inclusion.resize(static_cast<std::size_t>(T));
  out.log_posterior.assign(static_cast<std::size_t>(T), 0.0);
  if (student_t) out.nu.resize(T, m);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd mu(0);
    Eigen::MatrixXd Sigma(0, 0);
    Eigen::MatrixXi inc = Eigen::MatrixXi::Constant(m, P.K + m, -1);
    double lp = 0.0;
    for (int j = 0; j < M; ++j) {
      const Saved& s = cols[static_cast<std::size_t>(j)].saved[static_cast<std::size_t>(t)];
      phi_inverse(s.beta0, s.beta, s.sigma2, mu, Sigma);
      lp += s.log_post;
      if (j >= P.K) {
        const int a = P.col_orig[static_cast<std::size_t>(j)];
        if (student_t) out.nu(t, a) = s.nu;
        for (int l = 0; l < j; ++l) {
          const int b = l < P.K ? l : P.K + P.col_orig[static_cast<std::size_t>(l)];
          inc(a, b) = s.active[static_cast<std::size_t>(l)];
        }
      }
    }
    MvnEstimate e;
    e.mu.resize(m);
    e.Sigma.resize(m, m);
    for (int a = 0; a < m; ++a) {
      const int oa = P.col_orig[static_cast<std::size_t>(P.K + a)];
      e.mu[oa] = mu[P.K + a];
      for (int b = 0; b < m; ++b) e.Sigma(oa, P.col_orig[static_cast<std::size_t>(P.K + b)]) = Sigma(P.K + a, P.K + b);
    }
    out.draws[static_cast<std::size_t>(t)] = std::move(e);
    out.inclusion[static_cast<std::size_t>(t)] = std::move(inc);
    out.log_posterior[static_cast<std::size_t>(t)] = lp;
  }

  for (int j = 0; j < M; ++j)
    for (int r : P.gaps[j])
      out.gaps.push_back({P.row_orig[static_cast<std::size_t>(r)], P.col_orig[static_cast<std::size_t>(j)]});
  out.imputed.resize(T, static_cast<Eigen::Index>(gap_cols.size()));
  for (int t = 0; t < T && !imputed_trace.empty(); ++t) out.imputed.row(t) = imputed_trace[static_cast<std::size_t>(t)];

  for (int j = 0; j < M; ++j) {
    const Column& c = cols[static_cast<std::size_t>(j)];
    ColumnDiagnostics cd;
    cd.label = ordered_labels[static_cast<std::size_t>(j)];
    cd.regression = c.prior_name;
    cd.n = static_cast<int>(c.rows.size());
    cd.p = static_cast<int>(c.preds.size());
    cd.counts = c.reg->diagnostics();
    cd.sigma_gamma = c.reg->hyper().sigma_gamma;
    out.columns.push_back(std::move(cd));
  }
  return out;
}

PosteriorDrawSet run_bayes(const DataMatrix& d, const EngineConfig& cfg, const Eigen::MatrixXd* F,
                           std::vector<std::string> factor_labels) {
  validate_matrix(d);
  const int n = d.rows();
  const int m = d.cols();
  MonotoneLayout L = order_monotone(d);
  DataMatrix dm = d;
  if (!check_monotone(L, d).empty()) {
    if (!cfg.mda) require_monotone(d, L, "fit");
    auto marked = mark_gaps(d, L);
    dm = std::move(marked.first);
    L = std::move(marked.second);
  }
  const int K = F ? static_cast<int>(F->cols()) : 0;
  if (F) {
    if (F->rows() != n) throw DataError("factor matrix has " + std::to_string(F->rows()) + " rows, data has " + std::to_string(n));
    if (!F->allFinite()) throw DataError("factors must be completely observed");
  }
  Problem P;
  P.K = K;
  P.M = K + m;
  P.W.resize(n, P.M);
  P.row_orig = L.row_order;
  std::vector<std::string> ordered_labels;
  for (int k = 0; k < K; ++k) {
    P.col_orig.push_back(-1);
    P.n_obs.push_back(n);
    P.gaps.emplace_back();
    ordered_labels.push_back(k < static_cast<int>(factor_labels.size()) ? factor_labels[static_cast<std::size_t>(k)]
                                                                        : "F" + std::to_string(k + 1));
    for (int r = 0; r < n; ++r) P.W(r, k) = (*F)(L.row_order[static_cast<std::size_t>(r)], k);
  }
  for (int a = 0; a < m; ++a) {
    const int j = L.col_order[static_cast<std::size_t>(a)];
    P.col_orig.push_back(j);
    P.n_obs.push_back(L.n_obs[static_cast<std::size_t>(a)]);
    P.gaps.push_back(L.gaps[static_cast<std::size_t>(a)]);
    ordered_labels.push_back(d.labels[static_cast<std::size_t>(j)]);
    for (int r = 0; r < n; ++r) P.W(r, K + a) = dm.values(L.row_order[static_cast<std::size_t>(r)], j);
  }
  if (factor_labels.size() < static_cast<std::size_t>(K))
    factor_labels.assign(ordered_labels.begin(), ordered_labels.begin() + K);
  return run_sampler(std::move(P), cfg, d.labels, std::move(factor_labels), ordered_labels);
}

}  // namespace

PosteriorDrawSet bayes_path(const DataMatrix& d, const EngineConfig& cfg) { return run_bayes(d, cfg, nullptr, {}); }

PosteriorDrawSet with_factors(const DataMatrix& d, const Eigen::MatrixXd& factors, const EngineConfig& cfg,
                              std::vector<std::string> factor_labels) {
  if (factors.cols() == 0) return bayes_path(d, cfg);
  return run_bayes(d, cfg, &factors, std::move(factor_labels));
}

Eigen::MatrixXd factor_model_sigma(const Eigen::MatrixXd& Lambda, const Eigen::MatrixXd& Omega,
                                   const Eigen::VectorXd& sigma2) {
  if (Omega.rows() != Lambda.rows() || Omega.cols() != Lambda.rows() || sigma2.size() != Lambda.cols())
    throw UsageError("factor_model_sigma: dimension mismatch");
  Eigen::MatrixXd S = Lambda.transpose() * Omega * Lambda;
  S.diagonal() += sigma2;
  return 0.5 * (S + S.transpose());
}

Eigen::MatrixXd ledoit_combine(const Eigen::MatrixXd& Sigma_f, const Eigen::MatrixXd& Sigma_c, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("ledoit_combine: alpha must lie in [0, 1]");
  if (Sigma_f.rows() != Sigma_c.rows() || Sigma_f.cols() != Sigma_c.cols())
    throw UsageError("ledoit_combine: dimension mismatch");
  return alpha * Sigma_f + (1.0 - alpha) * Sigma_c;
}

MvnEstimate summarize(const PosteriorDrawSet& draws, SummaryKind kind) {
  if (draws.draws.empty()) throw UsageError("summarize: no draws");
  if (kind == SummaryKind::map) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < draws.draws.size(); ++t)
      if (draws.log_posterior.size() > t && draws.log_posterior[t] > draws.log_posterior[best]) best = t;
    return draws.draws[best];
  }
  MvnEstimate e;
  e.mu = Eigen::VectorXd::Zero(draws.dim());
  e.Sigma = Eigen::MatrixXd::Zero(draws.dim(), draws.dim());
  for (const auto& d : draws.draws) {
    e.mu += d.mu;
    e.Sigma += d.Sigma;
  }
  const double T = static_cast<double>(draws.draws.size());
  e.mu /= T;
  e.Sigma /= T;
  return e;
}

Eigen::MatrixXd inclusion_probabilities(const PosteriorDrawSet& draws) {
  if (draws.inclusion.empty()) return {};
  const Eigen::Index rows = draws.inclusion.front().rows();
  const Eigen::Index cols = draws.inclusion.front().cols();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& inc : draws.inclusion) P += inc.cast<double>();
  P /= static_cast<double>(draws.inclusion.size());
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < cols; ++b)
      if (draws.inclusion.front()(a, b) < 0) P(a, b) = -1.0;
  return P;
}

}  // namespace monomvn
