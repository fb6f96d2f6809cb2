// Command-line front end: fit, mle, simulate, ell, bf, balance, backtest, rank.

#include "monomvn/data_layout.hpp"
#include "monomvn/engine.hpp"
#include "monomvn/error.hpp"
#include "monomvn/evaluation.hpp"
#include "monomvn/io.hpp"
#include "monomvn/portfolio.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace monomvn;

namespace {

struct Shared {
  std::string input;
  std::string output_dir = ".";
  std::uint64_t seed = 1;
  std::string na_token = "NA";
  std::string prior = "lasso";
  bool student_t = false;
  bool common_nu = false;
  bool mda = false;
  std::string mda_mode = "exact";
  bool rj = false;
  double delta = 0.2;
  int samples = 1000;
  int burnin = -1;
  int thin = -1;
  std::string factors;
  int jobs = 1;
};

void add_io(CLI::App* c, Shared& s, bool input_required = true) {
  auto* in = c->add_option("--input,-i", s.input, "Input file");
  if (input_required) in->required();
  c->add_option("--output-dir,-o", s.output_dir, "Directory for outputs")->capture_default_str();
  c->add_option("--na-token", s.na_token, "Token marking a missing cell")->capture_default_str();
}

void add_engine(CLI::App* c, Shared& s) {
  c->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  c->add_option("--prior", s.prior, "Regression prior")
      ->check(CLI::IsMember({"lasso", "ng", "ridge", "flat"}))
      ->capture_default_str();
  c->add_flag("--student-t", s.student_t, "Student-t errors");
  c->add_flag("--common-nu", s.common_nu, "One degrees-of-freedom parameter for all columns");
  c->add_flag("--mda", s.mda, "Impute non-monotone gaps inside the sampler");
  c->add_option("--mda-mode", s.mda_mode, "Gap imputation: exact or predictive")
      ->check(CLI::IsMember({"exact", "predictive"}))
      ->capture_default_str();
  c->add_flag("--rj", s.rj, "Reversible-jump model averaging");
  c->add_option("--delta", s.delta, "OLS is used when delta * n_j >= j")->capture_default_str();
  c->add_option("--samples", s.samples, "Saved draws")->capture_default_str();
  c->add_option("--burnin", s.burnin, "Burn-in sweeps (-1: automatic)")->capture_default_str();
  c->add_option("--thin", s.thin, "Sweeps per saved draw (-1: automatic)")->capture_default_str();
  c->add_option("--factors", s.factors, "Completely observed factor columns (CSV)");
  c->add_option("--jobs", s.jobs, "Worker threads")->capture_default_str();
}

EngineConfig engine_config(const Shared& s) {
  EngineConfig cfg;
  cfg.delta = s.delta;
  cfg.hyper.prior = parse_prior(s.prior);
  cfg.hyper.student_t = s.student_t;
  cfg.hyper.model_averaging = s.rj;
  cfg.common_nu = s.common_nu;
  cfg.mda = s.mda;
  cfg.mda_mode = s.mda_mode == "predictive" ? MdaMode::predictive : MdaMode::exact;
  cfg.samples = s.samples;
  cfg.burnin = s.burnin;
  cfg.thin = s.thin;
  cfg.seed = s.seed;
  cfg.jobs = s.jobs;
  if (s.jobs < 1) throw UsageError("--jobs must be at least 1");
  return cfg;
}

/// Every option of the subcommand except the output directory, with its
/// resolved value, so the manifest alone reproduces the run.
nlohmann::ordered_json manifest(const CLI::App* sub) {
  nlohmann::ordered_json j;
  j["command"] = sub->get_name();
  nlohmann::ordered_json opts = nlohmann::ordered_json::object();
  std::ostringstream rerun;
  rerun << "monomvn " << sub->get_name();
  for (const CLI::Option* o : sub->get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string key = o->get_lnames().front();
    if (key == "help" || key == "help-all" || key == "output-dir") continue;
    std::string value;
    if (o->get_type_size_max() == 0 || o->get_expected_min() == 0) {
      const bool on = o->count() > 0;
      opts[key] = on;
      if (on) rerun << " --" << key;
      continue;
    }
    if (o->count() > 0) {
      for (std::size_t k = 0; k < o->results().size(); ++k) value += (k ? "," : "") + o->results()[k];
    } else {
      value = o->get_default_str();
    }
    opts[key] = value;
    if (!value.empty()) rerun << " --" << key << ' ' << value;
  }
  j["options"] = opts;
  j["rerun"] = rerun.str();
  return j;
}

void write_manifest(const Shared& s, const CLI::App* sub, const std::vector<std::string>& outputs,
                    nlohmann::ordered_json extra = {}) {
  auto j = manifest(sub);
  j["outputs"] = outputs;
  if (!extra.is_null()) j["results"] = extra;
  std::ofstream out(fs::path(s.output_dir) / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in '" + s.output_dir + "'");
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory '" + dir + "'");
}

std::string out_path(const Shared& s, const std::string& name) { return (fs::path(s.output_dir) / name).string(); }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "inf" || tok == "Inf" || tok == "normal") {
      v.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("cannot parse list entry '" + tok + "'");
    }
  }
  if (v.empty()) throw UsageError("empty list");
  return v;
}

Eigen::VectorXd single_series(const std::string& path, const std::string& na, int n, const char* what) {
  const DataMatrix d = load_matrix_file(path, na);
  if (d.cols() != 1 || d.rows() != n)
    throw DataError(std::string(what) + " file must hold one column with " + std::to_string(n) + " rows");
  for (int i = 0; i < n; ++i)
    if (!d.observed(i, 0)) throw DataError(std::string(what) + " series has a missing value at row " + std::to_string(i + 1));
  return d.values.col(0);
}

// --------------------------------------------------------------------------

int cmd_fit(const Shared& s, const CLI::App* sub, bool csv_draws, const std::string& summary) {
  const EngineConfig cfg = engine_config(s);
  const DataMatrix d = load_matrix_file(s.input, s.na_token);
  PosteriorDrawSet ds;
  if (!s.factors.empty()) {
    const DataMatrix f = load_matrix_file(s.factors, s.na_token);
    if (f.rows() != d.rows()) throw DataError("factor file must have the same rows as the input");
    for (int j = 0; j < f.cols(); ++j)
      if (f.missing_in_column(j) > 0) throw DataError("factor column '" + f.labels[j] + "' has missing values");
    ds = with_factors(d, f.values, cfg, f.labels);
  } else {
    ds = bayes_path(d, cfg);
  }
  const MvnEstimate est = summarize(ds, summary == "map" ? SummaryKind::map : SummaryKind::mean);

  ensure_dir(s.output_dir);
  std::vector<std::string> outputs{"summary.csv", "draws.bin", "diagnostics.csv"};
  write_summary_csv(out_path(s, "summary.csv"), ds.labels, est);
  write_draws_binary(out_path(s, "draws.bin"), ds.labels, ds.draws);
  if (csv_draws) {
    write_draws_csv(out_path(s, "draws.csv"), ds.labels, ds.draws);
    outputs.push_back("draws.csv");
  }
  if (!ds.inclusion.empty()) {
    write_inclusion_csv(out_path(s, "inclusion.csv"), ds);
    outputs.push_back("inclusion.csv");
  }
  {
    std::ofstream out(out_path(s, "diagnostics.csv"), std::ios::trunc);
    out << "column,regression,n,p,gamma_accept,births_proposed,births_accepted,deaths_proposed,deaths_accepted,"
           "nu_draws,nu_attempts\n";
    for (const auto& c : ds.columns) {
      const auto& k = c.counts;
      out << c.label << ',' << c.regression << ',' << c.n << ',' << c.p << ','
          << format_double(k.gamma_proposals ? static_cast<double>(k.gamma_accepts) / k.gamma_proposals
                                             : std::nan(""))
          << ',' << k.births_proposed << ',' << k.births_accepted << ',' << k.deaths_proposed << ','
          << k.deaths_accepted << ',' << k.nu_draws << ',' << k.nu_attempts << '\n';
    }
  }
  if (!ds.gaps.empty()) {
    std::ofstream out(out_path(s, "imputed.csv"), std::ios::trunc);
    out << "row,column,mean,sd\n";
    for (std::size_t g = 0; g < ds.gaps.size(); ++g) {
      const Eigen::VectorXd v = ds.imputed.col(static_cast<Eigen::Index>(g));
      const double mean = v.mean();
      const double sd = v.size() > 1 ? std::sqrt((v.array() - mean).square().sum() / (v.size() - 1)) : 0.0;
      out << ds.gaps[g].row + 1 << ',' << ds.labels[static_cast<std::size_t>(ds.gaps[g].col)] << ','
          << format_double(mean) << ',' << format_double(sd) << '\n';
    }
    outputs.push_back("imputed.csv");
  }
  if (ds.nu.size() > 0) {
    std::vector<std::string> header;
    for (const auto& c : ds.columns) header.push_back(c.label);
    header.resize(static_cast<std::size_t>(ds.nu.cols()));
    write_table_csv(out_path(s, "nu.csv"), header, {}, ds.nu);
    outputs.push_back("nu.csv");
  }
  nlohmann::ordered_json res;
  res["draws"] = ds.size();
  res["burnin"] = ds.burnin;
  res["thin"] = ds.thin;
  res["gaps"] = ds.gaps.size();
  write_manifest(s, sub, outputs, res);
  return 0;
}

int cmd_mle(const Shared& s, const CLI::App* sub) {
  if (!(s.delta >= 0.0 && s.delta < 1.0)) throw UsageError("--delta must lie in [0, 1)");
  const DataMatrix d = load_matrix_file(s.input, s.na_token);
  const MvnEstimate est = mle_path(d, s.delta);
  ensure_dir(s.output_dir);
  write_summary_csv(out_path(s, "summary.csv"), d.labels, est);
  write_manifest(s, sub, {"summary.csv"});
  return 0;
}

int cmd_simulate(const Shared& s, const CLI::App* sub, const std::string& method, int m, int n, double sparsity,
                 bool mono, int floor) {
  GeneratorSpec g;
  g.method = parse_generator(method);
  g.m = m;
  g.n = n;
  g.sparsity = sparsity;
  g.seed = s.seed;
  Rng rng(s.seed, streams::replicate_base);
  const MvnEstimate truth = randmvn(g, rng);
  const Eigen::MatrixXd Y = rmvnorm(rng, n, truth.mu, truth.Sigma);
  std::vector<std::string> labels;
  for (int j = 0; j < m; ++j) labels.push_back("V" + std::to_string(j + 1));
  DataMatrix d(Y, labels);
  if (mono) d = rmono(Y, rng, floor);
  d.labels = labels;
  ensure_dir(s.output_dir);
  Eigen::MatrixXd out = d.values;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j)
      if (!d.observed(i, j)) out(i, j) = std::nan("");
  write_table_csv(out_path(s, "data.csv"), labels, {}, out);
  write_summary_csv(out_path(s, "truth.csv"), labels, truth);
  write_manifest(s, sub, {"data.csv", "truth.csv"});
  return 0;
}

int cmd_ell(const Shared& s, const CLI::App* sub, const std::string& truth, const std::string& est, bool drop_n) {
  std::vector<std::string> lt, le;
  const MvnEstimate t = read_summary_csv(truth, &lt);
  const MvnEstimate e = read_summary_csv(est, &le);
  if (t.mu.size() != e.mu.size()) throw DataError("truth and estimate have different dimensions");
  const EllScore sc = ell(e.mu, e.Sigma, t.mu, t.Sigma, drop_n);
  std::cout << "ell " << format_double(sc.value) << " entropy " << format_double(sc.entropy) << " divergence "
            << format_double(sc.divergence) << '\n';
  if (!s.output_dir.empty()) {
    ensure_dir(s.output_dir);
    std::ofstream out(out_path(s, "ell.csv"), std::ios::trunc);
    out << "value,entropy,divergence\n"
        << format_double(sc.value) << ',' << format_double(sc.entropy) << ',' << format_double(sc.divergence)
        << '\n';
    write_manifest(s, sub, {"ell.csv"});
  }
  return 0;
}

int cmd_bf(const Shared& s, const CLI::App* sub, const std::string& response, bool experiment,
           const std::string& n_grid, const std::string& nu_grid, int reps, double threshold, int thin) {
  TChainConfig chain;
  chain.samples = s.samples;
  chain.burnin = s.burnin < 0 ? 200 : s.burnin;
  chain.thin = thin;
  if (experiment) {
    BfConfig cfg;
    cfg.n_grid.clear();
    for (double v : parse_list(n_grid)) {
      if (!(v >= 1.0 && v == std::floor(v))) throw UsageError("--n-grid entries must be positive integers");
      cfg.n_grid.push_back(static_cast<int>(v));
    }
    cfg.nu_grid = parse_list(nu_grid);
    cfg.reps = reps;
    cfg.chain = chain;
    cfg.log10_threshold = threshold;
    cfg.seed = s.seed;
    cfg.jobs = s.jobs;
    const auto cells = bf_frequency_experiment(cfg);
    ensure_dir(s.output_dir);
    std::ofstream out(out_path(s, "bf_frequency.csv"), std::ios::trunc);
    out << "n,nu,reps,correct,frequency\n";
    for (const auto& c : cells)
      out << c.n << ',' << format_double(c.nu) << ',' << c.reps << ',' << c.correct << ','
          << format_double(c.frequency()) << '\n';
    std::ofstream lng(out_path(s, "bf_long.csv"), std::ios::trunc);
    lng << "n,nu,rep,log_bf\n";
    for (const auto& c : cells)
      for (std::size_t r = 0; r < c.log_bf.size(); ++r)
        lng << c.n << ',' << format_double(c.nu) << ',' << r + 1 << ',' << format_double(c.log_bf[r]) << '\n';
    write_manifest(s, sub, {"bf_frequency.csv", "bf_long.csv"});
    return 0;
  }
  if (s.input.empty()) throw UsageError("bf needs --input or --experiment");
  const DataMatrix d = load_matrix_file(s.input, s.na_token);
  int col = d.cols() - 1;
  if (!response.empty()) {
    const auto it = std::find(d.labels.begin(), d.labels.end(), response);
    if (it == d.labels.end()) throw UsageError("no column named '" + response + "'");
    col = static_cast<int>(it - d.labels.begin());
  }
  for (int j = 0; j < d.cols(); ++j)
    if (d.missing_in_column(j) > 0) throw DataError("bf needs complete data; column '" + d.labels[j] + "' has gaps");
  Eigen::MatrixXd X(d.rows(), d.cols() - 1);
  for (int j = 0, k = 0; j < d.cols(); ++j)
    if (j != col) X.col(k++) = d.values.col(j);
  const Eigen::VectorXd y = d.values.col(col);
  Rng rng(s.seed, 0);
  const auto draws = student_t_chain(X, y, chain, rng);
  const double lbf = bayes_factor_normal_vs_t(draws, y, X);
  std::cout << "log_bf " << format_double(lbf) << " log10_bf " << format_double(lbf / std::log(10.0)) << '\n';
  ensure_dir(s.output_dir);
  std::ofstream out(out_path(s, "bf.csv"), std::ios::trunc);
  out << "response,log_bf,log10_bf,favoured\n"
      << d.labels[static_cast<std::size_t>(col)] << ',' << format_double(lbf) << ','
      << format_double(lbf / std::log(10.0)) << ',' << (lbf > 0 ? "normal" : "student-t") << '\n';
  write_manifest(s, sub, {"bf.csv"});
  return 0;
}

int cmd_balance(const Shared& s, const CLI::App* sub, double cap, std::optional<double> target,
                std::optional<double> risk_free, bool estimation_risk) {
  std::vector<std::string> labels;
  MvnEstimate est;
  if (is_draws_binary(s.input)) {
    const auto draws = read_draws_binary(s.input, &labels);
    if (draws.empty()) throw DataError("draws file is empty");
    if (estimation_risk) {
      est = estimation_risk_moments(draws);
    } else {
      PosteriorDrawSet ds;
      ds.labels = labels;
      ds.draws = draws;
      est = summarize(ds, SummaryKind::mean);
    }
  } else {
    if (estimation_risk) throw UsageError("--estimation-risk needs a draws file as input");
    est = read_summary_csv(s.input, &labels);
  }
  PortfolioProblem p;
  p.Sigma = 0.5 * (est.Sigma + est.Sigma.transpose());
  p.cap = cap;
  Weights w;
  if (target) {
    p.mu = est.mu;
    p.mu_min = *target;
    p.risk_free = risk_free;
    w = solve_mean_variance(p);
  } else {
    if (risk_free) throw UsageError("--risk-free needs --target");
    w = solve_min_variance(p);
  }
  ensure_dir(s.output_dir);
  std::ofstream out(out_path(s, "weights.csv"), std::ios::trunc);
  out << "asset,weight,at_lower,at_upper\n";
  for (Eigen::Index a = 0; a < w.w.size(); ++a)
    out << labels[static_cast<std::size_t>(a)] << ',' << format_double(w.w[a]) << ','
        << (w.at_lower[static_cast<std::size_t>(a)] ? 1 : 0) << ',' << (w.at_upper[static_cast<std::size_t>(a)] ? 1 : 0)
        << '\n';
  nlohmann::ordered_json res;
  res["variance"] = w.objective;
  res["kkt_residual"] = w.kkt_residual;
  res["target_binding"] = w.target_binding;
  write_manifest(s, sub, {"weights.csv"}, res);
  return 0;
}

int cmd_backtest(const Shared& s, const CLI::App* sub, BacktestConfig bc, const std::string& strategy,
                 const std::string& bench_path, const std::string& rf_path, double rf_const) {
  bc.strategy = parse_strategy(strategy);
  bc.delta = s.delta;
  bc.engine = engine_config(s);
  const DataMatrix d = load_matrix_file(s.input, s.na_token);
  const Eigen::VectorXd bench = bench_path.empty()
                                    ? Eigen::VectorXd::Zero(d.rows())
                                    : single_series(bench_path, s.na_token, d.rows(), "benchmark");
  const Eigen::VectorXd rf =
      rf_path.empty() ? Eigen::VectorXd::Constant(d.rows(), rf_const) : single_series(rf_path, s.na_token, d.rows(), "risk-free");
  const BacktestReport r = backtest(d, bench, rf, bc);
  ensure_dir(s.output_dir);
  {
    std::ofstream out(out_path(s, "backtest.csv"), std::ios::trunc);
    out << "strategy,mean,sd,sharpe,te,cm,wmin,periods,rebalances,flagged\n"
        << r.strategy << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << format_double(r.sharpe) << ',' << format_double(r.te) << ',' << format_double(r.cm) << ','
        << format_double(r.wmin) << ',' << r.periods << ',' << r.rebalances << ',' << r.flagged.size() << '\n';
  }
  {
    std::ofstream out(out_path(s, "portfolio_returns.csv"), std::ios::trunc);
    out << "period,return\n";
    for (Eigen::Index t = 0; t < r.returns.size(); ++t) out << t + 1 << ',' << format_double(r.returns[t]) << '\n';
  }
  nlohmann::ordered_json res;
  res["flagged_rebalances"] = r.flagged;
  res["sharpe_undefined"] = r.sharpe_undefined;
  write_manifest(s, sub, {"backtest.csv", "portfolio_returns.csv"}, res);
  return 0;
}

int cmd_rank(const Shared& s, const CLI::App* sub, const std::string& method, int m, int n, double sparsity,
             int reps, const std::string& estimators, bool drop_n_ell) {
  RankConfig rc;
  rc.generator.method = parse_generator(method);
  rc.generator.m = m;
  rc.generator.n = n;
  rc.generator.sparsity = sparsity;
  rc.generator.seed = s.seed;
  rc.reps = reps;
  rc.samples = s.samples;
  rc.burnin = s.burnin < 0 ? s.samples / 5 : s.burnin;
  rc.jobs = s.jobs;
  rc.drop_n_ell = drop_n_ell;
  std::stringstream ss(estimators);
  std::string tok;
  while (std::getline(ss, tok, ',')) rc.estimators.push_back(parse_estimator(tok));
  const RankTable t = rank_experiment(rc);
  ensure_dir(s.output_dir);
  {
    std::ofstream out(out_path(s, "rank_table.csv"), std::ios::trunc);
    out << "stat";
    for (const auto& e : t.estimators) out << ',' << e;
    out << '\n';
    const std::pair<const char*, const Eigen::VectorXd*> rows[] = {
        {"min", &t.min_rank}, {"mean", &t.mean_rank}, {"max", &t.max_rank}};
    for (const auto& [name, v] : rows) {
      out << name;
      for (Eigen::Index e = 0; e < v->size(); ++e) out << ',' << format_double((*v)[e]);
      out << '\n';
    }
  }
  {
    std::ofstream out(out_path(s, "rank_long.csv"), std::ios::trunc);
    out << "rep,estimator,ell,rank,failed\n";
    for (Eigen::Index r = 0; r < t.ranks.rows(); ++r)
      for (Eigen::Index e = 0; e < t.ranks.cols(); ++e)
        out << r + 1 << ',' << t.estimators[static_cast<std::size_t>(e)] << ',' << format_double(t.ell(r, e)) << ','
            << t.ranks(r, e) << ',' << (t.failed[static_cast<std::size_t>(r)][static_cast<std::size_t>(e)] ? 1 : 0)
            << '\n';
  }
  write_manifest(s, sub, {"rank_table.csv", "rank_long.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian estimation of multivariate normal parameters under monotone missingness"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Shared s;

  auto* fit = app.add_subcommand("fit", "Posterior sampling of (mu, Sigma)");
  add_io(fit, s);
  add_engine(fit, s);
  bool csv_draws = false;
  std::string summary_kind = "mean";
  fit->add_flag("--csv-draws", csv_draws, "Also export draws as CSV");
  fit->add_option("--summary", summary_kind, "Point summary: mean or map")
      ->check(CLI::IsMember({"mean", "map"}))
      ->capture_default_str();

  auto* mle = app.add_subcommand("mle", "Monotone maximum likelihood / ridge point estimate");
  add_io(mle, s);
  mle->add_option("--delta", s.delta, "OLS is used when delta * n_j >= j")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Random MVN truth and data");
  std::string method = "normwish";
  int m = 10, n = 100, floor = -1;
  double sparsity = 0.1;
  bool mono = false;
  sim->add_option("--output-dir,-o", s.output_dir, "Directory for outputs")->capture_default_str();
  sim->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  sim->add_option("--method", method, "normwish or parsimonious")
      ->check(CLI::IsMember({"normwish", "parsimonious"}))
      ->capture_default_str();
  sim->add_option("--m", m, "Dimension")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--n", n, "Rows")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--sparsity", sparsity, "Nonzero rate for parsimonious")->capture_default_str();
  sim->add_flag("--mono", mono, "Impose a random monotone missingness pattern");
  sim->add_option("--floor", floor, "Minimum observed count per column (-1: automatic)")->capture_default_str();

  auto* ellc = app.add_subcommand("ell", "Expected log likelihood of an estimate under the truth");
  std::string truth, est;
  bool drop_n_ell = false;
  std::string ell_dir;
  ellc->add_option("--truth", truth, "Summary CSV of the true parameters")->required();
  ellc->add_option("--est", est, "Summary CSV of the estimate")->required();
  ellc->add_option("--output-dir,-o", ell_dir, "Directory for ell.csv");
  ellc->add_flag("--drop-n-term", drop_n_ell, "Omit the -N term inside the divergence");

  auto* bf = app.add_subcommand("bf", "Bayes factor of normal versus Student-t errors");
  std::string response, n_grid = "30,75,100,200", nu_grid = "3,5,7,10,inf";
  bool experiment = false;
  int reps = 30, bf_thin = 10;
  double threshold = 0.0;
  add_io(bf, s, false);
  bf->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  bf->add_option("--samples", s.samples, "Saved draws")->capture_default_str();
  bf->add_option("--burnin", s.burnin, "Burn-in sweeps (-1: 200)")->capture_default_str();
  bf->add_option("--thin", bf_thin, "Sweeps per saved draw")->capture_default_str();
  bf->add_option("--jobs", s.jobs, "Worker threads")->capture_default_str();
  bf->add_option("--response", response, "Response column (default: last)");
  bf->add_flag("--experiment", experiment, "Run the frequency experiment on synthetic data");
  bf->add_option("--n-grid", n_grid, "Sample sizes")->capture_default_str();
  bf->add_option("--nu-grid", nu_grid, "Degrees of freedom (inf = normal)")->capture_default_str();
  bf->add_option("--reps", reps, "Replications per cell")->capture_default_str();
  bf->add_option("--threshold", threshold, "Required |log10 BF| for a call (1 = strong)")->capture_default_str();

  auto* bal = app.add_subcommand("balance", "Minimum-variance or mean-variance weights");
  double cap = 1.0;
  std::optional<double> target, risk_free;
  bool est_risk = false;
  bal->add_option("--input,-i", s.input, "Summary CSV or draws file")->required();
  bal->add_option("--output-dir,-o", s.output_dir, "Directory for outputs")->capture_default_str();
  bal->add_option("--cap", cap, "Upper bound per weight")->capture_default_str();
  bal->add_option("--target", target, "Minimum expected return");
  bal->add_option("--risk-free", risk_free, "Risk-free rate (budget becomes <= 1)");
  bal->add_flag("--estimation-risk", est_risk, "Add posterior variance of mu (draws input)");

  auto* bt = app.add_subcommand("backtest", "Rolling-window portfolio backtest");
  BacktestConfig bc;
  std::string strategy = "equal", bench_path, rf_path;
  double rf_const = 0.0;
  add_io(bt, s);
  add_engine(bt, s);
  bt->add_option("--strategy", strategy, "equal, sample, mle, bayes or bayes-risk")->capture_default_str();
  bt->add_option("--window", bc.window, "Estimation window (periods)")->capture_default_str();
  bt->add_option("--rebalance", bc.rebalance, "Periods between rebalances")->capture_default_str();
  bt->add_option("--min-obs", bc.min_obs, "Observations an asset needs in the window")->capture_default_str();
  bt->add_option("--cap", bc.cap, "Upper bound per weight")->capture_default_str();
  bt->add_option("--target", bc.target, "Minimum expected excess return per period");
  bt->add_option("--benchmark", bench_path, "Benchmark return series (one column)");
  bt->add_option("--riskfree", rf_path, "Risk-free return series (one column)");
  bt->add_option("--rf-rate", rf_const, "Constant risk-free return when no series is given")->capture_default_str();

  auto* rank = app.add_subcommand("rank", "ELL ranking experiment");
  std::string estimators = "bayes-lasso,bayes-ng,bayes-ridge,mle-ridge";
  int rank_reps = 20;
  rank->add_option("--output-dir,-o", s.output_dir, "Directory for outputs")->capture_default_str();
  rank->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  rank->add_option("--method", method, "normwish or parsimonious")
      ->check(CLI::IsMember({"normwish", "parsimonious"}))
      ->capture_default_str();
  rank->add_option("--m", m, "Dimension")->capture_default_str()->check(CLI::PositiveNumber);
  rank->add_option("--n", n, "Rows")->capture_default_str()->check(CLI::PositiveNumber);
  rank->add_option("--sparsity", sparsity, "Nonzero rate for parsimonious")->capture_default_str();
  rank->add_option("--reps", rank_reps, "Replications")->capture_default_str();
  rank->add_option("--estimators", estimators, "Comma-separated estimator list")->capture_default_str();
  rank->add_option("--samples", s.samples, "Saved draws per Bayesian fit")->capture_default_str();
  rank->add_option("--burnin", s.burnin, "Burn-in sweeps (-1: samples / 5)")->capture_default_str();
  rank->add_option("--jobs", s.jobs, "Worker threads")->capture_default_str();
  rank->add_flag("--drop-n-term", drop_n_ell, "Omit the -N term inside the divergence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::usage);
  }
  if (ellc->parsed()) s.output_dir = ell_dir;

  try {
    if (fit->parsed()) return cmd_fit(s, fit, csv_draws, summary_kind);
    if (mle->parsed()) return cmd_mle(s, mle);
    if (sim->parsed()) return cmd_simulate(s, sim, method, m, n, sparsity, mono, floor);
    if (ellc->parsed()) return cmd_ell(s, ellc, truth, est, drop_n_ell);
    if (bf->parsed()) return cmd_bf(s, bf, response, experiment, n_grid, nu_grid, reps, threshold, bf_thin);
    if (bal->parsed()) return cmd_balance(s, bal, cap, target, risk_free, est_risk);
    if (bt->parsed()) return cmd_backtest(s, bt, bc, strategy, bench_path, rf_path, rf_const);
    if (rank->parsed()) return cmd_rank(s, rank, method, m, n, sparsity, rank_reps, estimators, drop_n_ell);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numeric);
  }
  return static_cast<int>(ExitCode::usage);
}
