#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "monomvn/data_layout.hpp"
#include "monomvn/distributions.hpp"
#include "monomvn/error.hpp"
#include "monomvn/evaluation.hpp"
#include "monomvn/io.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace monomvn;

TEST_CASE("ell closed-form cases") {
  const Eigen::Vector2d mu(0.3, -1.0);
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const EllScore s = ell(mu, I, mu, I);
  CHECK(s.value == doctest::Approx(-std::log(2 * std::numbers::pi * std::numbers::e)).epsilon(1e-14));
  CHECK(s.value == doctest::Approx(-2.83788).epsilon(1e-5));
  CHECK(s.divergence == doctest::Approx(0.0));

  const Eigen::VectorXd z = Eigen::VectorXd::Zero(1), one = Eigen::VectorXd::Ones(1);
  const Eigen::MatrixXd I1 = Eigen::MatrixXd::Identity(1, 1);
  CHECK(ell(one, I1, z, I1).value == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * std::numbers::e) - 0.5));
  CHECK(ell(one, I1, z, I1, true).value ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * std::numbers::e) - 1.0));
  CHECK_THROWS_AS(ell(z, -I1, z, I1), NumericError);
}

TEST_CASE("ell matches a Monte Carlo average of log q") {
  Rng rng(3);
  Eigen::Matrix3d S, Sh;
  S << 2.0, 0.5, 0.1, 0.5, 1.0, 0.3, 0.1, 0.3, 1.5;
  Sh << 1.5, 0.2, 0.0, 0.2, 1.2, 0.1, 0.0, 0.1, 2.0;
  const Eigen::Vector3d mu(0, 1, -1), muh(0.2, 0.8, -1.3);
  const EllScore e = ell(muh, Sh, mu, S);
  const Eigen::MatrixXd X = rmvnorm(rng, 1000000, mu, S);
  Eigen::LLT<Eigen::Matrix3d> lq(Sh);
  const double logdet = 2.0 * Eigen::Matrix3d(lq.matrixL()).diagonal().array().log().sum();
  double s = 0, s2 = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::Vector3d d = X.row(i).transpose() - muh;
    const double v = -0.5 * (3 * std::log(2 * std::numbers::pi) + logdet + lq.matrixL().solve(d).squaredNorm());
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(X.rows());
  const double m = s / n;
  CHECK(std::abs(m - e.value) < 3 * std::sqrt((s2 / n - m * m) / n));
}

TEST_CASE("ell invariants") {
  Rng rng(4);
  GeneratorSpec g;
  g.m = 5;
  const MvnEstimate p = randmvn(g, rng);
  const MvnEstimate q = randmvn(g, rng);
  const EllScore pq = ell(q.mu, q.Sigma, p.mu, p.Sigma);
  CHECK(pq.value <= ell(p.mu, p.Sigma, p.mu, p.Sigma).value);
  CHECK(pq.value <= pq.entropy);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(5);
  P.indices() << 3, 0, 4, 1, 2;
  const Eigen::MatrixXd Sp = P * p.Sigma * P.transpose(), Sq = P * q.Sigma * P.transpose();
  CHECK(ell(P * q.mu, Sq, P * p.mu, Sp).value == doctest::Approx(pq.value).epsilon(1e-12));
}

TEST_CASE("randmvn parameterizations") {
  Rng rng(5);
  for (auto method : {GeneratorMethod::normwish, GeneratorMethod::parsimonious}) {
    for (int rep = 0; rep < 20; ++rep) {
      GeneratorSpec g;
      g.method = method;
      g.m = 8;
      const MvnEstimate e = randmvn(g, rng);
      REQUIRE((e.Sigma - e.Sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12 * e.Sigma.cwiseAbs().maxCoeff());
      REQUIRE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e.Sigma).eigenvalues()[0] > 0.0);
    }
  }
  GeneratorSpec g;
  g.method = GeneratorMethod::parsimonious;
  g.m = 6;
  g.sparsity = 0.0;
  const MvnEstimate d = randmvn(g, rng);
  CHECK((d.Sigma - Eigen::MatrixXd(d.Sigma.diagonal().asDiagonal())).norm() == 0.0);

  g.sparsity = 0.1;
  g.m = 10;
  const int reps = 10000;
  std::vector<double> sum(10, 0.0), sum2(10, 0.0);
  std::vector<int> nz;
  for (int r = 0; r < reps; ++r) {
    randmvn(g, rng, &nz);
    for (int j = 0; j < 10; ++j) {
      sum[j] += nz[j];
      sum2[j] += nz[j] * nz[j];
    }
  }
  for (int j = 1; j < 10; ++j) {
    const double m = sum[j] / reps;
    const double se = std::sqrt((sum2[j] / reps - m * m) / reps);
    CHECK(std::abs(m - 0.1 * j) < 3.5 * se);
  }
  CHECK_THROWS_AS(parse_generator("wishart"), UsageError);
}

TEST_CASE("rmono produces monotone patterns") {
  Rng rng(6);
  const Eigen::MatrixXd Y = Eigen::MatrixXd::Random(40, 7);
  for (int rep = 0; rep < 50; ++rep) {
    const DataMatrix d = rmono(Y, rng);
    const MonotoneLayout L = order_monotone(d);
    CHECK(check_monotone(L, d).empty());
    CHECK(d.missing_in_column(0) == 0);
    for (int j = 1; j < 7; ++j) {
      CHECK(d.missing_in_column(j) >= d.missing_in_column(j - 1));
      CHECK(40 - d.missing_in_column(j) >= 4);
    }
  }
  const DataMatrix full = rmono(Y, rng, 40);
  for (int j = 0; j < 7; ++j) CHECK(full.missing_in_column(j) == 0);
}

TEST_CASE("Bayes factor limits") {
  Rng rng(7);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bf_simulate(rng, 50, INFINITY, X, y);
  CHECK(bf_design_beta().size() == 7);
  CHECK(bf_design_beta()[1] == -3.0);
  CHECK(bf_design_intercept() == 1.0);
  std::vector<TDraw> draws;
  for (int t = 0; t < 20; ++t) draws.push_back({1.0, bf_design_beta(), 1.0 + 0.1 * t, 1e8});
  CHECK(std::abs(bayes_factor_normal_vs_t(draws, y, X)) < 1e-3);
  CHECK_THROWS(bayes_factor_normal_vs_t({}, y, X));
}

TEST_CASE("Bayes factor estimator on a one-observation toy") {
  // y ~ N(b0, s2) vs St(b0, s2, nu) with b0, s2 known; the only shared parameter is fixed,
  // so the estimator must equal the exact ratio averaged over the nu draws.
  const Eigen::MatrixXd X(1, 0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 2.5);
  std::vector<TDraw> draws;
  double ratio = 0;
  for (double nu : {2.0, 5.0, 30.0}) {
    draws.push_back({0.5, Eigen::VectorXd(), 1.3, nu});
    ratio += std::exp(normal_log_density(2.0, 0.0, 1.3) - student_t_log_density(2.0, 0.0, 1.3, nu)) / 3.0;
  }
  CHECK(bayes_factor_normal_vs_t(draws, y, X) == doctest::Approx(std::log(ratio)).epsilon(1e-12));
}

TEST_CASE("heavy tails favour the Student-t model") {
  Rng rng(8);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bf_simulate(rng, 500, 3.0, X, y);
  TChainConfig cfg;
  cfg.samples = 300;
  cfg.burnin = 100;
  cfg.thin = 2;
  CHECK(bayes_factor_normal_vs_t(student_t_chain(X, y, cfg, rng), y, X) < 0.0);
}

TEST_CASE("rank ties and single estimators") {
  CHECK(rank_scores(Eigen::Vector2d(1.0, 1.0)) == Eigen::Vector2i(1, 2));
  CHECK(rank_scores(Eigen::Vector3d(-2.0, 5.0, 0.0)) == Eigen::Vector3i(3, 1, 2));
  CHECK(rank_scores(Eigen::VectorXd::Constant(1, -INFINITY))[0] == 1);

  RankConfig cfg;
  cfg.generator.m = 4;
  cfg.generator.n = 30;
  cfg.reps = 3;
  cfg.estimators = {parse_estimator("mle-ridge@0.2")};
  RankTable t = rank_experiment(cfg);
  CHECK((t.ranks.array() == 1).all());
  cfg.estimators = {parse_estimator("mle-ridge"), parse_estimator("mle-ridge")};
  t = rank_experiment(cfg);
  for (int r = 0; r < cfg.reps; ++r) {
    CHECK(t.ell(r, 0) == t.ell(r, 1));
    CHECK(t.ranks(r, 0) == 1);
    CHECK(t.ranks(r, 1) == 2);
  }
  CHECK(parse_estimator("bayes-ng@0.3").delta == 0.3);
  CHECK_THROWS_AS(parse_estimator("ols"), UsageError);
  CHECK_THROWS_AS(parse_estimator("bayes-lasso@1.5"), UsageError);
}

TEST_CASE("summary and draws files round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "monomvn_unit_io";
  fs::create_directories(dir);
  Rng rng(9);
  GeneratorSpec g;
  g.m = 3;
  std::vector<MvnEstimate> draws;
  for (int t = 0; t < 5; ++t) draws.push_back(randmvn(g, rng));
  const std::vector<std::string> labels{"a", "b", "c"};
  write_summary_csv((dir / "s.csv").string(), labels, draws[0]);
  std::vector<std::string> back;
  const MvnEstimate s = read_summary_csv((dir / "s.csv").string(), &back);
  CHECK(back == labels);
  CHECK(s.mu == draws[0].mu);
  CHECK(s.Sigma == draws[0].Sigma);

  write_draws_binary((dir / "d.bin").string(), labels, draws);
  CHECK(is_draws_binary((dir / "d.bin").string()));
  CHECK_FALSE(is_draws_binary((dir / "s.csv").string()));
  const auto rd = read_draws_binary((dir / "d.bin").string());
  REQUIRE(rd.size() == 5);
  for (int t = 0; t < 5; ++t) {
    CHECK(rd[t].mu == draws[t].mu);
    CHECK(rd[t].Sigma == draws[t].Sigma.selfadjointView<Eigen::Upper>().toDenseMatrix());
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(NAN) == "NA");
  CHECK(format_double(-INFINITY) == "-Inf");
  fs::remove_all(dir);
}
