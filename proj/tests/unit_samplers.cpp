#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "monomvn/distributions.hpp"
#include "monomvn/error.hpp"
#include "monomvn/nu_sampler.hpp"
#include "monomvn/regression.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>

#include <cmath>

using namespace monomvn;

namespace {

void random_problem(Rng& rng, int n, int p, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  X.resize(n, p);
  y.resize(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  for (int i = 0; i < n; ++i) y[i] = 1.0 + 2.0 * X(i, 0) - X(i, p - 1) + rng.normal();
}

double mc_mean(int n, const std::function<double()>& f, double* se) {
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = f();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  *se = std::sqrt((s2 / n - m * m) / n);
  return m;
}

}  // namespace

TEST_CASE("standardize centers, scales and inverts") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  const StandardizedDesign d = standardize(X, Eigen::Vector3d(1, 1, 2));
  CHECK(d.X(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(d.X(1, 0) == doctest::Approx(0.0));
  CHECK(d.y_bar == doctest::Approx(4.0 / 3.0));
  const StandardizedDesign again = standardize(d.X, d.y_tilde);
  CHECK((again.X - d.X).norm() < 1e-14);

  Eigen::MatrixXd C(3, 2);
  C << 1, 5, 2, 5, 3, 5;
  CHECK_THROWS_AS(standardize(C, Eigen::Vector3d(1, 2, 3)), DataError);

  Rng rng(3);
  Eigen::MatrixXd R;
  Eigen::VectorXd y;
  random_problem(rng, 20, 4, R, y);
  R.col(1) = R.col(1) * 7.0 + Eigen::VectorXd::Constant(20, 3.0);
  const StandardizedDesign s = standardize(R, y);
  for (int j = 0; j < 4; ++j) {
    CHECK(std::abs(s.X.col(j).mean()) < 1e-12);
    CHECK(std::abs(s.X.col(j).norm() - 1.0) < 1e-12);
  }
  const Eigen::Vector4d b(0.3, -1.2, 2.0, 0.5);
  const RawCoefficients rc = unstandardize(0.7, b, s);
  const Eigen::VectorXd lhs = (s.X * b).array() + 0.7;
  const Eigen::VectorXd rhs = (R * rc.beta).array() + rc.beta0;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unstandardize worked example") {
  StandardizedDesign d;
  d.centers = Eigen::VectorXd::Constant(1, 3.0);
  d.scales = Eigen::VectorXd::Constant(1, 2.0);
  const RawCoefficients r = unstandardize(1.0, Eigen::VectorXd::Constant(1, 4.0), d);
  CHECK(r.beta[0] == 2.0);
  CHECK(r.beta0 == -5.0);
}

TEST_CASE("marginal quadratic identity") {
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    random_problem(rng, 30, 5, X, y);
    RegressionHyper h;
    h.prior = PriorKind::lasso;
    BayesRegression reg(standardize(X, y), h);
    const std::vector<int> active{0, 2, 3};
    const Eigen::Vector3d tau2(0.5 + rng.uniform(), 2.0 * rng.uniform() + 0.1, 3.0);
    const ModelFit f = reg.fit(active, tau2);
    Eigen::MatrixXd Z(30, 3);
    for (int c = 0; c < 3; ++c) Z.col(c) = reg.design().X.col(active[c]);
    const Eigen::VectorXd& yt = reg.design().y_tilde;
    const Eigen::VectorXd b = f.beta_tilde;
    const double lhs = (yt - Z * b).squaredNorm() + (b.array().square() / tau2.array()).sum();
    const double rhs = yt.squaredNorm() - f.quad;
    CHECK(std::abs(lhs - rhs) < 1e-10);
    // closed form
    const Eigen::MatrixXd A = Z.transpose() * Z + Eigen::MatrixXd(tau2.cwiseInverse().asDiagonal());
    CHECK((A.ldlt().solve(Z.transpose() * yt) - b).norm() < 1e-10);
  }
}

TEST_CASE("lambda^2 conditional") {
  Rng rng(9);
  const Eigen::Vector2d tau2(1.0, 3.0);
  double se;
  const double m = mc_mean(200000, [&] { return draw_lambda2(rng, tau2, 1.0, 2.0, 1.0); }, &se);
  CHECK(std::abs(m - 4.0 / 3.0) < 4 * se);  // Gamma(4, rate 1 + (1 + 3) / 2)
  const double p = mc_mean(200000, [&] { return draw_lambda2(rng, Eigen::VectorXd(), 2.0, 3.0, 1.0); }, &se);
  CHECK(std::abs(p - 3.0 / 0.5) < 4 * se);
}

TEST_CASE("lasso tau^2 conditional is the reciprocal inverse Gaussian") {
  Rng rng(21);
  const double beta = 0.8, sigma2 = 1.5, lambda2 = 2.0;
  // E[1/tau^2] = sqrt(lambda2 sigma2 / beta^2)
  double se;
  const double m = mc_mean(
      200000, [&] { return 1.0 / draw_tau2_lasso(rng, Eigen::VectorXd::Constant(1, beta), sigma2, lambda2)[0]; },
      &se);
  CHECK(std::abs(m - std::sqrt(lambda2 * sigma2) / beta) < 4 * se);
  // zero coefficient falls back to the Exp(lambda2 / 2) prior
  const double z = mc_mean(
      200000, [&] { return draw_tau2_lasso(rng, Eigen::VectorXd::Zero(1), sigma2, lambda2)[0]; }, &se);
  CHECK(std::abs(z - 2.0 / lambda2) < 4 * se);
}

TEST_CASE("NG tau^2 at gamma = 1 matches the lasso conditional") {
  Rng rng(23);
  const double beta = 0.6, sigma2 = 0.9, lambda2 = 1.7;
  double se_ng, se_l;
  const double ng = mc_mean(200000, [&] { return draw_tau2_ng(rng, beta, sigma2, lambda2, 1.0); }, &se_ng);
  const double la = mc_mean(
      200000, [&] { return draw_tau2_lasso(rng, Eigen::VectorXd::Constant(1, beta), sigma2, lambda2)[0]; }, &se_l);
  CHECK(std::abs(ng - la) < 4 * std::hypot(se_ng, se_l));
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(draw_tau2_ng(rng, 0.0, 1.0, 1.0, 0.3) > 0.0);
    REQUIRE(draw_tau2_ng(rng, 1e-200, 1.0, 1e-5, 0.2) > 0.0);
  }
}

TEST_CASE("omega^2 and pi conditionals") {
  Rng rng(25);
  double se;
  const double w = mc_mean(200000, [&] { return draw_omega2(rng, Eigen::VectorXd::Zero(1), 1.0, 5.0)[0]; }, &se);
  CHECK(std::abs(w - 5.0 / 4.0) < 4 * se);
  const double pi = mc_mean(200000, [&] { return draw_pi(rng, 3, 10, 1.0, 1.0); }, &se);
  CHECK(std::abs(pi - 4.0 / 12.0) < 4 * se);
  const double p0 = mc_mean(200000, [&] { return draw_pi(rng, 0, 10, 1.0, 1.0); }, &se);
  CHECK(std::abs(p0 - 1.0 / 12.0) < 4 * se);
}

TEST_CASE("gamma acceptance at a pinned instance") {
  const Eigen::Vector2d tau2(1.0, 1.0);
  const double lambda2 = 2.0, g = 1.0, g2 = 2.0, M = 1.0;
  CHECK(gamma_log_accept(g, g, tau2, lambda2, 2.0, M / 2.0) == 0.0);
  // direct evaluation of the three factors
  auto prior = [&](double x) { return std::pow(x, -2.0) * std::exp(-x - M * lambda2 / (2.0 * x)); };
  const boost::math::gamma_distribution<> before(g, 2.0 / lambda2), after(g2, 2.0 / lambda2);
  double ratio = prior(g2) / prior(g);
  for (int j = 0; j < 2; ++j) ratio *= boost::math::pdf(after, tau2[j]) / boost::math::pdf(before, tau2[j]);
  CHECK(gamma_log_accept(g, g2, tau2, lambda2, 2.0, M / 2.0, false) == doctest::Approx(std::log(ratio)).epsilon(1e-12));
  CHECK(gamma_log_accept(g, g2, tau2, lambda2, 2.0, M / 2.0, true) ==
        doctest::Approx(std::log(ratio * g2 / g)).epsilon(1e-12));
}

TEST_CASE("reversible-jump bookkeeping") {
  CHECK(rj_move_probability(0, 5, 4, true) == doctest::Approx(1.0 / 5));
  CHECK(rj_move_probability(2, 5, 4, true) == doctest::Approx(1.0 / 6));
  CHECK(rj_move_probability(4, 5, 4, false) == doctest::Approx(1.0 / 4));
  CHECK(rj_move_probability(2, 5, 4, false) == doctest::Approx(1.0 / 4));
  CHECK(rj_move_probability(4, 5, 4, true) == 0.0);
  CHECK(rj_move_probability(0, 5, 4, false) == 0.0);
  // Bin(p*, pi) prior ratio at p* = 4, k = 1, pi = 0.5, with equal C(p, k) terms (p = p*)
  const double r = std::exp(log_model_prior(2, 4, 4, 0.5) - log_model_prior(1, 4, 4, 0.5));
  CHECK(r * 6.0 / 4.0 == doctest::Approx(1.5));
  CHECK(std::isinf(log_model_prior(5, 6, 4, 0.5)));

  Rng rng(31);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  random_problem(rng, 25, 4, X, y);
  RegressionHyper h;
  h.prior = PriorKind::lasso;
  h.model_averaging = true;
  BayesRegression reg(standardize(X, y), h);
  auto& s = reg.mutable_state();
  s.active = {1};
  s.beta = Eigen::VectorXd::Constant(1, 0.3);
  s.tau2 = Eigen::VectorXd::Constant(1, 0.8);
  s.sigma2 = 1.3;
  s.pi = 0.3;
  // oracle: Gaussian marginal of y~ under each model through its n x n covariance
  auto log_marginal = [&](const std::vector<int>& act, const Eigen::VectorXd& t2) {
    const Eigen::MatrixXd& Xs = reg.design().X;
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(25, 25);
    for (std::size_t c = 0; c < act.size(); ++c) C += t2[c] * Xs.col(act[c]) * Xs.col(act[c]).transpose();
    C *= s.sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    const Eigen::VectorXd& yt = reg.design().y_tilde;
    const Eigen::VectorXd z = llt.matrixL().solve(yt);
    return -z.squaredNorm() / 2.0 - Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  };
  const double expect = log_marginal({1, 2}, Eigen::Vector2d(0.8, 0.4)) -
                        log_marginal({1}, Eigen::VectorXd::Constant(1, 0.8)) + std::log(0.3 / 0.7) +
                        std::log((1.0 / 4.0) / (1.0 / 6.0));
  CHECK(reg.log_birth_ratio(2, 0.4) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("empirical Bayes b_sigma") {
  const double a = 1.5, alpha = 0.05;
  const double b = empirical_bayes_bsigma(1.0, a, alpha);
  CHECK(inv_gamma_cdf(1.0, a, b) == doctest::Approx(1.0 - alpha).epsilon(1e-8));
  CHECK(empirical_bayes_bsigma(2.0, a, alpha) == doctest::Approx(2.0 * b).epsilon(1e-12));
  double lo = 1e-8, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (boost::math::cdf(boost::math::inverse_gamma_distribution<>(a, mid), 1.0) > 1.0 - alpha ? lo : hi) = mid;
  }
  CHECK(b == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
  CHECK_THROWS(empirical_bayes_bsigma(0.0, a, alpha));
}

TEST_CASE("nu envelope root and acceptance") {
  for (double n : {5.0, 30.0, 400.0}) {
    for (double excess : {0.01, 0.3, 2.0}) {
      const double eta = 0.5 * n + 0.1 + excess;
      const double s = nu_envelope_scale(eta, n);
      CHECK(std::abs(nu_root_function(s, eta, n)) <= 1e-10 * std::max(1.0, eta));
      CHECK(nu_log_accept(s, s, eta, n) == 0.0);
      CHECK(nu_log_accept(s * (1 + 1e-9), s, eta, n) == doctest::Approx(0.0).epsilon(1e-6));
      for (double f : {0.1, 0.5, 2.0, 5.0}) CHECK(nu_log_accept(s * f, s, eta, n) <= 0.0);
    }
  }
}

TEST_CASE("NG with gamma pinned to 1 follows the lasso path") {
  Rng data(41);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  random_problem(data, 30, 4, X, y);
  RegressionHyper hl;
  hl.prior = PriorKind::lasso;
  hl.model_averaging = true;
  RegressionHyper hn = hl;
  hn.prior = PriorKind::ng;
  hn.fixed.gamma = true;
  BayesRegression a(standardize(X, y), hl), b(standardize(X, y), hn);
  b.mutable_state().gamma = 1.0;
  Rng ra(99), rb(99);
  for (int s = 0; s < 200; ++s) {
    a.sweep(ra);
    b.sweep(rb);
    REQUIRE(a.state().active == b.state().active);
    REQUIRE(a.state().sigma2 == doctest::Approx(b.state().sigma2).epsilon(1e-9));
    REQUIRE(a.state().lambda2 == doctest::Approx(b.state().lambda2).epsilon(1e-9));
  }
}

TEST_CASE("state invariants over a long chain") {
  Rng data(43);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  random_problem(data, 12, 20, X, y);
  for (PriorKind k : {PriorKind::lasso, PriorKind::ng, PriorKind::ridge}) {
    RegressionHyper h;
    h.prior = k;
    h.model_averaging = true;
    h.student_t = k == PriorKind::lasso;
    StandardizedDesign d = standardize(X, y);
    apply_default_hyper(h, d);
    BayesRegression reg(std::move(d), h);
    Rng rng(7);
    for (int s = 0; s < 500; ++s) {
      reg.sweep(rng);
      const RegressionState& st = reg.state();
      REQUIRE(st.k() <= reg.p_star());
      REQUIRE(st.sigma2 > 0.0);
      REQUIRE(st.lambda2 > 0.0);
      REQUIRE(st.gamma > 0.0);
      if (k == PriorKind::ridge) REQUIRE(st.tau2.size() == 1);
      else REQUIRE(st.tau2.size() == st.k());
      REQUIRE((st.tau2.array() > 0.0).all());
      if (h.student_t) REQUIRE((st.omega2.array() > 0.0).all());
    }
  }
}
