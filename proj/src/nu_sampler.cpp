#include "monomvn/nu_sampler.hpp"

#include "monomvn/error.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace monomvn {

double nu_eta(const Eigen::VectorXd& omega2, double theta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < omega2.size(); ++i) s += std::log(omega2[i]) + 1.0 / omega2[i];
  return 0.5 * s + theta;
}

double nu_log_density(double nu, double eta, double n) {
  if (!(nu > 0.0)) return -INFINITY;
  return 0.5 * n * nu * std::log(0.5 * nu) - n * std::lgamma(0.5 * nu) - eta * nu;
}

double nu_root_function(double nu, double eta, double n) {
  const double x = 0.5 * nu;
  return 0.5 * n * (std::log(x) + 1.0 - boost::math::digamma(x)) + 1.0 / nu - eta;
}

namespace {

double nu_root_derivative(double nu, double n) {
  const double x = 0.5 * nu;
  return 0.5 * n * (1.0 / nu - 0.5 * boost::math::trigamma(x)) - 1.0 / (nu * nu);
}

}  // namespace

double nu_envelope_scale(double eta, double n) {
  if (!(n > 0.0) || !std::isfinite(eta)) throw NumericError("nu root: invalid inputs");
  double lo = 1e-2;
  double hi = 1e3;
  double glo = nu_root_function(lo, eta, n);
  double ghi = nu_root_function(hi, eta, n);
  for (int k = 0; glo < 0.0 && k < 30; ++k) {
    hi = lo;
    ghi = glo;
    lo *= 0.1;
    glo = nu_root_function(lo, eta, n);
  }
  for (int k = 0; ghi > 0.0 && k < 30; ++k) {
    lo = hi;
    glo = ghi;
    hi *= 10.0;
    ghi = nu_root_function(hi, eta, n);
  }
  if (!(glo >= 0.0 && ghi <= 0.0)) {
    throw NumericError("nu root: no sign change after bracket expansion (eta=" + std::to_string(eta) +
                       ", n=" + std::to_string(n) + ")");
  }

  double x = std::sqrt(lo * hi);
  double fx = nu_root_function(x, eta, n);
  for (int it = 0; it < 200; ++it) {
    if (fx == 0.0) return x;
    if (fx > 0.0)
      lo = x;
    else
      hi = x;
    const double d = nu_root_derivative(x, n);
    double next = x - fx / d;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    fx = nu_root_function(x, eta, n);
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x) break;
  }
  return x;
}

double nu_log_accept(double nu, double nu_star, double eta, double n) {
  if (nu == nu_star) return 0.0;
  const double v = n * (std::lgamma(0.5 * nu_star) - std::lgamma(0.5 * nu)) +
                   0.5 * n * (nu * std::log(0.5 * nu) - nu_star * std::log(0.5 * nu_star)) +
                   (nu - nu_star) * (1.0 / nu_star - eta);
  return std::min(v, 0.0);
}

double draw_nu(Rng& rng, double eta, double n, NuDrawInfo* info, int max_attempts) {
  const double nu_star = nu_envelope_scale(eta, n);
  for (int a = 1; a <= max_attempts; ++a) {
    const double nu = rng.exponential(1.0 / nu_star);
    if (std::log(rng.uniform()) <= nu_log_accept(nu, nu_star, eta, n)) {
      if (info) *info = {nu_star, a};
      return nu;
    }
  }
  throw NumericError("nu rejection sampler exceeded " + std::to_string(max_attempts) + " attempts");
}

}  // namespace monomvn
