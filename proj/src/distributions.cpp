#include "monomvn/distributions.hpp"

#include "monomvn/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace monomvn {

double rinvgauss(Rng& rng, double mean, double shape) {
  const double z = rng.normal();
  const double y = z * z;
  const double mu2 = mean * mean;
  const double l2 = 2.0 * shape;
  double x1 = mean + mu2 * y / l2 - (mean / l2) * std::sqrt(4.0 * mean * shape * y + mu2 * y * y);
  // Cancellation when mean*y/shape is huge; the small root is then ~ mean*shape/(mean*y).
  if (!(x1 > 0.0)) x1 = mean * shape / (shape + mean * y);
  const double u = rng.uniform();
  return (u <= mean / (mean + x1)) ? x1 : mu2 / x1;
}

namespace {

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms without mode shift (Dagpunar 1988; Lehner 1989).
double gig_rou_noshift(Rng& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Constant hat on the log-concave part, for 0 <= lambda < 1 and small omega.
double gig_new_approach(Rng& rng, double lambda, double omega) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1 = 0.0;
  double k2 = 0.0;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = (lambda == 0.0) ? k1 * std::log(2.0 / (omega * omega))
                              : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * rng.uniform();
    double x = 0.0;
    double hx = 0.0;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double a = (x0 > 2.0 / omega) ? x0 : 2.0 / omega;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * a) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

// Ratio-of-uniforms shifted by the mode, bounding rectangle via Cardano.
double gig_rou_shift(Rng& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = (2.0 * (lambda - 1.0) * xm / omega - 1.0);
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;

  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

}  // namespace

double rgig(Rng& rng, double lambda, double chi, double psi) {
  constexpr double kZero = 1e-300;
  if (!(std::isfinite(lambda) && std::isfinite(chi) && std::isfinite(psi)) || chi < 0.0 || psi < 0.0 ||
      (chi <= kZero && lambda <= 0.0) || (psi <= kZero && lambda >= 0.0)) {
    throw NumericError("invalid GIG parameters: lambda=" + std::to_string(lambda) + " chi=" + std::to_string(chi) +
                       " psi=" + std::to_string(psi));
  }
  if (chi <= kZero) return rng.gamma(lambda, psi / 2.0);
  if (psi <= kZero) return rng.inv_gamma(-lambda, chi / 2.0);

  const double abs_lambda = std::abs(lambda);
  const double alpha = std::sqrt(chi / psi);
  const double omega = std::sqrt(psi * chi);
  double x = 0.0;
  if (abs_lambda > 2.0 || omega > 3.0) {
    x = gig_rou_shift(rng, abs_lambda, omega);
  } else if (abs_lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = gig_rou_noshift(rng, abs_lambda, omega);
  } else if (omega > 0.0) {
    x = gig_new_approach(rng, abs_lambda, omega);
  } else {
    throw NumericError("GIG generator: omega must be positive");
  }
  // GIG(-lambda, psi, chi) is the law of 1/X for X ~ GIG(lambda, chi, psi).
  return lambda < 0.0 ? alpha / x : alpha * x;
}

double gig_log_kernel(double x, double lambda, double chi, double psi) {
  return (lambda - 1.0) * std::log(x) - 0.5 * (chi / x + psi * x);
}

double inv_gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_q(shape, rate / x);
}

double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

double student_t_log_density(double x, double location, double scale2, double nu) {
  const double z2 = (x - location) * (x - location) / scale2;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi * scale2) -
         0.5 * (nu + 1.0) * std::log1p(z2 / nu);
}

}  // namespace monomvn
