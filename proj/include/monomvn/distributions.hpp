#pragma once

#include "monomvn/rng.hpp"

namespace monomvn {

/// Inverse Gaussian draw with the given mean and shape (Michael, Schucany & Haas).
double rinvgauss(Rng& rng, double mean, double shape);

/// Generalized inverse Gaussian draw with density proportional to
/// x^(lambda-1) exp(-(chi/x + psi*x)/2), x > 0.
///
/// Exact ratio-of-uniforms / rejection generator of Hoermann & Leydold (2014).
/// chi == 0 (lambda > 0) and psi == 0 (lambda < 0) reduce to gamma and
/// inverse-gamma draws; other boundary combinations are improper and throw.
double rgig(Rng& rng, double lambda, double chi, double psi);

/// Log of the unnormalized GIG density above.
double gig_log_kernel(double x, double lambda, double chi, double psi);

/// CDF of the inverse-gamma distribution with shape a and rate b.
double inv_gamma_cdf(double x, double shape, double rate);

/// Log density of a normal.
double normal_log_density(double x, double mean, double variance);

/// Log density of a Student-t location/scale family with `nu` degrees of freedom.
double student_t_log_density(double x, double location, double scale2, double nu);

}  // namespace monomvn
