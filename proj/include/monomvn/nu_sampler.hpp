#pragma once

#include "monomvn/rng.hpp"

#include <Eigen/Dense>

namespace monomvn {

/// eta = 0.5 * sum(log w + 1/w) + theta for latent scales w = omega^2.
double nu_eta(const Eigen::VectorXd& omega2, double theta);

/// Unnormalized log conditional of the degrees of freedom given n latent
/// scales summarized by eta.
double nu_log_density(double nu, double eta, double n);

/// Left side of the optimal-envelope equation; decreasing in nu.
double nu_root_function(double nu, double eta, double n);

/// Scale of the exponential envelope: root of nu_root_function.
double nu_envelope_scale(double eta, double n);

/// Log acceptance probability of a proposal nu under the envelope with mean nu_star.
double nu_log_accept(double nu, double nu_star, double eta, double n);

struct NuDrawInfo {
  double nu_star = 0.0;
  int attempts = 0;
};

/// Exact rejection draw; throws NumericError after max_attempts.
double draw_nu(Rng& rng, double eta, double n, NuDrawInfo* info = nullptr, int max_attempts = 10000);

}  // namespace monomvn
