#pragma once

#include <string>
#include <vector>

#include "eqdim/map_model.hpp"
#include "eqdim/sampler.hpp"

namespace eqdim {

// Estimated Lyapunov spectrum chi_1 <= ... <= chi_k of the equilibrium
// measure, with Sigma = chi_1 + ... + chi_k.
struct LyapunovEstimate {
  std::vector<double> chi;         // ascending
  std::vector<double> chi_stderr;  // batch-means standard errors
  double sigma = 0.0;              // sum of chi
  double sigma_stderr = 0.0;
  int n_cocycle = 0;  // block length N
  int n_samples = 0;  // samples actually used
  int discards = 0;   // segments dropped near the critical set
  double eps0 = 0.0;  // recorded N-dependence slack; never enforced
  // Independent route: Sigma = 1/2 * mean log Jac over the cloud.
  double jacobian_sigma = 0.0;
  double jacobian_sigma_stderr = 0.0;
  int jacobian_discards = 0;
  bool paper_inequality_ok = true;  // 2 Sigma >= log d_t - 3 stderr
};

struct JacobianSumEstimate {
  double sigma = 0.0;
  double stderr_value = 0.0;
  int discards = 0;
};

// Finite-N spectrum along forward orbits of cloud points: df is accumulated
// with a QR re-orthogonalization at every step and the diagonal log-averages
// give the exponents. Throws TooManyDiscards when more than 10% of the
// segments pass too close to the critical set.
LyapunovEstimate cocycle_spectrum(const MapModel& map, const SampleCloud& cloud,
                                  int block_len);

// Sigma = 1/2 * mean of log Jac f over the cloud (the 1/2 converts the real
// volume Jacobian integral 2*Sigma to Sigma).
JacobianSumEstimate sum_exponents_from_jacobian(const MapModel& map,
                                                const SampleCloud& cloud);

struct ExponentInequalityReport {
  bool chi1_ok = false;       // chi_1 >= 1/2 log(d_t / lambda_{k-1}) - 3 se
  bool sum_ok = false;        // 2 Sigma >= log d_t - 3 se
  double chi1_margin = 0.0;   // chi_1 - 1/2 log(d_t / lambda_{k-1})
  double sum_margin = 0.0;    // 2 Sigma - log d_t
};

ExponentInequalityReport exponent_inequality_check(const MapModel& map,
                                                   const LyapunovEstimate& est);

// Empirical mean of |log dist(x, J)| over the cloud; finite and stable for
// the shipped maps (the quasi-psh integrability surrogate).
double log_distance_integrability(const MapModel& map, const SampleCloud& cloud);

std::string lyapunov_to_json(const LyapunovEstimate& est, const std::string& map_id);

}  // namespace eqdim
