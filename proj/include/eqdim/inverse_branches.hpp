#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqdim/map_model.hpp"
#include "eqdim/sampler.hpp"

namespace eqdim {

// Per-depth record of the certified-branch schedule. Step n inverts f over
// the ball B(x_{-n}, r_n) onto a neighbourhood of x_{-n-1}.
struct ScheduleEntry {
  int n = 0;
  double r = 0.0;           // r_n = alpha_n A1 e^{-(n+1)eps} / (C M_n^{2k+1})
  double r_smoothed = 0.0;  // running minimum, nonincreasing
  double alpha = 0.0;       // min{1, ||df||, ||df^-1||, Jac f} at x_{-n-1}
  double m_hat = 0.0;       // probe-ball estimate of 1 + derivative data sup
  // filled by certification:
  double lip_g = 0.0;
  double lip_f = 0.0;
  double jac_min = 0.0;
  double lip_g_bound = 0.0;   // ||df(x_{-n-1})^-1|| e^{eps/2} (1+tol)
  double lip_f_bound = 0.0;   // ||df(x_{-n-1})|| e^{eps/2} (1+tol)
  double jac_min_bound = 0.0; // Jac f(x_{-n-1}) e^{-eps/2} (1-tol)
  int failed_probes = 0;
  bool newton_diverged = false;
  bool pass = false;
};

struct RadiusSchedule {
  double eps = 0.0;
  double a1_hat = 0.0;   // min over n of dist(x_{-n}, J) e^{n eps} / 2, clamped to (0,1]
  double c_const = 0.0;  // 1.01 * max{e^{eps/2}, (1 - e^{-eps/2})^-1}
  std::vector<ScheduleEntry> entries;
};

// Radii r_n and intermediates along a backward orbit. Requires
// eps < chi_1_hat / 10 (the fixed eps must be well below the smallest
// exponent); throws OrbitTooCloseToJ when A1 underflows 1e-13.
RadiusSchedule radius_schedule(const MapModel& map, const BackwardOrbit& orbit, double eps);

struct CertifyOptions {
  int probes_per_depth = 50;
  double tolerance = 0.05;           // slack on the Lipschitz/Jacobian bounds
  int composed_probes = 10;
  int volume_samples = 1000;         // Monte Carlo points for the volume bound; 0 disables
  double newton_tol = 1e-9;
  int newton_max_iter = 30;
};

// Numerical certificate for the quantitative inverse branches along one
// orbit: per-depth branch existence by Newton continuation, empirical
// Lipschitz/Jacobian controls, the composed branch f^{-n} on B(x_0, r_hat),
// the comparison-ball inclusion, and the Monte Carlo volume decay bound.
struct InverseBranchCertificate {
  std::uint64_t orbit_seed = 0;
  double eps = 0.0;
  double a1_hat = 0.0;
  std::vector<ScheduleEntry> schedule;
  int max_certified_depth = 0;  // consecutive passing steps from n = 0
  double rho_hat = 1.0;         // fitted slow-decay exponent of r_n
  double eta_hat = 0.0;         // fitted intercept: log r_n >= log eta - 3 rho eps n
  double composed_radius = 0.0; // r_hat for the composed branch at x_0
  double composed_identity_error = 1.0;  // max dist(f^n(g_n q), q) over probes
  bool composed_ok = false;
  double c_hat = 1.0;           // empirical comparison constant of the inclusion
  bool inclusion_ok = false;    // B(x_{-n}, s/C e^{-n(chi_k + eps)}) inside g_n B(x_0, s)
  double kappa_hat = 1.0;
  double sigma_hat = 0.0;       // orbit estimate of Sigma
  double chi_k_hat = 0.0;       // orbit estimate of chi_k
  std::vector<double> mc_volumes;     // per depth 1..max_certified_depth
  std::vector<double> volume_bounds;  // kappa_hat vol(B) e^{-n(2 Sigma - eps)}
  bool volume_ok = false;
};

InverseBranchCertificate certify_branches(const MapModel& map, const BackwardOrbit& orbit,
                                          const RadiusSchedule& schedule,
                                          const CertifyOptions& options = {});

enum class SlowSelector {
  dist_to_J,
  min_derivative_data,  // min{1, ||df||, ||df^-1||, Jac f}
  op_norm,
  inv_norm,
  jacobian,
};

// Envelope test V1 e^{n(chi-eps)} <= prod u(x_{-j}) <= V2 e^{n(chi+eps)}.
// V1/V2 are fitted over the whole orbit; violations counts breaches on the
// second half when the envelopes are frozen from the first half.
struct SlowFunctionCheck {
  double eps = 0.0;
  double chi_hat = 0.0;  // empirical integral of log u
  double v1_hat = 1.0;   // in (0,1]
  double v2_hat = 1.0;   // >= 1
  int violations = 0;
  int depths_tested = 0;
};

SlowFunctionCheck slow_variation_check(const MapModel& map, const BackwardOrbit& orbit,
                                       SlowSelector selector, double eps);

// Same check for an arbitrary positive orbit function (used by tests).
SlowFunctionCheck slow_variation_check_fn(const std::vector<double>& u_values, double eps);

std::string certificate_to_jsonl(const InverseBranchCertificate& cert,
                                 const std::string& map_id);

}  // namespace eqdim
