#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eqdim/lyapunov.hpp"
#include "eqdim/map_model.hpp"
#include "eqdim/sampler.hpp"

namespace eqdim {

// Geometric radii rho_n = rho0 e^{-n h}. Young's ratio condition
// log rho_{n+1} / log rho_n -> 1 holds in the fine-radius tail of any such
// schedule; young_tail_deviation measures it at the end of the range.
struct RadiiSchedule {
  double rho0 = 0.2;
  double h = 0.25;
  int n_radii = 16;

  std::vector<double> radii() const;
};

RadiiSchedule default_radii(const SampleCloud& cloud);

// |log rho_{n+1} / log rho_n - 1| at step n.
double young_deviation(const RadiiSchedule& schedule, int n);
// Deviation at the deepest step of the schedule.
double young_tail_deviation(const RadiiSchedule& schedule);

struct LocalDimension {
  double slope = 0.0;
  double r2 = 0.0;
  int radii_used = 0;
  double min_ratio = 0.0;  // min over radii of log mass / log rho
  double max_ratio = 0.0;
};

// Least-squares slope of log mu(B(x, rho)) against log rho over the schedule
// radii. Throws InsufficientMass when fewer than 3 radii hold >= 10 points.
// exclude_index >= 0 implements leave-one-out when x is a cloud point.
LocalDimension local_dimension_at(const SampleCloud& cloud, const ProjectivePoint& x,
                                  const RadiiSchedule& schedule, int exclude_index = -1);

// (log rho, log mass) pairs at x over the schedule radii with nonzero mass.
std::vector<std::pair<double, double>> log_mass_profile(const SampleCloud& cloud,
                                                        const ProjectivePoint& x,
                                                        const RadiiSchedule& schedule,
                                                        int exclude_index = -1);

enum class DimMethod { local_slope, correlation, box_count };

struct DimensionEstimate {
  std::vector<double> local_dims;
  double dim_hat = 0.0;
  std::pair<double, double> ci{0.0, 0.0};  // bootstrap 90% interval
  RadiiSchedule schedule;
  int reference_count = 0;
  DimMethod method = DimMethod::local_slope;
  int centers_dropped = 0;
};

// local_slope: median of per-center slopes with a bootstrap interval.
// correlation: Grassberger-Procaccia pair-correlation slope.
// box_count: greedy covering counts regressed against -log radius.
DimensionEstimate aggregate_dimension(const SampleCloud& cloud, int n_centers,
                                      const RadiiSchedule& schedule, DimMethod method,
                                      std::uint64_t rng_seed = 17);

struct BoundsVerdict {
  double lower = 0.0;  // log d_t / chi_k
  double upper = 0.0;  // 2k - (2 Sigma - log d_t) / chi_k
  double dim_hat = 0.0;
  bool pass_lower = false;
  bool pass_upper = false;
  double slack = 0.0;
  std::vector<std::pair<double, double>> alpha_eps_curve;  // (eps, alpha_eps)
};

// Exact arithmetic on the estimated inputs. Throws HypothesisViolation when
// 2 Sigma < log d_t beyond 3 sigma_stderr. rho_hat feeds the reported
// alpha_eps curve (eps_0 = 0).
BoundsVerdict theorem_bounds(int k, int d_t, double sigma, double chi_k,
                             double sigma_stderr = 0.0, double rho_hat = 1.0);

BoundsVerdict verify_theorem(const MapModel& map, const LyapunovEstimate& lyap,
                             const DimensionEstimate& dim, double rho_hat = 1.0);

// Ball-mass decay along certified orbits: mu(B(x_0, sigma_hat delta_n))
// must stay below d_t^{-n} (plus 5 standard errors) for n <= n_max, with
// delta_n = e^{-n(chi_k + eps)} e^{-n(rho_hat + 1) eps}. sigma_hat is
// calibrated on the first half of the orbits and tested on the rest.
struct MinorationReport {
  double sigma_hat = 0.0;
  int n_max = 10;
  bool pass = false;
  int tested_orbits = 0;
  double worst_excess = 0.0;  // max over test set of mass - threshold
};

MinorationReport minoration_check(const MapModel& map, const SampleCloud& cloud,
                                  const std::vector<ProjectivePoint>& orbit_starts,
                                  double chi_k, double eps, double rho_hat, int n_max = 10);

std::string dimension_to_json(const DimensionEstimate& est, const std::string& map_id);
std::string verdict_to_json(const BoundsVerdict& verdict, const std::string& map_id);

}  // namespace eqdim
