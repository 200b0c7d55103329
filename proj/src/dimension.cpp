#include "eqdim/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "eqdim/errors.hpp"
#include "eqdim/stats.hpp"

namespace eqdim {

std::vector<double> RadiiSchedule::radii() const {
  std::vector<double> out(static_cast<std::size_t>(n_radii));
  for (int n = 0; n < n_radii; ++n) {
    out[static_cast<std::size_t>(n)] = rho0 * std::exp(-n * h);
  }
  return out;
}

RadiiSchedule default_radii(const SampleCloud& cloud) {
  RadiiSchedule s;
  const double diam = std::max(support_diameter(cloud), 1e-6);
  s.rho0 = 0.2 * diam;
  s.h = 0.25;
  s.n_radii = 16;
  return s;
}

double young_deviation(const RadiiSchedule& schedule, int n) {
  const double ln = std::log(schedule.rho0) - n * schedule.h;
  const double lnn = std::log(schedule.rho0) - (n + 1) * schedule.h;
  return std::abs(lnn / ln - 1.0);
}

double young_tail_deviation(const RadiiSchedule& schedule) {
  return young_deviation(schedule, schedule.n_radii - 2);
}

LocalDimension local_dimension_at(const SampleCloud& cloud, const ProjectivePoint& x,
                                  const RadiiSchedule& schedule, int exclude_index) {
  const auto radii = schedule.radii();
  const long total = static_cast<long>(cloud.points.size()) - (exclude_index >= 0 ? 1 : 0);
  if (total <= 0) throw ConfigError("local_dimension_at on an empty cloud");

  // One distance pass, then cumulative counts per radius.
  std::vector<long> counts(radii.size(), 0);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (static_cast<int>(i) == exclude_index) continue;
    const double d = chordal_distance(cloud.points[i], x);
    for (std::size_t r = 0; r < radii.size(); ++r) {
      if (d <= radii[r]) {
        ++counts[r];
      } else {
        break;  // radii are decreasing
      }
    }
  }

  int rich = 0;
  for (long c : counts) {
    if (c >= 10) ++rich;
  }
  if (rich < 3) {
    throw InsufficientMass("fewer than 3 radii hold at least 10 cloud points");
  }

  std::vector<double> xs, ys, ratios;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    if (counts[r] < 1) continue;
    const double mass = static_cast<double>(counts[r]) / static_cast<double>(total);
    xs.push_back(std::log(radii[r]));
    ys.push_back(std::log(mass));
    ratios.push_back(std::log(mass) / std::log(radii[r]));
  }
  const LinearFit fit = linear_fit(xs, ys);
  LocalDimension out;
  out.slope = fit.slope;
  out.r2 = fit.r2;
  out.radii_used = static_cast<int>(xs.size());
  out.min_ratio = *std::min_element(ratios.begin(), ratios.end());
  out.max_ratio = *std::max_element(ratios.begin(), ratios.end());
  return out;
}

std::vector<std::pair<double, double>> log_mass_profile(const SampleCloud& cloud,
                                                        const ProjectivePoint& x,
                                                        const RadiiSchedule& schedule,
                                                        int exclude_index) {
  std::vector<std::pair<double, double>> out;
  const long total = static_cast<long>(cloud.points.size()) - (exclude_index >= 0 ? 1 : 0);
  for (double rho : schedule.radii()) {
    const double mass = ball_mass(cloud, x, rho, exclude_index);
    if (mass * static_cast<double>(total) < 0.5) continue;
    out.emplace_back(std::log(rho), std::log(mass));
  }
  return out;
}

namespace {

DimensionEstimate aggregate_local_slope(const SampleCloud& cloud, int n_centers,
                                        const RadiiSchedule& schedule, std::uint64_t rng_seed) {
  RngStream rng = RngStream::derive(rng_seed, "dim-centers", 0);
  DimensionEstimate est;
  est.schedule = schedule;
  est.method = DimMethod::local_slope;
  est.reference_count = cloud.count();

  const int m = cloud.count();
  int dropped = 0;
  for (int c = 0; c < n_centers; ++c) {
    const int idx = rng.uniform_int(m);
    try {
      const LocalDimension ld =
          local_dimension_at(cloud, cloud.points[static_cast<std::size_t>(idx)], schedule, idx);
      est.local_dims.push_back(ld.slope);
    } catch (const InsufficientMass&) {
      ++dropped;
    }
  }
  est.centers_dropped = dropped;
  if (dropped * 2 > n_centers) {
    throw InsufficientMass("more than half of the dimension centers were dropped");
  }
  est.dim_hat = median(est.local_dims);
  RngStream boot = RngStream::derive(rng_seed, "dim-bootstrap", 0);
  est.ci = bootstrap_median_ci(est.local_dims, 500, 0.90, boot);
  return est;
}

DimensionEstimate aggregate_correlation(const SampleCloud& cloud,
                                        const RadiiSchedule& schedule) {
  DimensionEstimate est;
  est.schedule = schedule;
  est.method = DimMethod::correlation;
  est.reference_count = cloud.count();

  const int m_full = cloud.count();
  const int m = std::min(2000, m_full);
  const int stride = std::max(1, m_full / m);
  std::vector<const ProjectivePoint*> pts;
  for (int i = 0; i < m_full && static_cast<int>(pts.size()) < m; i += stride) {
    pts.push_back(&cloud.points[static_cast<std::size_t>(i)]);
  }
  const int n = static_cast<int>(pts.size());

  const auto radii = schedule.radii();
  constexpr int kBlocks = 20;
  // pair counts per radius, plus per-block incidence for the jackknife
  std::vector<long> pair_counts(radii.size(), 0);
  std::vector<std::vector<long>> block_counts(radii.size(),
                                              std::vector<long>(kBlocks, 0));
  for (int i = 0; i < n; ++i) {
    const int bi = i * kBlocks / n;
    for (int j = i + 1; j < n; ++j) {
      const int bj = j * kBlocks / n;
      const double d = chordal_distance(*pts[static_cast<std::size_t>(i)], *pts[static_cast<std::size_t>(j)]);
      for (std::size_t r = 0; r < radii.size(); ++r) {
        if (d <= radii[r]) {
          ++pair_counts[r];
          ++block_counts[r][static_cast<std::size_t>(bi)];
          if (bj != bi) ++block_counts[r][static_cast<std::size_t>(bj)];
        } else {
          break;
        }
      }
    }
  }

  const double total_pairs = 0.5 * n * (n - 1.0);
  std::vector<double> xs, ys;
  std::vector<std::size_t> used;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    if (pair_counts[r] < 10) continue;
    xs.push_back(std::log(radii[r]));
    ys.push_back(std::log(static_cast<double>(pair_counts[r]) / total_pairs));
    used.push_back(r);
  }
  if (xs.size() < 3) throw InsufficientMass("too few radii with pair counts >= 10");
  const LinearFit fit = linear_fit(xs, ys);
  est.dim_hat = fit.slope;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    est.local_dims.push_back((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]));
  }

  // Delete-one-block jackknife for the interval.
  std::vector<double> jack;
  for (int b = 0; b < kBlocks; ++b) {
    const int nb = n / kBlocks + (b < n % kBlocks ? 1 : 0);
    const double rem_pairs = 0.5 * (n - nb) * (n - nb - 1.0);
    std::vector<double> jx, jy;
    for (std::size_t u = 0; u < used.size(); ++u) {
      const long c = pair_counts[used[u]] - block_counts[used[u]][static_cast<std::size_t>(b)];
      if (c < 5) continue;
      jx.push_back(std::log(radii[used[u]]));
      jy.push_back(std::log(static_cast<double>(c) / rem_pairs));
    }
    if (jx.size() >= 3) jack.push_back(linear_fit(jx, jy).slope);
  }
  double se = 0.0;
  if (jack.size() > 2) {
    const double jm = mean(jack);
    double s = 0.0;
    for (double v : jack) s += (v - jm) * (v - jm);
    se = std::sqrt(s * (static_cast<double>(jack.size()) - 1.0) / static_cast<double>(jack.size()));
  }
  est.ci = {est.dim_hat - 1.645 * se, est.dim_hat + 1.645 * se};
  return est;
}

DimensionEstimate aggregate_box_count(const SampleCloud& cloud,
                                      const RadiiSchedule& schedule) {
  DimensionEstimate est;
  est.schedule = schedule;
  est.method = DimMethod::box_count;
  est.reference_count = cloud.count();

  const int m_full = cloud.count();
  const int m = std::min(4096, m_full);
  const int stride = std::max(1, m_full / m);

  const auto cover_count = [&](double delta, int offset) {
    std::vector<const ProjectivePoint*> centers;
    for (int i = offset; i < m_full; i += stride) {
      const ProjectivePoint& p = cloud.points[static_cast<std::size_t>(i)];
      bool covered = false;
      for (const auto* c : centers) {
        if (chordal_distance(*c, p) <= delta) {
          covered = true;
          break;
        }
      }
      if (!covered) centers.push_back(&p);
    }
    return static_cast<long>(centers.size());
  };

  const auto radii = schedule.radii();
  const long n_sub = static_cast<long>((m_full + stride - 1) / stride);
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    const long c = cover_count(radii[r], 0);
    // drop saturated scales where the covering count tracks the sample size
    if (c < 2 || c > n_sub / 4) continue;
    xs.push_back(-std::log(radii[r]));
    ys.push_back(std::log(static_cast<double>(c)));
  }
  if (xs.size() < 3) throw InsufficientMass("too few usable covering scales");
  const LinearFit fit = linear_fit(xs, ys);
  est.dim_hat = fit.slope;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    est.local_dims.push_back((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]));
  }

  // Spread over stride offsets stands in for a resampling interval.
  std::vector<double> reps;
  const int n_reps = std::min(6, stride);
  for (int rep = 0; rep < n_reps; ++rep) {
    std::vector<double> rx, ry;
    for (std::size_t r = 0; r < radii.size(); ++r) {
      const long c = cover_count(radii[r], rep);
      if (c < 2 || c > n_sub / 4) continue;
      rx.push_back(-std::log(radii[r]));
      ry.push_back(std::log(static_cast<double>(c)));
    }
    if (rx.size() >= 3) reps.push_back(linear_fit(rx, ry).slope);
  }
  double se = reps.size() > 1 ? std::sqrt(sample_variance(reps) / static_cast<double>(reps.size()))
                              : 0.05;
  est.ci = {est.dim_hat - 1.645 * se, est.dim_hat + 1.645 * se};
  return est;
}

}  // namespace

DimensionEstimate aggregate_dimension(const SampleCloud& cloud, int n_centers,
                                      const RadiiSchedule& schedule, DimMethod method,
                                      std::uint64_t rng_seed) {
  if (method == DimMethod::local_slope && n_centers < 50) {
    throw ConfigError("aggregate_dimension needs n_centers >= 50");
  }
  DimensionEstimate est;
  switch (method) {
    case DimMethod::local_slope:
      est = aggregate_local_slope(cloud, n_centers, schedule, rng_seed);
      break;
    case DimMethod::correlation:
      est = aggregate_correlation(cloud, schedule);
      break;
    case DimMethod::box_count:
      est = aggregate_box_count(cloud, schedule);
      break;
  }
  const double dmax = 2.0 * cloud.seed_point.dim();
  est.dim_hat = std::clamp(est.dim_hat, 0.0, dmax);
  est.ci.first = std::min(est.ci.first, est.dim_hat);
  est.ci.second = std::max(est.ci.second, est.dim_hat);
  return est;
}

BoundsVerdict theorem_bounds(int k, int d_t, double sigma, double chi_k,
                             double sigma_stderr, double rho_hat) {
  if (!(chi_k > 0.0)) throw ConfigError("theorem_bounds needs chi_k > 0");
  if (d_t < 2) throw ConfigError("theorem_bounds needs d_t >= 2");
  const double log_dt = std::log(static_cast<double>(d_t));
  if (2.0 * sigma < log_dt - 3.0 * 2.0 * sigma_stderr) {
    throw HypothesisViolation("2 Sigma < log d_t beyond 3 sigma");
  }
  BoundsVerdict v;
  v.lower = log_dt / chi_k;
  v.upper = 2.0 * k - (2.0 * sigma - log_dt) / chi_k;
  for (int i = 1; i <= 10; ++i) {
    const double eps = 0.01 * i;
    const double alpha = 2.0 * k - (2.0 * sigma - log_dt - 2.0 * k * rho_hat * eps) /
                                       (chi_k + (rho_hat + 2.0) * eps);
    v.alpha_eps_curve.emplace_back(eps, alpha);
  }
  return v;
}

BoundsVerdict verify_theorem(const MapModel& map, const LyapunovEstimate& lyap,
                             const DimensionEstimate& dim, double rho_hat) {
  const double chi_k = lyap.chi.back();
  BoundsVerdict v = theorem_bounds(map.dim(), map.topological_degree(), lyap.sigma, chi_k,
                                   lyap.sigma_stderr, rho_hat);
  v.dim_hat = dim.dim_hat;
  const double log_dt = std::log(static_cast<double>(map.topological_degree()));
  const double se_chik = lyap.chi_stderr.back();
  const double se_lower = log_dt / (chi_k * chi_k) * se_chik;
  const double se_upper = std::sqrt(std::pow(2.0 * lyap.sigma_stderr / chi_k, 2) +
                                    std::pow((2.0 * lyap.sigma - log_dt) / (chi_k * chi_k) * se_chik, 2));
  const double ci_halfwidth = 0.5 * (dim.ci.second - dim.ci.first);
  v.slack = std::max(ci_halfwidth, 3.0 * std::max(se_lower, se_upper));
  v.pass_lower = v.dim_hat >= v.lower - v.slack;
  v.pass_upper = v.dim_hat <= v.upper + v.slack;
  return v;
}

MinorationReport minoration_check(const MapModel& map, const SampleCloud& cloud,
                                  const std::vector<ProjectivePoint>& orbit_starts,
                                  double chi_k, double eps, double rho_hat, int n_max) {
  MinorationReport report;
  report.n_max = n_max;
  if (orbit_starts.size() < 4) throw ConfigError("minoration_check needs at least 4 orbits");
  const double d_t = static_cast<double>(map.topological_degree());
  const double m = static_cast<double>(cloud.count());

  const auto delta = [&](int n) {
    return std::exp(-n * (chi_k + eps)) * std::exp(-n * (rho_hat + 1.0) * eps);
  };
  const auto threshold = [&](int n) {
    const double p = std::pow(d_t, -n);
    return p + 5.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) / m);
  };

  const std::size_t half = orbit_starts.size() / 2;

  // Calibrate sigma_hat on the training half: the largest scale factor that
  // keeps every training mass below its threshold.
  double sigma_hat = 1.0;
  for (std::size_t i = 0; i < half; ++i) {
    for (int n = 1; n <= n_max; ++n) {
      double lo = 0.0, hi = sigma_hat;
      if (ball_mass(cloud, orbit_starts[i], hi * delta(n)) <= threshold(n)) continue;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ball_mass(cloud, orbit_starts[i], mid * delta(n)) <= threshold(n)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      sigma_hat = std::max(lo, 1e-6);
    }
  }
  report.sigma_hat = sigma_hat;

  bool pass = true;
  double worst = -std::numeric_limits<double>::infinity();
  int tested = 0;
  for (std::size_t i = half; i < orbit_starts.size(); ++i) {
    ++tested;
    for (int n = 1; n <= n_max; ++n) {
      const double mass = ball_mass(cloud, orbit_starts[i], sigma_hat * delta(n));
      const double excess = mass - threshold(n);
      worst = std::max(worst, excess);
      if (excess > 0.0) pass = false;
    }
  }
  report.tested_orbits = tested;
  report.pass = pass;
  report.worst_excess = worst;
  return report;
}

std::string dimension_to_json(const DimensionEstimate& est, const std::string& map_id) {
  nlohmann::json j;
  j["map_id"] = map_id;
  switch (est.method) {
    case DimMethod::local_slope: j["method"] = "local_slope"; break;
    case DimMethod::correlation: j["method"] = "correlation"; break;
    case DimMethod::box_count: j["method"] = "box_count"; break;
  }
  j["dim_hat"] = est.dim_hat;
  j["ci"] = {est.ci.first, est.ci.second};
  j["reference_count"] = est.reference_count;
  j["centers_dropped"] = est.centers_dropped;
  j["radii"] = {{"rho0", est.schedule.rho0}, {"h", est.schedule.h}, {"n_radii", est.schedule.n_radii}};
  // histogram of local dimensions over 20 bins
  if (!est.local_dims.empty()) {
    const auto [mn, mx] = std::minmax_element(est.local_dims.begin(), est.local_dims.end());
    const double lo = *mn, hi = std::max(*mx, *mn + 1e-9);
    std::vector<int> bins(20, 0);
    for (double v : est.local_dims) {
      int b = static_cast<int>((v - lo) / (hi - lo) * 20.0);
      b = std::clamp(b, 0, 19);
      ++bins[static_cast<std::size_t>(b)];
    }
    j["local_dims_histogram"] = {{"lo", lo}, {"hi", hi}, {"counts", bins}};
  }
  return j.dump(2);
}

std::string verdict_to_json(const BoundsVerdict& verdict, const std::string& map_id) {
  nlohmann::json j;
  j["map_id"] = map_id;
  j["lower"] = verdict.lower;
  j["upper"] = verdict.upper;
  j["dim_hat"] = verdict.dim_hat;
  j["pass_lower"] = verdict.pass_lower;
  j["pass_upper"] = verdict.pass_upper;
  j["slack"] = verdict.slack;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [eps, alpha] : verdict.alpha_eps_curve) {
    curve.push_back({{"eps", eps}, {"alpha_eps", alpha}});
  }
  j["alpha_eps_curve"] = curve;
  return j.dump(2);
}

}  // namespace eqdim
