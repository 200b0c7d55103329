#include "eqdim/inverse_branches.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "eqdim/errors.hpp"
#include "eqdim/rng.hpp"
#include "eqdim/stats.hpp"

namespace eqdim {

namespace {

double capped_inv_norm(const TangentMatrix& d) { return std::min(d.inv_norm, 1e12); }

// Finite-difference estimate of the second-derivative data of f and of the
// inverse branch at x: the variation per unit chordal distance of the
// largest singular value of df (for d^2 f) and of dg = df^{-1} (for
// d^2 f^{-1}). Singular values are frame-free, so chart changes between the
// probe pair cannot pollute the difference. A stand-in for the paper's sup;
// the certificate validates the resulting bounds directly, so only the
// scale matters here.
struct SecondDerivativeEstimate {
  double d2f = 0.0;
  double d2g = 0.0;
};

SecondDerivativeEstimate second_derivative_estimate(const MapModel& map,
                                                    const ProjectivePoint& x) {
  const TangentFrame frame = tangent_frame(x);
  const double h = 1e-5;
  SecondDerivativeEstimate est;
  for (int dir = 0; dir < frame.k; ++dir) {
    const auto& u = frame.basis[static_cast<std::size_t>(dir)];
    try {
      const TangentMatrix plus = map.differential(geodesic_point(x, u, h));
      std::array<Complex, 3> nu{};
      for (int i = 0; i < 3; ++i) nu[static_cast<std::size_t>(i)] = -u[static_cast<std::size_t>(i)];
      const TangentMatrix minus = map.differential(geodesic_point(x, nu, h));
      est.d2f = std::max(est.d2f, std::abs(plus.op_norm - minus.op_norm) / (2.0 * h));
      est.d2g = std::max(est.d2g,
                         std::abs(capped_inv_norm(plus) - capped_inv_norm(minus)) / (2.0 * h));
    } catch (const AllComponentsVanish&) {
      est.d2f = 1e12;
      est.d2g = 1e12;
    }
  }
  return est;
}

struct OrbitExponents {
  double chi1 = 0.0;   // - mean log ||df^-1||
  double chik = 0.0;   // mean log ||df||
  double sigma = 0.0;  // (1/2) mean log Jac
  std::vector<double> log_op;   // at x_{-1}, x_{-2}, ...
  std::vector<double> log_inv;
  std::vector<double> log_jac;
};

OrbitExponents orbit_exponents(const MapModel& map, const BackwardOrbit& orbit) {
  OrbitExponents oe;
  const int depth = orbit.depth();
  for (int j = 1; j <= depth; ++j) {
    const TangentMatrix d = map.differential(orbit.at_depth(j));
    oe.log_op.push_back(std::log(std::max(d.op_norm, 1e-300)));
    oe.log_inv.push_back(std::log(std::max(capped_inv_norm(d), 1e-300)));
    oe.log_jac.push_back(std::log(std::max(d.fs_jacobian, 1e-300)));
  }
  oe.chi1 = -mean(oe.log_inv);
  oe.chik = mean(oe.log_op);
  oe.sigma = 0.5 * mean(oe.log_jac);
  return oe;
}

}  // namespace

RadiusSchedule radius_schedule(const MapModel& map, const BackwardOrbit& orbit, double eps) {
  if (orbit.depth() < 1) throw ConfigError("radius_schedule needs a nonempty orbit");
  const OrbitExponents oe = orbit_exponents(map, orbit);
  if (!(eps > 0.0) || eps >= oe.chi1 / 10.0) {
    throw ConfigError("eps must satisfy 0 < eps < chi_1_hat / 10");
  }

  RadiusSchedule schedule;
  schedule.eps = eps;

  double a1 = 1.0;
  for (int n = 0; n <= orbit.depth(); ++n) {
    a1 = std::min(a1, 0.5 * map.distance_to_J(orbit.at_depth(n)) * std::exp(n * eps));
  }
  if (a1 < 1e-13) {
    throw OrbitTooCloseToJ("A1 underflow: orbit unusable for certification");
  }
  schedule.a1_hat = a1;
  schedule.c_const =
      1.01 * std::max(std::exp(eps / 2.0), 1.0 / (1.0 - std::exp(-eps / 2.0)));

  const int k = map.dim();
  double running_min = std::numeric_limits<double>::infinity();
  double m_running_max = 0.0;
  for (int n = 0; n + 1 <= orbit.depth(); ++n) {
    ScheduleEntry e;
    e.n = n;
    const ProjectivePoint& below = orbit.at_depth(n + 1);
    const TangentMatrix d = map.differential(below);
    e.alpha = std::min({1.0, d.op_norm, capped_inv_norm(d), d.fs_jacobian});

    const double candidate = a1 * std::exp(-(n + 1) * eps);
    double max_op = d.op_norm;
    double max_inv = capped_inv_norm(d);
    SecondDerivativeEstimate d2 = second_derivative_estimate(map, below);
    // The sup runs over the region {dist(., J) >= A1 e^{-(n+1) eps}}; probes
    // that fall inside the excluded J-neighbourhood are skipped (the orbit
    // point itself always qualifies, with a factor 2 to spare).
    for (const auto& probe : probe_points_in_ball(below, 2.0 * candidate, 20)) {
      if (map.distance_to_J(probe) < candidate) continue;
      try {
        const TangentMatrix dp = map.differential(probe);
        max_op = std::max(max_op, dp.op_norm);
        max_inv = std::max(max_inv, capped_inv_norm(dp));
      } catch (const AllComponentsVanish&) {
        max_inv = 1e12;
      }
      const SecondDerivativeEstimate dp2 = second_derivative_estimate(map, probe);
      d2.d2f = std::max(d2.d2f, dp2.d2f);
      d2.d2g = std::max(d2.d2g, dp2.d2g);
    }
    // The paper's M_n is a sup over regions growing with n, hence
    // nondecreasing; the running max enforces that on the probe estimates.
    m_running_max = std::max(m_running_max, 1.0 + max_op + d2.d2f + max_inv + d2.d2g);
    e.m_hat = m_running_max;
    e.r = e.alpha * candidate / (schedule.c_const * std::pow(e.m_hat, 2 * k + 1));
    running_min = std::min(running_min, e.r);
    e.r_smoothed = running_min;
    schedule.entries.push_back(e);
  }
  return schedule;
}

InverseBranchCertificate certify_branches(const MapModel& map, const BackwardOrbit& orbit,
                                          const RadiusSchedule& schedule,
                                          const CertifyOptions& options) {
  InverseBranchCertificate cert;
  cert.orbit_seed = orbit.rng_seed;
  cert.eps = schedule.eps;
  cert.a1_hat = schedule.a1_hat;
  cert.schedule = schedule.entries;

  const double eps = schedule.eps;
  const OrbitExponents oe = orbit_exponents(map, orbit);
  cert.sigma_hat = oe.sigma;
  cert.chi_k_hat = oe.chik;

  // Per-depth branch certification (Lemma-style bounds b, c, d).
  bool chain_alive = true;
  for (auto& e : cert.schedule) {
    const ProjectivePoint& top = orbit.at_depth(e.n);
    const ProjectivePoint& below = orbit.at_depth(e.n + 1);
    const TangentMatrix d = map.differential(below);
    e.lip_g_bound = capped_inv_norm(d) * std::exp(eps / 2.0) * (1.0 + options.tolerance);
    e.lip_f_bound = d.op_norm * std::exp(eps / 2.0) * (1.0 + options.tolerance);
    e.jac_min_bound = d.fs_jacobian * std::exp(-eps / 2.0) * (1.0 - options.tolerance);
    if (!chain_alive || !(e.r > 0.0)) {
      e.pass = false;
      continue;
    }

    std::vector<ProjectivePoint> targets = probe_points_in_ball(top, e.r, options.probes_per_depth);
    targets.push_back(top);
    std::vector<ProjectivePoint> solved;
    solved.reserve(targets.size());
    int failed = 0;
    for (const auto& q : targets) {
      const NewtonResult nr =
          newton_inverse_step(map, q, below, options.newton_tol, options.newton_max_iter);
      if (!nr.converged) {
        ++failed;
        continue;
      }
      solved.push_back(nr.point);
    }
    e.failed_probes = failed;
    if (failed > 0) {
      e.newton_diverged = true;
      e.pass = false;
      chain_alive = false;  // certificate truncated, recorded rather than thrown
      continue;
    }

    double lip_g = 0.0;
    double lip_f = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      for (std::size_t j = i + 1; j < targets.size(); ++j) {
        const double dp = chordal_distance(targets[i], targets[j]);
        const double dw = chordal_distance(solved[i], solved[j]);
        if (dp > 1e-14 && dw > 1e-14) {
          lip_g = std::max(lip_g, dw / dp);
          lip_f = std::max(lip_f, dp / dw);
        }
      }
    }
    double jac_min = std::numeric_limits<double>::infinity();
    for (const auto& w : solved) jac_min = std::min(jac_min, map.fs_jacobian(w));
    e.lip_g = lip_g;
    e.lip_f = lip_f;
    e.jac_min = jac_min;
    e.pass = lip_g <= e.lip_g_bound && lip_f <= e.lip_f_bound && jac_min >= e.jac_min_bound;
    if (!e.pass) chain_alive = false;
  }

  int certified = 0;
  for (const auto& e : cert.schedule) {
    if (!e.pass) break;
    ++certified;
  }
  cert.max_certified_depth = certified;

  // Slow-decay fit over the certified prefix: log r_n >= log eta - 3 rho eps n.
  if (certified >= 3) {
    std::vector<double> xs, ys;
    for (int n = 0; n < certified; ++n) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(cert.schedule[static_cast<std::size_t>(n)].r));
    }
    const LinearFit fit = linear_fit(xs, ys);
    cert.rho_hat = std::max(1e-6, -fit.slope / (3.0 * eps));
    double eta_log = std::numeric_limits<double>::infinity();
    for (int n = 0; n < certified; ++n) {
      eta_log = std::min(eta_log, ys[static_cast<std::size_t>(n)] + 3.0 * cert.rho_hat * eps * n);
    }
    cert.eta_hat = std::exp(std::min(0.0, eta_log));
  } else {
    cert.rho_hat = 1.0;
    cert.eta_hat = certified > 0 ? cert.schedule[0].r : 0.0;
  }

  if (certified == 0) return cert;

  // Composed branch radius: pulling B(x_0, s) down stays inside every
  // certified ball when s <= r_n / prod_{j<n} lip_g_j.
  double r_hat = cert.schedule[0].r;
  double lip_prod = 1.0;
  for (int n = 0; n < certified; ++n) {
    r_hat = std::min(r_hat, cert.schedule[static_cast<std::size_t>(n)].r / lip_prod);
    lip_prod *= std::max(cert.schedule[static_cast<std::size_t>(n)].lip_g, 1e-14);
  }
  cert.composed_radius = r_hat;

  const int m = certified;
  auto descend = [&](const ProjectivePoint& q, int levels,
                     std::vector<ProjectivePoint>* trace) -> bool {
    ProjectivePoint v = q;
    for (int j = 1; j <= levels; ++j) {
      const NewtonResult nr = newton_inverse_step(map, v, orbit.at_depth(j),
                                                  options.newton_tol, options.newton_max_iter);
      if (!nr.converged) return false;
      v = nr.point;
      if (trace) trace->push_back(v);
    }
    return true;
  };

  // Composed-branch identity f^m (g_m q) = q on probe points.
  if (r_hat < 1e-13) {
    // ball below machine resolution: probing would be vacuous
    cert.composed_ok = false;
    cert.inclusion_ok = false;
    cert.volume_ok = false;
    return cert;
  }
  {
    auto probes = probe_points_in_ball(orbit.at_depth(0), r_hat, options.composed_probes);
    double worst = 0.0;
    bool all_ok = true;
    for (const auto& q : probes) {
      std::vector<ProjectivePoint> trace;
      if (!descend(q, m, &trace)) {
        all_ok = false;
        break;
      }
      const ProjectivePoint back = map.iterate(trace.back(), m);
      worst = std::max(worst, chordal_distance(back, q));
    }
    cert.composed_identity_error = all_ok ? worst : 1.0;
    cert.composed_ok = all_ok && worst <= 1e-7;
  }

  // Empirical comparison constant C and the inclusion
  // B(x_{-m}, s/C e^{-m(chi_k + eps)}) subset g_m(B(x_0, s)), verified
  // forward on probe points. C comes from the certified ball Lipschitz data:
  // C >= prod lip_f_j e^{-n(chi_k + eps)} makes the inner ball forward-stable.
  {
    double log_c1 = 0.0, log_c2 = 0.0;
    double sum_inv = 0.0, sum_lipf = 0.0;
    for (int n = 1; n <= m; ++n) {
      sum_inv += oe.log_inv[static_cast<std::size_t>(n - 1)];
      sum_lipf += std::log(std::max(cert.schedule[static_cast<std::size_t>(n - 1)].lip_f, 1e-300));
      log_c1 = std::max(log_c1, sum_inv + n * eps / 2.0 + n * (oe.chi1 - eps));
      log_c2 = std::max(log_c2, sum_lipf - n * (oe.chik + eps));
    }
    cert.c_hat = std::exp(std::max(log_c1, log_c2));
    const double inner = (r_hat / cert.c_hat) * std::exp(-m * (oe.chik + eps));
    bool ok = true;
    for (const auto& q : probe_points_in_ball(orbit.at_depth(m), inner, options.composed_probes)) {
      try {
        const ProjectivePoint forward = map.iterate(q, m);
        if (chordal_distance(forward, orbit.at_depth(0)) > r_hat) {
          ok = false;
          break;
        }
      } catch (const AllComponentsVanish&) {
        ok = false;
        break;
      }
    }
    cert.inclusion_ok = ok;
  }

  // Volume decay: vol g_n(B(x_0,s)) <= kappa vol(B) e^{-n(2 Sigma - eps)}.
  if (options.volume_samples > 0) {
    double log_c3 = 0.0;
    double sum_jac = 0.0;
    for (int n = 1; n <= m; ++n) {
      sum_jac += oe.log_jac[static_cast<std::size_t>(n - 1)];
      log_c3 = std::min(log_c3, sum_jac - n * eps / 2.0 - n * (2.0 * oe.sigma - eps));
    }
    cert.kappa_hat = std::exp(-log_c3);

    const double s = r_hat;
    const double vol_ball = std::pow(s, 2.0 * map.dim());
    const int nmc = options.volume_samples;
    RngStream rng = RngStream::derive(orbit.rng_seed, "volume-mc", 0);
    std::vector<std::vector<double>> inv_jac(static_cast<std::size_t>(m));
    int dropped = 0;
    for (int q = 0; q < nmc; ++q) {
      const ProjectivePoint sample = sample_in_ball(orbit.at_depth(0), s, rng);
      ProjectivePoint v = sample;
      double log_jac_acc = 0.0;
      bool ok = true;
      for (int j = 1; j <= m; ++j) {
        const NewtonResult nr = newton_inverse_step(map, v, orbit.at_depth(j),
                                                    options.newton_tol, options.newton_max_iter);
        if (!nr.converged) {
          ok = false;
          break;
        }
        v = nr.point;
        log_jac_acc += std::log(std::max(map.fs_jacobian(v), 1e-300));
        inv_jac[static_cast<std::size_t>(j - 1)].push_back(std::exp(-log_jac_acc));
      }
      if (!ok) ++dropped;
    }
    cert.mc_volumes.assign(static_cast<std::size_t>(m), 0.0);
    cert.volume_bounds.assign(static_cast<std::size_t>(m), 0.0);
    bool vol_ok = dropped < nmc / 10;
    for (int n = 1; n <= m; ++n) {
      const auto& vals = inv_jac[static_cast<std::size_t>(n - 1)];
      if (vals.empty()) {
        vol_ok = false;
        break;
      }
      const double mc = vol_ball * mean(vals);
      const double rel_se =
          vals.size() > 1 ? std::sqrt(sample_variance(vals) / static_cast<double>(vals.size())) /
                                std::max(mean(vals), 1e-300)
                          : 0.0;
      const double bound = cert.kappa_hat * vol_ball * std::exp(-n * (2.0 * oe.sigma - eps));
      cert.mc_volumes[static_cast<std::size_t>(n - 1)] = mc;
      cert.volume_bounds[static_cast<std::size_t>(n - 1)] = bound;
      if (mc > bound * (1.05 + 3.0 * rel_se)) vol_ok = false;
    }
    cert.volume_ok = vol_ok;
  } else {
    cert.volume_ok = true;
  }

  return cert;
}

SlowFunctionCheck slow_variation_check_fn(const std::vector<double>& u_values, double eps) {
  const int n_total = static_cast<int>(u_values.size());
  if (n_total < 2) throw ConfigError("slow_variation_check needs at least 2 orbit steps");

  std::vector<double> logs(u_values.size());
  for (std::size_t i = 0; i < u_values.size(); ++i) {
    logs[i] = std::log(std::max(u_values[i], 1e-300));
  }

  // Integrability diagnostic: the running mean of |log u| must not grow
  // superlinearly (doubling from the half-orbit mark flags it).
  {
    double acc = 0.0;
    double half_mean = 0.0;
    for (int n = 1; n <= n_total; ++n) {
      acc += std::abs(logs[static_cast<std::size_t>(n - 1)]);
      if (n == (n_total + 1) / 2) half_mean = acc / n;
    }
    const double full_mean = acc / n_total;
    if (half_mean > 1e-12 && full_mean > 2.0 * half_mean) {
      throw NonIntegrable("running mean of |log u| grows superlinearly");
    }
  }

  SlowFunctionCheck check;
  check.eps = eps;
  check.depths_tested = n_total;
  check.chi_hat = mean(logs);

  double s = 0.0;
  double log_v2 = 0.0, log_v1 = 0.0;
  double log_v2_train = 0.0, log_v1_train = 0.0;
  const int half = n_total / 2;
  std::vector<double> partial(static_cast<std::size_t>(n_total));
  for (int n = 1; n <= n_total; ++n) {
    s += logs[static_cast<std::size_t>(n - 1)];
    partial[static_cast<std::size_t>(n - 1)] = s;
    log_v2 = std::max(log_v2, s - n * (check.chi_hat + eps));
    log_v1 = std::min(log_v1, s - n * (check.chi_hat - eps));
    if (n <= half) {
      log_v2_train = std::max(log_v2_train, s - n * (check.chi_hat + eps));
      log_v1_train = std::min(log_v1_train, s - n * (check.chi_hat - eps));
    }
  }
  check.v2_hat = std::exp(log_v2);
  check.v1_hat = std::exp(log_v1);

  int violations = 0;
  for (int n = half + 1; n <= n_total; ++n) {
    const double sn = partial[static_cast<std::size_t>(n - 1)];
    const double upper = log_v2_train + n * (check.chi_hat + eps) + 1e-12;
    const double lower = log_v1_train + n * (check.chi_hat - eps) - 1e-12;
    if (sn > upper || sn < lower) ++violations;
  }
  check.violations = violations;
  return check;
}

SlowFunctionCheck slow_variation_check(const MapModel& map, const BackwardOrbit& orbit,
                                       SlowSelector selector, double eps) {
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(orbit.depth()));
  for (int j = 1; j <= orbit.depth(); ++j) {
    const ProjectivePoint& x = orbit.at_depth(j);
    double value = 1.0;
    switch (selector) {
      case SlowSelector::dist_to_J:
        value = map.distance_to_J(x);
        break;
      case SlowSelector::min_derivative_data: {
        const TangentMatrix d = map.differential(x);
        value = std::min({1.0, d.op_norm, capped_inv_norm(d), d.fs_jacobian});
        break;
      }
      case SlowSelector::op_norm:
        value = map.differential(x).op_norm;
        break;
      case SlowSelector::inv_norm:
        value = capped_inv_norm(map.differential(x));
        break;
      case SlowSelector::jacobian:
        value = map.fs_jacobian(x);
        break;
    }
    u.push_back(value);
  }
  return slow_variation_check_fn(u, eps);
}

std::string certificate_to_jsonl(const InverseBranchCertificate& cert,
                                 const std::string& map_id) {
  std::ostringstream out;
  for (const auto& e : cert.schedule) {
    nlohmann::json j;
    j["map_id"] = map_id;
    j["orbit_seed"] = cert.orbit_seed;
    j["n"] = e.n;
    j["r"] = e.r;
    j["r_smoothed"] = e.r_smoothed;
    j["alpha"] = e.alpha;
    j["m_hat"] = e.m_hat;
    j["lip_g"] = e.lip_g;
    j["lip_f"] = e.lip_f;
    j["jac_min"] = e.jac_min;
    j["pass"] = e.pass;
    out << j.dump() << "\n";
  }
  nlohmann::json summary;
  summary["map_id"] = map_id;
  summary["orbit_seed"] = cert.orbit_seed;
  summary["summary"] = true;
  summary["eps"] = cert.eps;
  summary["a1_hat"] = cert.a1_hat;
  summary["max_certified_depth"] = cert.max_certified_depth;
  summary["rho_hat"] = cert.rho_hat;
  summary["eta_hat"] = cert.eta_hat;
  summary["composed_radius"] = cert.composed_radius;
  summary["composed_identity_error"] = cert.composed_identity_error;
  summary["composed_ok"] = cert.composed_ok;
  summary["inclusion_ok"] = cert.inclusion_ok;
  summary["volume_ok"] = cert.volume_ok;
  summary["kappa_hat"] = cert.kappa_hat;
  summary["c_hat"] = cert.c_hat;
  out << summary.dump() << "\n";
  return out.str();
}

}  // namespace eqdim
