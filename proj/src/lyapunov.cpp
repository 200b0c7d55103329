#include "eqdim/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "eqdim/errors.hpp"
#include "eqdim/stats.hpp"

namespace eqdim {

namespace {

constexpr double kCriticalJacFloor = 1e-300;

// QR factorization of a k x k complex matrix by Gram-Schmidt; returns the
// positive diagonal of R and leaves Q in place of m.
std::array<double, 2> qr_in_place(std::array<std::array<Complex, 2>, 2>& m, int k) {
  std::array<double, 2> rdiag{0.0, 0.0};
  if (k == 1) {
    const double n = std::abs(m[0][0]);
    rdiag[0] = n;
    m[0][0] = n > 0 ? m[0][0] / n : Complex(1, 0);
    return rdiag;
  }
  // columns are (m[0][j], m[1][j])
  double n0 = std::sqrt(std::norm(m[0][0]) + std::norm(m[1][0]));
  rdiag[0] = n0;
  if (n0 > 0) {
    m[0][0] /= n0;
    m[1][0] /= n0;
  } else {
    m[0][0] = Complex(1, 0);
    m[1][0] = Complex(0, 0);
  }
  const Complex r01 = std::conj(m[0][0]) * m[0][1] + std::conj(m[1][0]) * m[1][1];
  m[0][1] -= r01 * m[0][0];
  m[1][1] -= r01 * m[1][0];
  double n1 = std::sqrt(std::norm(m[0][1]) + std::norm(m[1][1]));
  rdiag[1] = n1;
  if (n1 > 0) {
    m[0][1] /= n1;
    m[1][1] /= n1;
  } else {
    m[0][1] = -std::conj(m[1][0]);
    m[1][1] = std::conj(m[0][0]);
  }
  return rdiag;
}

std::array<std::array<Complex, 2>, 2> mat_mul2(const std::array<std::array<Complex, 2>, 2>& a,
                                               const std::array<std::array<Complex, 2>, 2>& b,
                                               int k) {
  std::array<std::array<Complex, 2>, 2> out{};
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      Complex s(0, 0);
      for (int l = 0; l < k; ++l) s += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * b[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
    }
  }
  return out;
}

}  // namespace

LyapunovEstimate cocycle_spectrum(const MapModel& map, const SampleCloud& cloud,
                                  int block_len) {
  if (cloud.count() < 100) throw ConfigError("cocycle_spectrum needs at least 100 samples");
  if (block_len < 1) throw ConfigError("cocycle block length must be >= 1");
  const int k = map.dim();

  std::vector<double> per_sample_sum;
  int discards = 0;
  std::vector<std::vector<double>> chi_raw(static_cast<std::size_t>(k));
  for (const auto& start : cloud.points) {
    std::array<std::array<Complex, 2>, 2> q{};
    for (int i = 0; i < k; ++i) q[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = Complex(1, 0);
    std::array<double, 2> acc{0.0, 0.0};
    ProjectivePoint x = start;
    bool ok = true;
    for (int step = 0; step < block_len; ++step) {
      const TangentMatrix d = map.differential(x);
      if (!(d.fs_jacobian > kCriticalJacFloor)) {
        ok = false;  // segment passes a critical point
        break;
      }
      auto m = mat_mul2(d.entries, q, k);
      const auto rdiag = qr_in_place(m, k);
      q = m;
      for (int i = 0; i < k; ++i) acc[static_cast<std::size_t>(i)] += std::log(rdiag[static_cast<std::size_t>(i)]);
      x = map.evaluate(x);
    }
    if (!ok) {
      ++discards;
      continue;
    }
    // QR diagonal order is descending; store ascending.
    for (int i = 0; i < k; ++i) {
      chi_raw[static_cast<std::size_t>(i)].push_back(acc[static_cast<std::size_t>(k - 1 - i)] / block_len);
    }
    per_sample_sum.push_back((acc[0] + (k == 2 ? acc[1] : 0.0)) / block_len);
  }

  if (discards > cloud.count() / 10) {
    throw TooManyDiscards("more than 10% of cocycle segments passed near the critical set");
  }

  LyapunovEstimate est;
  est.n_cocycle = block_len;
  est.n_samples = static_cast<int>(per_sample_sum.size());
  est.discards = discards;
  est.chi.resize(static_cast<std::size_t>(k));
  est.chi_stderr.resize(static_cast<std::size_t>(k));
  std::vector<std::pair<double, double>> ordered(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    ordered[static_cast<std::size_t>(i)] = {mean(chi_raw[static_cast<std::size_t>(i)]),
                                            batch_means_stderr(chi_raw[static_cast<std::size_t>(i)])};
  }
  std::sort(ordered.begin(), ordered.end());
  for (int i = 0; i < k; ++i) {
    est.chi[static_cast<std::size_t>(i)] = ordered[static_cast<std::size_t>(i)].first;
    est.chi_stderr[static_cast<std::size_t>(i)] = ordered[static_cast<std::size_t>(i)].second;
  }
  est.sigma = 0.0;
  for (double c : est.chi) est.sigma += c;
  est.sigma_stderr = batch_means_stderr(per_sample_sum);

  const auto jac = sum_exponents_from_jacobian(map, cloud);
  est.jacobian_sigma = jac.sigma;
  est.jacobian_sigma_stderr = jac.stderr_value;
  est.jacobian_discards = jac.discards;

  const double se_total = 3.0 * 2.0 * est.sigma_stderr;
  est.paper_inequality_ok =
      2.0 * est.sigma >= std::log(static_cast<double>(map.topological_degree())) - se_total;
  return est;
}

JacobianSumEstimate sum_exponents_from_jacobian(const MapModel& map,
                                                const SampleCloud& cloud) {
  if (cloud.count() < 100) throw ConfigError("sum_exponents needs at least 100 samples");
  std::vector<double> half_logs;
  half_logs.reserve(cloud.points.size());
  int discards = 0;
  for (const auto& p : cloud.points) {
    const double jac = map.fs_jacobian(p);
    if (!(jac > kCriticalJacFloor)) {
      ++discards;  // exact critical hit; the integral converges, spikes are statistical
      continue;
    }
    half_logs.push_back(0.5 * std::log(jac));
  }
  JacobianSumEstimate est;
  est.sigma = mean(half_logs);
  est.stderr_value = batch_means_stderr(half_logs);
  est.discards = discards;
  return est;
}

ExponentInequalityReport exponent_inequality_check(const MapModel& map,
                                                   const LyapunovEstimate& est) {
  ExponentInequalityReport report;
  const double d_t = static_cast<double>(map.topological_degree());
  const double lambda_km1 =
      map.dim() >= 2 ? map.dyn_degrees()[static_cast<std::size_t>(map.dim() - 2)] : 1.0;
  const double chi1 = est.chi.front();
  const double chi1_bound = 0.5 * std::log(d_t / lambda_km1);
  report.chi1_margin = chi1 - chi1_bound;
  report.chi1_ok = chi1 >= chi1_bound - 3.0 * est.chi_stderr.front();
  const double sum_bound = std::log(d_t);
  report.sum_margin = 2.0 * est.sigma - sum_bound;
  report.sum_ok = 2.0 * est.sigma >= sum_bound - 3.0 * 2.0 * est.sigma_stderr;
  return report;
}

double log_distance_integrability(const MapModel& map, const SampleCloud& cloud) {
  std::vector<double> vals;
  vals.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    const double d = std::max(map.distance_to_J(p), 1e-300);
    vals.push_back(std::abs(std::log(d)));
  }
  return mean(vals);
}

std::string lyapunov_to_json(const LyapunovEstimate& est, const std::string& map_id) {
  nlohmann::json j;
  j["map_id"] = map_id;
  j["chi"] = est.chi;
  j["stderr"] = est.chi_stderr;
  j["sigma"] = est.sigma;
  j["sigma_stderr"] = est.sigma_stderr;
  j["n_cocycle"] = est.n_cocycle;
  j["n_samples"] = est.n_samples;
  j["discards"] = est.discards;
  j["eps0"] = est.eps0;
  j["jacobian_sigma"] = est.jacobian_sigma;
  j["jacobian_sigma_stderr"] = est.jacobian_sigma_stderr;
  j["paper_inequality_ok"] = est.paper_inequality_ok;
  return j.dump(2);
}

}  // namespace eqdim
