#include "eqdim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eqdim {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
  return 0.5 * (hi + v[n / 2 - 1]);
}

double batch_means_stderr(const std::vector<double>& v, int n_batches) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const int b = std::min<int>(n_batches, static_cast<int>(n));
  std::vector<double> batch(static_cast<std::size_t>(b), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(b), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i * static_cast<std::size_t>(b) / n;
    batch[j] += v[i];
    counts[j] += 1;
  }
  for (int j = 0; j < b; ++j) {
    batch[static_cast<std::size_t>(j)] /= std::max(1, counts[static_cast<std::size_t>(j)]);
  }
  return std::sqrt(sample_variance(batch) / static_cast<double>(b));
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit fit;
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double d = static_cast<double>(n) * sxx - sx * sx;
  if (std::abs(d) < 1e-30) return fit;
  fit.slope = (static_cast<double>(n) * sxy - sx * sy) / d;
  fit.intercept = (sy - fit.slope * sx) / static_cast<double>(n);
  const double ss_tot = syy - sy * sy / static_cast<double>(n);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
  }
  fit.r2 = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::pair<double, double> bootstrap_median_ci(const std::vector<double>& v,
                                              int n_resamples, double coverage,
                                              RngStream& rng) {
  if (v.empty()) return {0.0, 0.0};
  std::vector<double> medians(static_cast<std::size_t>(n_resamples));
  std::vector<double> resample(v.size());
  for (int r = 0; r < n_resamples; ++r) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      resample[i] = v[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(v.size())))];
    }
    medians[static_cast<std::size_t>(r)] = median(resample);
  }
  std::sort(medians.begin(), medians.end());
  const double alpha = 0.5 * (1.0 - coverage);
  const auto at = [&](double q) {
    const double pos = q * (static_cast<double>(medians.size()) - 1.0);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= medians.size()) return medians.back();
    return medians[i] * (1.0 - frac) + medians[i + 1] * frac;
  };
  return {at(alpha), at(1.0 - alpha)};
}

namespace {

// Regularized lower incomplete gamma P(a, x), series and continued fraction.
double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}

}  // namespace

double chi2_sf(double x, int k) {
  if (x <= 0.0) return 1.0;
  return 1.0 - gamma_p(0.5 * static_cast<double>(k), 0.5 * x);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n != b.size() || n < 2) return 0.0;
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t pos = 0; pos < idx.size();) {
      std::size_t end = pos;
      while (end + 1 < idx.size() && v[idx[end + 1]] == v[idx[pos]]) ++end;
      const double avg = 0.5 * (static_cast<double>(pos) + static_cast<double>(end));
      for (std::size_t q = pos; q <= end; ++q) r[idx[q]] = avg;
      pos = end + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da < 1e-300 || db < 1e-300) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace eqdim
