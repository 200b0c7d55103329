#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "eqdim/rng.hpp"

namespace eqdim {

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);
double median(std::vector<double> v);

// Standard error of the mean estimated from batch means (weakly dependent
// samples). Splits by index into n_batches contiguous batches.
double batch_means_stderr(const std::vector<double>& v, int n_batches = 20);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Percentile bootstrap interval for the median, resampling over entries.
std::pair<double, double> bootstrap_median_ci(const std::vector<double>& v,
                                              int n_resamples, double coverage,
                                              RngStream& rng);

// Upper tail P(X > x) of the chi-square distribution with k degrees of
// freedom, via the regularized incomplete gamma function.
double chi2_sf(double x, int k);

// Spearman rank correlation.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace eqdim
