#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "deqgp/errors.hpp"

namespace deqgp {

struct KsResult {
  double statistic = 0.0;   // sup-distance D in [0,1]
  double p_value = 0.0;     // asymptotic Kolmogorov p
  int sample_count = 0;
};

// P(K > t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2), truncated when the
// terms drop below 1e-12.
inline double kolmogorov_p(double t) {
  if (t <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    if (term < 1e-12) break;
    sum += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sided KS test of `samples` against N(mean, variance). Both one-sided
// empirical-CDF gaps are evaluated at every sorted sample point.
inline KsResult ks_test(std::vector<double> samples, double mean, double variance) {
  if (samples.size() < 8) throw std::invalid_argument("ks_test: need at least 8 samples");
  if (!(variance > 0.0)) throw std::invalid_argument("ks_test: variance must be > 0");
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  const double inv_sd = 1.0 / std::sqrt(2.0 * variance);
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-(samples[i] - mean) * inv_sd);
    d = std::max(d, (i + 1) / m - cdf);
    d = std::max(d, cdf - i / m);
  }
  KsResult result;
  result.statistic = d;
  result.sample_count = static_cast<int>(samples.size());
  result.p_value = kolmogorov_p(std::sqrt(m) * d);
  return result;
}

}  // namespace deqgp
