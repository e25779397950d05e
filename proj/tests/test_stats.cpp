#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "deqgp/stats.hpp"

using deqgp::ks_test;
using deqgp::kolmogorov_p;

namespace {

// invert the standard normal CDF by bisection (test-side oracle)
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("kolmogorov series anchors") {
  // t = sqrt(10000) * 0.0056 = 0.56 reproduces the headline p ~ 0.912
  CHECK(kolmogorov_p(0.56) == Catch::Approx(0.912437).margin(2e-4));
  CHECK(kolmogorov_p(0.68) == Catch::Approx(0.744).margin(1e-3));
  CHECK(kolmogorov_p(0.0) == 1.0);
  CHECK(kolmogorov_p(3.0) < 1e-7);
  // monotone up to the 1e-12 truncation noise of the series
  double prev = 1.0;
  for (double t = 0.05; t < 3.0; t += 0.05) {
    const double p = kolmogorov_p(t);
    CHECK(p <= prev + 1e-9);
    prev = p;
  }
}

TEST_CASE("quantile-constructed samples give a near-perfect fit") {
  const int m = 400;
  std::vector<double> samples(m);
  for (int i = 0; i < m; ++i)
    samples[i] = normal_quantile((i + 1) / static_cast<double>(m + 1));
  const auto result = ks_test(samples, 0.0, 1.0);
  CHECK(result.statistic <= 1.0 / (m + 1) + 1e-6);
  CHECK(result.p_value > 0.999);
}

TEST_CASE("null calibration: p >= 0.01 in at least 95% of seeds") {
  std::mt19937_64 engine(1234);
  std::normal_distribution<double> normal(0.0, 1.0);
  int passes = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> samples(10000);
    for (auto& s : samples) s = normal(engine);
    if (ks_test(std::move(samples), 0.0, 1.0).p_value >= 0.01) ++passes;
  }
  CHECK(passes >= 95);
}

TEST_CASE("power: uniform samples against the matched-variance gaussian") {
  std::mt19937_64 engine(99);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> samples(10000);
  for (auto& s : samples) s = uniform(engine);
  const auto result = ks_test(std::move(samples), 0.0, 1.0 / 3.0);
  CHECK(result.p_value < 1e-6);
  CHECK(result.statistic > 0.03);
}

TEST_CASE("null p-values are super-uniform at the probed quantiles") {
  std::mt19937_64 engine(555);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int trials = 500;
  const int m = 1000;
  std::vector<double> pvals(trials);
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> samples(m);
    for (auto& s : samples) s = normal(engine);
    pvals[trial] = ks_test(std::move(samples), 0.0, 1.0).p_value;
  }
  for (double q : {0.01, 0.05, 0.1}) {
    int below = 0;
    for (double p : pvals)
      if (p <= q) ++below;
    const double fraction = below / static_cast<double>(trials);
    CHECK(fraction <= q + 3.0 * std::sqrt(q * (1.0 - q) / trials));
  }
}

TEST_CASE("ks preconditions") {
  std::vector<double> few = {1, 2, 3};
  CHECK_THROWS_AS(ks_test(few, 0.0, 1.0), std::invalid_argument);
  std::vector<double> enough(20, 0.5);
  CHECK_THROWS_AS(ks_test(enough, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("ks result ranges") {
  std::mt19937_64 engine(3);
  std::normal_distribution<double> normal(1.0, 2.0);
  std::vector<double> samples(500);
  for (auto& s : samples) s = normal(engine);
  const auto result = ks_test(std::move(samples), 1.0, 4.0);
  CHECK(result.statistic >= 0.0);
  CHECK(result.statistic <= 1.0);
  CHECK(result.p_value >= 0.0);
  CHECK(result.p_value <= 1.0);
  CHECK(result.sample_count == 500);
}
