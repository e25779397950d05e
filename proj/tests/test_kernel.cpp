#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "deqgp/kernel.hpp"
#include "support/oracles.hpp"

using namespace deqgp;

namespace {

ExperimentConfig tanh_config(double sigma_w = 0.25, int n_in = 10) {
  ExperimentConfig config;
  config.model = ModelConfig::defaults(n_in);
  config.model.sigma_w = sigma_w;
  return config;
}

}  // namespace

TEST_CASE("sigma1 on the unit sphere") {
  const int n_in = 6;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(3, n_in);
  X(0, 0) = 1.0;          // e1
  X(1, 1) = 1.0;          // e2, orthogonal to e1
  X(2, 0) = -1.0;         // -e1
  const KernelMatrix k1 = sigma1(X, std::sqrt(double(n_in)));
  CHECK(k1(0, 0) == Catch::Approx(1.0).epsilon(1e-15));  // diag-normalized convention
  CHECK(k1(0, 1) == Catch::Approx(0.0).margin(1e-15));
  CHECK(k1(0, 2) == Catch::Approx(-k1(0, 0)).epsilon(1e-15));
  CHECK(k1.level() == KernelLevel::Sigma1);

  Eigen::MatrixXd bad = X;
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(sigma1(bad, 1.0), std::invalid_argument);
}

TEST_CASE("kernel matrix storage is exactly symmetric") {
  const Eigen::MatrixXd X = oracles::random_unit_rows(7, 10, 5);
  const auto config = tanh_config();
  const KernelMatrix k = sigma_depth(X, config, 5);
  for (int i = 0; i < k.size(); ++i)
    for (int j = 0; j < k.size(); ++j) {
      CHECK(k(i, j) == k(j, i));  // bit-for-bit
    }
  // Cauchy-Schwarz with the spec slack
  for (int i = 0; i < k.size(); ++i) {
    CHECK(k(i, i) > 0.0);
    for (int j = 0; j < k.size(); ++j)
      CHECK(k(i, j) * k(i, j) <= k(i, i) * k(j, j) + 1e-10);
  }
}

TEST_CASE("identity activation gives the affine geometric recursion") {
  // Sigma^2 = sw2 Sigma1, Sigma^{l+1} = sw2 (Sigma^l + Sigma1):
  // Sigma^l -> sw2/(1-sw2) Sigma1, all computable by hand.
  auto config = tanh_config(0.5, 4);
  config.model.activation = Activation(ActivationKind::Identity);
  const double sw2 = 0.25;
  const Eigen::MatrixXd X = oracles::random_unit_rows(4, 4, 9);
  const KernelMatrix k1 = sigma1(X, config.model.sigma_u);

  KernelMatrix k = kernel_step(k1, k1, config);
  CHECK(k.depth() == 2);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j)
      CHECK(k(i, j) == Catch::Approx(sw2 * k1(i, j)).margin(1e-12));

  k = kernel_step(k, k1, config);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j)
      CHECK(k(i, j) == Catch::Approx(sw2 * (sw2 * k1(i, j) + k1(i, j))).margin(1e-12));

  const auto limit = limit_kernel(X, config, 1e-12, 500);
  const double factor = sw2 / (1.0 - sw2);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j)
      CHECK(limit.kernel(i, j) == Catch::Approx(factor * k1(i, j)).margin(1e-10));
}

TEST_CASE("contraction beta against the trapezoid oracle and scaling") {
  // Frozen from the stated brute-force oracle (trapezoid, [-12,12], step 1e-5):
  // E z^2 |z^2-1| = 2.17289072566...; analytically 6 - 8 Phi(1) + 12 phi(1).
  const double c_beta = 2.172890725681377;
  static const double oracle = oracles::beta_integrand_trapezoid();
  CHECK(oracle == Catch::Approx(c_beta).margin(2e-10));

  auto config = tanh_config(0.25);
  const double beta = contraction_beta(config, 64);
  CHECK(beta == Catch::Approx(0.5 * 0.0625 * oracle).margin(1e-8));

  config.model.sigma_w = 1e-12;
  CHECK(contraction_beta(config) == Catch::Approx(0.0).margin(1e-20));

  // beta scales exactly quadratically in sigma_w
  auto c1 = tanh_config(0.1), c2 = tanh_config(0.3);
  CHECK(contraction_beta(c2) == Catch::Approx(9.0 * contraction_beta(c1)).epsilon(1e-12));

  CHECK_THROWS_AS(contraction_beta(config, 15), std::invalid_argument);
}

TEST_CASE("limit kernel: convergence, trace decay, diagonal equality") {
  const auto config = tanh_config();
  const Eigen::MatrixXd X = oracles::random_unit_rows(6, 10, 77);
  const auto result = limit_kernel(X, config, 1e-10, 500);

  CHECK(result.kernel.level() == KernelLevel::SigmaStar);
  CHECK(result.diff_trace.back() <= 1e-10);

  const double beta = contraction_beta(config);
  for (std::size_t i = 2; i + 1 < result.diff_trace.size(); ++i) {
    const double ratio = result.diff_trace[i + 1] / result.diff_trace[i];
    CHECK(ratio <= beta + 0.02);
  }

  // diagonal equality on the sphere at the limit
  for (int i = 1; i < result.kernel.size(); ++i)
    CHECK(result.kernel(i, i) == Catch::Approx(result.kernel(0, 0)).margin(1e-10));
  CHECK(result.kernel(0, 0) > 0.0);

  // Sigma*(x,x) <= (1 + 1/beta) Sigma^2(x,x)
  const KernelMatrix k2 = kernel_step(sigma1(X, config.model.sigma_u),
                                      sigma1(X, config.model.sigma_u), config);
  CHECK(result.kernel(0, 0) <= (1.0 + 1.0 / beta) * k2(0, 0));
}

TEST_CASE("diagonal recursion contracts at rate beta") {
  // |Sigma^{l+1}(x,x) - Sigma^l(x,x)| <= beta |Sigma^l(x,x) - Sigma^{l-1}(x,x)|
  const auto config = tanh_config(0.25);
  const double beta = contraction_beta(config);
  const Eigen::MatrixXd X = oracles::random_unit_rows(2, 10, 31);
  const KernelMatrix k1 = sigma1(X, config.model.sigma_u);
  std::vector<double> diag;
  KernelMatrix k = kernel_step(k1, k1, config);
  for (int depth = 2; depth <= 14; ++depth) {
    diag.push_back(k(0, 0));
    k = kernel_step(k, k1, config);
  }
  for (std::size_t i = 2; i < diag.size(); ++i) {
    const double current = std::abs(diag[i] - diag[i - 1]);
    const double previous = std::abs(diag[i - 1] - diag[i - 2]);
    if (previous < 1e-13) break;
    CHECK(current <= beta * previous + 1e-15);
  }
}

TEST_CASE("diagonal equality holds at every recursion level") {
  const auto config = tanh_config();
  const Eigen::MatrixXd X = oracles::random_unit_rows(5, 10, 3);
  const KernelMatrix k1 = sigma1(X, config.model.sigma_u);
  KernelMatrix k = kernel_step(k1, k1, config);
  for (int depth = 2; depth <= 12; ++depth) {
    for (int i = 1; i < k.size(); ++i)
      CHECK(k(i, i) == Catch::Approx(k(0, 0)).margin(1e-10));
    k = kernel_step(k, k1, config);
  }
}

TEST_CASE("limit kernel preconditions") {
  auto config = tanh_config();
  const Eigen::MatrixXd X = oracles::random_unit_rows(3, 10, 4);
  config.model.sigma_w = 1.2;  // beta > 1
  CHECK(contraction_beta(config) >= 1.0);
  CHECK_THROWS_AS(limit_kernel(X, config), std::invalid_argument);
  // force runs anyway (tanh is bounded, the recursion still settles)
  CHECK_NOTHROW(limit_kernel(X, config, 1e-8, 500, true));
  // non-convergence carries the trace
  config.model.sigma_w = 0.25;
  try {
    limit_kernel(X, config, 1e-10, 2);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.trace.size() == 2);
  }
}

TEST_CASE("kernel_step shape and level preconditions") {
  const auto config = tanh_config();
  const Eigen::MatrixXd X = oracles::random_unit_rows(3, 10, 8);
  const Eigen::MatrixXd X2 = oracles::random_unit_rows(4, 10, 8);
  const KernelMatrix a = sigma1(X, config.model.sigma_u);
  const KernelMatrix b = sigma1(X2, config.model.sigma_u);
  CHECK_THROWS_AS(kernel_step(a, b, config), std::invalid_argument);
  auto star = limit_kernel(X, config).kernel;
  CHECK_THROWS_AS(kernel_step(star, a, config), std::invalid_argument);
}

TEST_CASE("isotropic curve matches the matrix recursion") {
  const auto config = tanh_config();
  const auto curve = isotropic::SigmaStarCurve::build(config);
  const Eigen::MatrixXd X = oracles::random_unit_rows(6, 10, 21);
  const auto star = limit_kernel(X, config, 1e-12, 500);
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) {
      const double t = X.row(i).dot(X.row(j));
      CHECK(curve(t) == Catch::Approx(star.kernel(i, j)).margin(1e-8));
    }
  CHECK(curve.diagonal() == Catch::Approx(star.kernel(0, 0)).margin(1e-10));
}

TEST_CASE("output scale carries sigma_v^2/sigma_w^2") {
  auto config = tanh_config();
  config.model.sigma_v = 2.0;
  config.model.sigma_w = 0.25;
  CHECK(output_scale(config.model) == Catch::Approx(64.0).epsilon(1e-14));
}
