#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "deqgp/kernel.hpp"
#include "deqgp/parallel.hpp"
#include "deqgp/simulator.hpp"
#include "deqgp/stats.hpp"

namespace deqgp {

// Distinct salts keep the seed streams of different experiment families
// disjoint even when they share one root seed.
namespace seed_salt {
inline constexpr std::uint64_t kGaussianity = 0x67617573ULL;
inline constexpr std::uint64_t kWidthConvergence = 0x77696474ULL;
inline constexpr std::uint64_t kEigenStudy = 0x65696765ULL;
}  // namespace seed_salt

struct GaussianityResult {
  std::vector<KsResult> per_output;   // coordinate-wise KS vs N(0, theoretical_variance)
  Eigen::MatrixXd cross_covariance;   // n_out x n_out sample covariance
  Eigen::MatrixXd samples;            // num_nets x n_out raw outputs
  double theoretical_variance = 0.0;
  int failures = 0;
};

// Simulates num_nets independent parameter draws, records f_theta(x), and
// tests each output coordinate against the width-limit Gaussian
// N(0, (sigma_v^2/sigma_w^2) Sigma*(x,x)). Fixed-point failures are counted;
// more than 1% aborts the experiment.
inline GaussianityResult gaussianity_experiment(const ExperimentConfig& config,
                                                const Eigen::VectorXd& x, int num_nets,
                                                int threads = 1) {
  if (num_nets < 100)
    throw std::invalid_argument("gaussianity_experiment: num_nets must be >= 100");
  if (std::abs(x.norm() - 1.0) > kUnitNormTol)
    throw std::invalid_argument("gaussianity_experiment: x must be unit-normalized");

  GaussianityResult result;
  result.theoretical_variance = output_scale(config.model) * isotropic::diagonal_star(config);

  const int n_out = config.model.n_out;
  result.samples.resize(num_nets, n_out);
  std::vector<char> ok(num_nets, 0);
  const std::uint64_t root = config.model.seed ^ seed_salt::kGaussianity;
  parallel_for(static_cast<std::size_t>(num_nets), threads, [&](std::size_t i) {
    const NetworkParams params =
        init_params(config.model, rng::derive_stream_seed(root, i));
    try {
      const FixedPointResult fp = forward_fixed_point(params, x);
      if (!fp.converged) return;
      result.samples.row(i) = network_output(params, fp.h_star).transpose();
      ok[i] = 1;
    } catch (const NonConvergenceError&) {
      // leave slot marked failed
    }
  });

  int good = 0;
  for (int i = 0; i < num_nets; ++i)
    if (ok[i]) result.samples.row(good++) = result.samples.row(i);
  result.failures = num_nets - good;
  if (result.failures * 100 > num_nets)
    throw NumericalError("gaussianity_experiment: more than 1% fixed-point failures (" +
                         std::to_string(result.failures) + "/" + std::to_string(num_nets) + ")");
  result.samples.conservativeResize(good, n_out);

  result.per_output.reserve(n_out);
  for (int k = 0; k < n_out; ++k) {
    std::vector<double> column(result.samples.col(k).data(),
                               result.samples.col(k).data() + good);
    result.per_output.push_back(ks_test(std::move(column), 0.0, result.theoretical_variance));
  }
  const Eigen::MatrixXd centered =
      result.samples.rowwise() - result.samples.colwise().mean();
  result.cross_covariance = centered.transpose() * centered / static_cast<double>(good);
  return result;
}

struct ConvergenceTrace {
  std::vector<double> abscissa;  // widths or depths, strictly increasing
  std::vector<double> errors;    // relative Frobenius errors
  double fitted_slope = 0.0;     // log-log least squares (width mode)
  double fitted_ratio = 0.0;     // geometric mean per-step error ratio (depth mode)
};

namespace detail_exp {

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
  return (a - ref).norm() / ref.norm();
}

inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail_exp

// Empirical-vs-limit kernel error as a function of width at fixed depth.
// errors(i) = mean over `reps` seeds of |K_hat - K*|_F / |K*|_F. Note the
// fitted slope of these (unsquared) errors concentrates near -1/2, the
// central-limit rate; the squared errors decay at order 1/n.
inline ConvergenceTrace width_convergence(const ExperimentConfig& config,
                                          const Eigen::MatrixXd& X,
                                          const std::vector<int>& widths, int depth, int reps,
                                          int threads = 1) {
  if (widths.size() < 2)
    throw std::invalid_argument("width_convergence: need at least 2 widths");
  if (reps < 1) throw std::invalid_argument("width_convergence: reps must be >= 1");
  for (std::size_t i = 1; i < widths.size(); ++i)
    if (widths[i] <= widths[i - 1])
      throw std::invalid_argument("width_convergence: widths must be strictly increasing");

  const Eigen::MatrixXd k_star =
      limit_kernel(X, config, config.kernel_tol, config.kernel_max_steps).kernel.dense();

  const std::size_t jobs = widths.size() * static_cast<std::size_t>(reps);
  std::vector<double> per_job(jobs, 0.0);
  const std::uint64_t root = config.model.seed ^ seed_salt::kWidthConvergence;
  parallel_for(jobs, threads, [&](std::size_t job) {
    const std::size_t wi = job / reps;
    ModelConfig model = config.model;
    model.width = widths[wi];
    const NetworkParams params = init_params(model, rng::derive_stream_seed(root, job));
    const KernelMatrix k_hat = empirical_kernel(params, X, EmpiricalKernelMode::Depth, depth);
    per_job[job] = detail_exp::rel_frobenius(k_hat.dense(), k_star);
  });

  ConvergenceTrace trace;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    double mean = 0.0;
    for (int r = 0; r < reps; ++r) mean += per_job[wi * reps + r];
    trace.abscissa.push_back(static_cast<double>(widths[wi]));
    trace.errors.push_back(mean / reps);
  }
  trace.fitted_slope = detail_exp::loglog_slope(trace.abscissa, trace.errors);
  return trace;
}

// Theoretical recursion error |Sigma^l - Sigma*|_F / |Sigma*|_F at the listed
// depths; exact, no sampling noise. fitted_ratio is the geometric mean of the
// per-step error ratios, aggregated only while the errors stay two orders of
// magnitude above the reference tolerance.
inline ConvergenceTrace depth_convergence(const ExperimentConfig& config,
                                          const Eigen::MatrixXd& X,
                                          const std::vector<int>& depths) {
  if (depths.empty()) throw std::invalid_argument("depth_convergence: depths required");
  for (std::size_t i = 1; i < depths.size(); ++i)
    if (depths[i] <= depths[i - 1])
      throw std::invalid_argument("depth_convergence: depths must be increasing");
  if (depths.front() < 2)
    throw std::invalid_argument("depth_convergence: depths must start at >= 2");

  const Eigen::MatrixXd k_star =
      limit_kernel(X, config, config.kernel_tol, config.kernel_max_steps).kernel.dense();
  const double star_norm = k_star.norm();

  ConvergenceTrace trace;
  const KernelMatrix k1 = sigma1(X, config.model.sigma_u);
  KernelMatrix current = kernel_step(k1, k1, config);  // Sigma^2
  std::size_t next_snapshot = 0;
  for (int depth = 2; depth <= depths.back(); ++depth) {
    if (next_snapshot < depths.size() && depth == depths[next_snapshot]) {
      trace.abscissa.push_back(static_cast<double>(depth));
      trace.errors.push_back((current.dense() - k_star).norm() / star_norm);
      ++next_snapshot;
    }
    if (depth < depths.back()) current = kernel_step(current, k1, config);
  }

  double log_sum = 0.0;
  int pairs = 0;
  const double floor = 100.0 * config.kernel_tol;
  for (std::size_t i = 1; i < trace.errors.size(); ++i) {
    if (trace.errors[i] < floor || trace.errors[i - 1] < floor) continue;
    const double step = trace.abscissa[i] - trace.abscissa[i - 1];
    log_sum += std::log(trace.errors[i] / trace.errors[i - 1]) / step;
    ++pairs;
  }
  trace.fitted_ratio = pairs > 0 ? std::exp(log_sum / pairs) : 0.0;
  return trace;
}

struct EigenStudy {
  std::vector<int> depths;
  std::vector<double> sigma_w_values;
  Eigen::MatrixXd lambda_min;            // sigma_w x depth, theoretical recursion
  std::vector<double> lambda_min_star;   // per sigma_w, lambda_min of Sigma*
  std::vector<double> lambda_min_sim;    // per sigma_w, simulation at sim_width
  int sim_width = 0;
};

// Smallest eigenvalue of the kernel matrix across depths and sigma_w values,
// via both the recursion ("theoretical") and one finite-width realization
// ("simulation", run with sigma_v = sigma_w so the empirical fixed-point
// kernel estimates Sigma* on the same scale).
inline EigenStudy eigen_study(const ExperimentConfig& base_config, const Eigen::MatrixXd& X,
                              const std::vector<int>& depths,
                              const std::vector<double>& sigma_w_values, int sim_width = 1024) {
  require_unit_rows(X);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j)
      if (X.row(i).dot(X.row(j)) > 1.0 - 1e-12)
        throw std::invalid_argument("eigen_study: inputs must be pairwise distinct (rows " +
                                    std::to_string(i) + ", " + std::to_string(j) + ")");
  if (depths.empty() || sigma_w_values.empty())
    throw std::invalid_argument("eigen_study: depths and sigma_w values required");

  EigenStudy study;
  study.depths = depths;
  study.sigma_w_values = sigma_w_values;
  study.sim_width = sim_width;
  study.lambda_min.resize(sigma_w_values.size(), depths.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;

  for (std::size_t si = 0; si < sigma_w_values.size(); ++si) {
    ExperimentConfig config = base_config;
    config.model.sigma_w = sigma_w_values[si];
    if (contraction_beta(config) >= 1.0)
      throw std::invalid_argument("eigen_study: sigma_w = " +
                                  std::to_string(sigma_w_values[si]) + " gives beta >= 1");

    const KernelMatrix k1 = sigma1(X, config.model.sigma_u);
    KernelMatrix current = kernel_step(k1, k1, config);
    std::size_t next_snapshot = 0;
    for (int depth = 2; depth <= depths.back(); ++depth) {
      if (next_snapshot < depths.size() && depth == depths[next_snapshot]) {
        solver.compute(current.dense(), Eigen::EigenvaluesOnly);
        study.lambda_min(si, next_snapshot) = solver.eigenvalues().minCoeff();
        ++next_snapshot;
      }
      if (depth < depths.back()) current = kernel_step(current, k1, config);
    }

    const auto star = limit_kernel(X, config, config.kernel_tol, config.kernel_max_steps);
    solver.compute(star.kernel.dense(), Eigen::EigenvaluesOnly);
    study.lambda_min_star.push_back(solver.eigenvalues().minCoeff());

    ModelConfig sim_model = config.model;
    sim_model.width = sim_width;
    sim_model.sigma_v = sim_model.sigma_w;
    const NetworkParams params = init_params(
        sim_model, rng::derive_stream_seed(base_config.model.seed ^ seed_salt::kEigenStudy, si));
    const KernelMatrix k_sim = empirical_kernel(params, X, EmpiricalKernelMode::FixedPoint);
    solver.compute(k_sim.dense(), Eigen::EigenvaluesOnly);
    study.lambda_min_sim.push_back(solver.eigenvalues().minCoeff());
  }
  return study;
}

}  // namespace deqgp
