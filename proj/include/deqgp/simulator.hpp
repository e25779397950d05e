#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "deqgp/config.hpp"
#include "deqgp/errors.hpp"
#include "deqgp/kernel.hpp"
#include "deqgp/rng.hpp"

namespace deqgp {

// One sampled weight realization, immutable after construction.
struct NetworkParams {
  Eigen::MatrixXd U;  // n_in x n, entries N(0, sigma_u^2 / n_in)
  Eigen::MatrixXd W;  // n x n,    entries N(0, sigma_w^2 / n)
  Eigen::MatrixXd V;  // n x n_out, entries N(0, sigma_v^2 / n)
  ModelConfig config;
};

// Deterministic in (config, seed); U, W, V draw from independent substreams
// so changing n_out cannot shift the W draw.
inline NetworkParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  NetworkParams params;
  params.config = config;
  const int n = config.width;
  params.U.resize(config.n_in, n);
  params.W.resize(n, n);
  params.V.resize(n, config.n_out);
  {
    rng::GaussianSampler g(rng::derive_stream_seed(seed, 0));
    g.fill(params.U.data(), params.U.size(), config.sigma_u / std::sqrt(config.n_in));
  }
  {
    rng::GaussianSampler g(rng::derive_stream_seed(seed, 1));
    g.fill(params.W.data(), params.W.size(), config.sigma_w / std::sqrt(n));
  }
  {
    rng::GaussianSampler g(rng::derive_stream_seed(seed, 2));
    g.fill(params.V.data(), params.V.size(), config.sigma_v / std::sqrt(n));
  }
  return params;
}

struct FixedPointResult {
  Eigen::VectorXd h_star;
  int iterations = 0;
  std::vector<double> residual_trace;  // one entry per iterate, see below
  bool converged = false;
};

namespace detail_sim {

inline void apply_activation_inplace(const Activation& phi, Eigen::VectorXd& v) {
  if (phi.kind() == ActivationKind::Tanh) {
    v = v.array().tanh();  // vectorized fast path; matches std::tanh
  } else if (phi.kind() == ActivationKind::ReLU) {
    v = v.array().max(0.0);
  } else {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = phi(v(i));
  }
}

// One transition step h -> phi(W^T h + g1) into `next`.
inline void transition(const NetworkParams& params, const Eigen::VectorXd& g1,
                       const Eigen::VectorXd& h, Eigen::VectorXd& next) {
  next.noalias() = params.W.transpose() * h;
  next += g1;
  apply_activation_inplace(params.config.activation, next);
}

}  // namespace detail_sim

// Picard iteration of h^{l} = phi(W^T h^{l-1} + U^T x) from h^0 = 0.
// Residual convention: r_l = |h^l - h^{l-1}| / max(|h^l|, 1e-30), so the
// first entry (h^1 vs h^0) is 1 for any nonzero h^1. Convergence means the
// latest residual dropped to fp_tol. When the contraction flag is off, five
// consecutive increases of the step norm |h^l - h^{l-1}| abort with the
// trace attached (under exponential blowup the relative residual saturates
// at a constant, so the absolute step carries the divergence signal); with
// gamma < 1 the iteration is provably convergent and only the cap applies.
inline FixedPointResult forward_fixed_point(const NetworkParams& params,
                                            const Eigen::VectorXd& x) {
  if (x.size() != params.config.n_in)
    throw std::invalid_argument("forward_fixed_point: input has wrong dimension");
  if (!(x.norm() > 0.0)) throw std::invalid_argument("forward_fixed_point: |x| must be > 0");

  const bool guarded = !contraction_ok(params.config);
  const Eigen::VectorXd g1 = params.U.transpose() * x;
  FixedPointResult result;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params.config.width);
  Eigen::VectorXd next(params.config.width);
  int rises = 0;
  double previous_step = 0.0;
  for (int iter = 1; iter <= params.config.fp_max_iter; ++iter) {
    detail_sim::transition(params, g1, h, next);
    const double step = (next - h).norm();
    const double residual = step / std::max(next.norm(), 1e-30);
    h.swap(next);
    result.iterations = iter;
    if (!std::isfinite(step))
      throw NonConvergenceError("forward_fixed_point: iteration overflowed",
                                result.residual_trace);
    if (iter > 1 && step > previous_step) {
      if (guarded && ++rises >= 5)
        throw NonConvergenceError(
            "forward_fixed_point: step norm grew 5 consecutive iterations with gamma >= 1",
            result.residual_trace);
    } else {
      rises = 0;
    }
    previous_step = step;
    result.residual_trace.push_back(residual);
    if (residual <= params.config.fp_tol) {
      result.converged = true;
      break;
    }
  }
  result.h_star = std::move(h);
  return result;
}

// h^{L-1} of the finite-depth network: same transition as the fixed-point
// iteration, truncated after L-1 applications (h^1 = phi(U^T x) because
// h^0 = 0).
inline Eigen::VectorXd finite_depth_forward(const NetworkParams& params,
                                            const Eigen::VectorXd& x, int L) {
  if (L < 2) throw std::invalid_argument("finite_depth_forward: L must be >= 2");
  if (x.size() != params.config.n_in)
    throw std::invalid_argument("finite_depth_forward: input has wrong dimension");
  const Eigen::VectorXd g1 = params.U.transpose() * x;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params.config.width);
  Eigen::VectorXd next(params.config.width);
  for (int l = 1; l <= L - 1; ++l) {
    detail_sim::transition(params, g1, h, next);
    h.swap(next);
  }
  return h;
}

inline Eigen::VectorXd network_output(const NetworkParams& params, const Eigen::VectorXd& h) {
  if (h.size() != params.config.width)
    throw std::invalid_argument("network_output: hidden vector has wrong dimension");
  return params.V.transpose() * h;
}

enum class EmpiricalKernelMode { Depth, FixedPoint };

// Finite-width kernel estimate over unit-sphere inputs X (rows).
// Depth mode runs `depth` transition steps and returns
//   sigma_w^2/n <h^depth(x_i), h^depth(x_j)>   (estimates Sigma^{depth+1});
// fixed-point mode iterates to h* and returns
//   sigma_v^2/n <h*(x_i), h*(x_j)>             (estimates the output covariance).
inline KernelMatrix empirical_kernel(const NetworkParams& params, const Eigen::MatrixXd& X,
                                     EmpiricalKernelMode mode, int depth = 0) {
  require_unit_rows(X);
  if (X.cols() != params.config.n_in)
    throw std::invalid_argument("empirical_kernel: inputs have wrong dimension");
  const int count = static_cast<int>(X.rows());
  const int n = params.config.width;
  Eigen::MatrixXd H(n, count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    if (mode == EmpiricalKernelMode::Depth) {
      if (depth < 1) throw std::invalid_argument("empirical_kernel: depth must be >= 1");
      H.col(i) = finite_depth_forward(params, x, depth + 1);  // h^depth
    } else {
      H.col(i) = forward_fixed_point(params, x).h_star;
    }
  }
  const double sigma = mode == EmpiricalKernelMode::Depth ? params.config.sigma_w
                                                          : params.config.sigma_v;
  const double scale = sigma * sigma / static_cast<double>(n);
  KernelMatrix out(count, KernelLevel::Empirical,
                   mode == EmpiricalKernelMode::Depth ? depth + 1 : 0, fingerprint_inputs(X));
  for (int i = 0; i < count; ++i)
    for (int j = i; j < count; ++j) out.set(i, j, scale * H.col(i).dot(H.col(j)));
  return out;
}

}  // namespace deqgp
