#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deqgp/bivariate.hpp"
#include "deqgp/config.hpp"
#include "deqgp/errors.hpp"

namespace deqgp {

inline constexpr double kUnitNormTol = 1e-10;

enum class KernelLevel { Sigma1, SigmaL, SigmaStar, Empirical };

inline std::string kernel_level_name(KernelLevel level) {
  switch (level) {
    case KernelLevel::Sigma1: return "sigma1";
    case KernelLevel::SigmaL: return "sigmaL";
    case KernelLevel::SigmaStar: return "sigma_star";
    case KernelLevel::Empirical: return "empirical";
  }
  return "?";
}

// FNV-1a over the raw bytes of the input rows; fingerprints which dataset a
// kernel belongs to.
inline std::uint64_t fingerprint_inputs(const Eigen::MatrixXd& X) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double v = X(i, j);
      const unsigned char* bytes = reinterpret_cast<const unsigned char*>(&v);
      for (std::size_t b = 0; b < sizeof(double); ++b) {
        h ^= bytes[b];
        h *= 0x100000001b3ULL;
      }
    }
  return h;
}

// Symmetric covariance matrix at one recursion level. Only the upper triangle
// is stored; reads mirror it, so symmetry is exact by construction.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  KernelMatrix(int n, KernelLevel level, int depth = 0, std::uint64_t inputs_id = 0)
      : n_(n), level_(level), depth_(depth), inputs_id_(inputs_id),
        tri_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {}

  int size() const { return n_; }
  KernelLevel level() const { return level_; }
  // Recursion depth l for SigmaL-level matrices (Sigma^l); 0 otherwise.
  int depth() const { return depth_; }
  std::uint64_t inputs_id() const { return inputs_id_; }

  double operator()(int i, int j) const { return tri_[index(i, j)]; }
  void set(int i, int j, double value) { tri_[index(i, j)] = value; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd out(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) out(i, j) = out(j, i) = (*this)(i, j);
    return out;
  }

  double max_abs_diff(const KernelMatrix& other) const {
    if (other.n_ != n_) throw NumericalError("kernel size mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < tri_.size(); ++k)
      worst = std::max(worst, std::abs(tri_[k] - other.tri_[k]));
    return worst;
  }

  void relabel(KernelLevel level, int depth) {
    level_ = level;
    depth_ = depth;
  }

 private:
  std::size_t index(int i, int j) const {
    if (i > j) std::swap(i, j);
    // row-major upper triangle
    return static_cast<std::size_t>(i) * (2 * n_ - i - 1) / 2 + j;
  }

  int n_ = 0;
  KernelLevel level_ = KernelLevel::Sigma1;
  int depth_ = 0;
  std::uint64_t inputs_id_ = 0;
  std::vector<double> tri_;
};

inline void require_unit_rows(const Eigen::MatrixXd& X) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double norm = X.row(i).norm();
    if (std::abs(norm - 1.0) > kUnitNormTol)
      throw std::invalid_argument("input row " + std::to_string(i) +
                                  " is not unit-normalized (|x| = " + std::to_string(norm) + ")");
  }
}

// Sigma^1(x,x') = sigma_u^2 <x,x'> / n_in. With the default
// sigma_u = sqrt(n_in) the diagonal is exactly 1 on the unit sphere.
inline KernelMatrix sigma1(const Eigen::MatrixXd& X, double sigma_u) {
  require_unit_rows(X);
  const int n = static_cast<int>(X.rows());
  KernelMatrix out(n, KernelLevel::Sigma1, 1, fingerprint_inputs(X));
  const double scale = sigma_u * sigma_u / static_cast<double>(X.cols());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.set(i, j, scale * X.row(i).dot(X.row(j)));
  return out;
}

// One step of the covariance recursion:
//   Sigma^{l+1}(x,x') = sigma_w^2 E[phi(u) phi(u')],
// where the (u,u') covariance is Sigma^1 alone when stepping from Sigma^1,
// and Sigma^l + Sigma^1 (input injection) afterwards.
inline KernelMatrix kernel_step(const KernelMatrix& current, const KernelMatrix& sigma1_k,
                                const ExperimentConfig& config) {
  if (current.size() != sigma1_k.size())
    throw std::invalid_argument("kernel_step: shape mismatch");
  if (current.level() != KernelLevel::Sigma1 && current.level() != KernelLevel::SigmaL)
    throw std::invalid_argument("kernel_step: input level must be Sigma1 or SigmaL");
  const bool from_sigma1 = current.level() == KernelLevel::Sigma1;
  const int n = current.size();
  const double sw2 = config.model.sigma_w * config.model.sigma_w;
  const Activation& phi = config.model.activation;
  KernelMatrix out(n, KernelLevel::SigmaL, from_sigma1 ? 2 : current.depth() + 1,
                   current.inputs_id());
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      BivariateGaussianSpec spec;
      if (from_sigma1) {
        spec = {current(i, i), current(j, j), current(i, j)};
      } else {
        spec = {current(i, i) + sigma1_k(i, i), current(j, j) + sigma1_k(j, j),
                current(i, j) + sigma1_k(i, j)};
      }
      out.set(i, j, sw2 * bivariate_expectation(phi, spec, config.quad_order));
    }
  }
  return out;
}

// Kernel-recursion contraction rate beta = (sigma_w^2/2) E|z|^2 |z^2-1|.
// The integrand kinks at |z| = 1, so it is integrated as three smooth pieces
// by Gauss-Legendre; the tails are truncated at |z| = 13 where the Gaussian
// weight is ~1e-37.
inline double contraction_beta(const ExperimentConfig& config, int order = 64) {
  if (order < 16) throw std::invalid_argument("contraction_beta: order must be >= 16");
  auto integrand = [](double z) {
    const double z2 = z * z;
    return z2 * std::abs(z2 - 1.0) * detail::normal_pdf(z);
  };
  double c = quadrature::integrate_segment(integrand, -1.0, 1.0, order);
  c += quadrature::integrate_segment(integrand, 1.0, 7.0, order);
  c += quadrature::integrate_segment(integrand, 7.0, 13.0, order);
  c += quadrature::integrate_segment(integrand, -7.0, -1.0, order);
  c += quadrature::integrate_segment(integrand, -13.0, -7.0, order);
  const double sw = config.model.sigma_w;
  return 0.5 * sw * sw * c;
}

struct LimitKernelResult {
  KernelMatrix kernel;       // level SigmaStar
  int steps = 0;             // number of kernel_step applications after Sigma^2
  std::vector<double> diff_trace;
};

// Iterate the recursion from Sigma^1 until successive matrices agree to
// kernel_tol entrywise. Requires beta < 1 unless force is set.
inline LimitKernelResult limit_kernel(const Eigen::MatrixXd& X, const ExperimentConfig& config,
                                      double kernel_tol = 1e-10, int max_steps = 500,
                                      bool force = false) {
  const double beta = contraction_beta(config);
  if (beta >= 1.0 && !force)
    throw std::invalid_argument("limit_kernel: beta = " + std::to_string(beta) +
                                " >= 1; the recursion is not provably contractive "
                                "(pass force to override)");
  const KernelMatrix k1 = sigma1(X, config.model.sigma_u);
  KernelMatrix current = kernel_step(k1, k1, config);
  LimitKernelResult result;
  for (int step = 0; step < max_steps; ++step) {
    KernelMatrix next = kernel_step(current, k1, config);
    const double diff = next.max_abs_diff(current);
    result.diff_trace.push_back(diff);
    current = std::move(next);
    if (diff <= kernel_tol) {
      result.steps = step + 1;
      current.relabel(KernelLevel::SigmaStar, current.depth());
      result.kernel = std::move(current);
      return result;
    }
  }
  throw NonConvergenceError("limit_kernel: no convergence to " + std::to_string(kernel_tol) +
                                " within " + std::to_string(max_steps) + " steps",
                            result.diff_trace);
}

// Sigma^L for a fixed depth L >= 1 (L = 1 returns Sigma^1 itself).
inline KernelMatrix sigma_depth(const Eigen::MatrixXd& X, const ExperimentConfig& config,
                                int depth) {
  if (depth < 1) throw std::invalid_argument("sigma_depth: depth must be >= 1");
  KernelMatrix k1 = sigma1(X, config.model.sigma_u);
  if (depth == 1) return k1;
  KernelMatrix current = kernel_step(k1, k1, config);
  for (int l = 3; l <= depth; ++l) current = kernel_step(current, k1, config);
  return current;
}

// The network output covariance is sigma_v^2/n <h*,h*> in the width limit,
// i.e. (sigma_v^2 / sigma_w^2) * Sigma*. This is the scale the Gaussianity
// tests compare simulated outputs against.
inline double output_scale(const ModelConfig& config) {
  return config.sigma_v * config.sigma_v / (config.sigma_w * config.sigma_w);
}

namespace isotropic {

// On the unit sphere with Sigma^1(x,x) = 1, every Sigma^l(x,x') depends on
// t = <x,x'> only, and the diagonal is input-independent. The scalar
// recursion below is what sigma_star_curve samples.
inline double diagonal_star(const ExperimentConfig& config, double tol = 1e-14,
                            int max_steps = 2000) {
  const double sw2 = config.model.sigma_w * config.model.sigma_w;
  const Activation& phi = config.model.activation;
  double d = sw2 * bivariate_expectation(phi, {1.0, 1.0, 1.0}, config.quad_order);
  for (int i = 0; i < max_steps; ++i) {
    const double next =
        sw2 * bivariate_expectation(phi, {d + 1.0, d + 1.0, d + 1.0}, config.quad_order);
    const double diff = std::abs(next - d);
    d = next;
    if (diff <= tol) return d;
  }
  throw NonConvergenceError("diagonal_star: no convergence", {});
}

inline double offdiagonal_star(const ExperimentConfig& config, double d_star, double t,
                               double tol = 1e-14, int max_steps = 2000) {
  const double sw2 = config.model.sigma_w * config.model.sigma_w;
  const Activation& phi = config.model.activation;
  const double var = d_star + 1.0;
  double s = sw2 * bivariate_expectation(phi, {1.0, 1.0, t}, config.quad_order);
  for (int i = 0; i < max_steps; ++i) {
    const double next = sw2 * bivariate_expectation(phi, {var, var, s + t}, config.quad_order);
    const double diff = std::abs(next - s);
    s = next;
    if (diff <= tol) return s;
  }
  throw NonConvergenceError("offdiagonal_star: no convergence", {});
}

// Chebyshev interpolant of t -> Sigma*(t) on [-1,1]. Sigma*(t) is analytic,
// so a few hundred nodes reach ~1e-12; this is what makes dataset-sized
// kernel matrices affordable (the per-entry recursion stays the reference
// path for small matrices and the interpolant is cross-checked against it).
class SigmaStarCurve {
 public:
  SigmaStarCurve() = default;

  static SigmaStarCurve build(const ExperimentConfig& config, int num_nodes = 257) {
    SigmaStarCurve curve;
    curve.d_star_ = diagonal_star(config);
    const int m = num_nodes;
    std::vector<double> values(m);
    const double pi = 3.14159265358979323846;
    for (int j = 0; j < m; ++j) {
      const double t = std::cos(pi * (j + 0.5) / m);
      values[j] = offdiagonal_star(config, curve.d_star_, t);
    }
    curve.coeffs_.assign(m, 0.0);
    for (int k = 0; k < m; ++k) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j)
        acc += values[j] * std::cos(pi * k * (j + 0.5) / m);
      curve.coeffs_[k] = 2.0 / m * acc;
    }
    curve.coeffs_[0] *= 0.5;
    return curve;
  }

  double diagonal() const { return d_star_; }

  double operator()(double t) const {
    const double x = std::clamp(t, -1.0, 1.0);
    // Clenshaw on Chebyshev coefficients
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) {
      const double b0 = 2.0 * x * b1 - b2 + coeffs_[k];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + coeffs_[0];
  }

  // Gram matrix of Sigma* over unit rows of A and B (entries Sigma*(<a_i,b_j>)).
  Eigen::MatrixXd gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
    Eigen::MatrixXd T = A * B.transpose();
    Eigen::MatrixXd out(T.rows(), T.cols());
    for (Eigen::Index i = 0; i < T.rows(); ++i)
      for (Eigen::Index j = 0; j < T.cols(); ++j) out(i, j) = (*this)(T(i, j));
    return out;
  }

 private:
  double d_star_ = 0.0;
  std::vector<double> coeffs_;
};

}  // namespace isotropic

}  // namespace deqgp
