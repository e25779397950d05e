#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deqgp/activation.hpp"
#include "deqgp/bivariate.hpp"
#include "deqgp/quadrature.hpp"

namespace deqgp {

// Values of the orthonormal (normalized probabilists') Hermite polynomials
// h_0..h_N at z, via the stable recurrence
//   h_{k+1}(z) = (z h_k(z) - sqrt(k) h_{k-1}(z)) / sqrt(k+1).
inline void hermite_basis_at(double z, int N, std::vector<double>& out) {
  out.resize(N + 1);
  out[0] = 1.0;
  if (N >= 1) out[1] = z;
  for (int k = 1; k < N; ++k)
    out[k + 1] = (z * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
}

// Expansion of mu(z) = phi(sqrt(c+1) z) in the orthonormal Hermite basis.
struct HermiteExpansion {
  std::vector<double> coefficients;  // a_0..a_N
  double scale_c = 0.0;
  int truncation_N = 0;
  double parseval_defect = 0.0;      // |sum a_n^2 - E mu(z)^2|

  double mass() const {
    double acc = 0.0;
    for (double a : coefficients) acc += a * a;
    return acc;
  }
};

inline void to_json(nlohmann::json& j, const HermiteExpansion& e) {
  j = nlohmann::json{{"coefficients", e.coefficients},
                     {"scale_c", e.scale_c},
                     {"truncation_N", e.truncation_N},
                     {"parseval_defect", e.parseval_defect}};
}

// a_n = E[mu(z) h_n(z)]. Smooth activations integrate by Gauss-Hermite of the
// given order (which must resolve degree-2N polynomials: order >= 2N+16);
// ReLU's kink at 0 would poison that rule, so its Gaussian-weighted integrals
// run on the kink-free half line instead.
inline HermiteExpansion hermite_coefficients(const Activation& phi, double scale_c, int N,
                                             int order) {
  if (N < 0) throw std::invalid_argument("hermite_coefficients: N must be >= 0");
  if (order < 2 * N + 16)
    throw std::invalid_argument("hermite_coefficients: order must be >= 2N+16");
  if (scale_c < 0.0) throw std::invalid_argument("hermite_coefficients: scale_c must be >= 0");

  const double stretch = std::sqrt(scale_c + 1.0);
  auto mu = [&](double z) { return phi(stretch * z); };

  HermiteExpansion out;
  out.scale_c = scale_c;
  out.truncation_N = N;
  out.coefficients.assign(N + 1, 0.0);
  double second_moment = 0.0;

  std::vector<double> basis;
  if (phi.has_kink_at_zero()) {
    const auto& rule = quadrature::gauss_legendre(std::max(96, order / 2));
    // panels on [0, 13]; mu vanishes on the negative half line for ReLU
    static const double cuts[] = {0.0, 2.0, 4.0, 6.5, 9.5, 13.0};
    for (int p = 0; p + 1 < 6; ++p) {
      const double half = 0.5 * (cuts[p + 1] - cuts[p]);
      const double mid = 0.5 * (cuts[p + 1] + cuts[p]);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double z = mid + half * rule.nodes[i];
        const double w = half * rule.weights[i] * detail::normal_pdf(z);
        const double m = mu(z);
        hermite_basis_at(z, N, basis);
        for (int k = 0; k <= N; ++k) out.coefficients[k] += w * m * basis[k];
        second_moment += w * m * m;
      }
    }
  } else {
    const auto& rule = quadrature::gauss_hermite(order);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = rule.nodes[i];
      const double w = rule.weights[i];
      const double m = mu(z);
      hermite_basis_at(z, N, basis);
      for (int k = 0; k <= N; ++k) out.coefficients[k] += w * m * basis[k];
      second_moment += w * m * m;
    }
  }

  out.parseval_defect = std::abs(out.mass() - second_moment);
  return out;
}

// Truncated dual activation: phi_hat(rho) = sum a_n^2 rho^n.
inline double dual_kernel_eval(const HermiteExpansion& expansion, double rho) {
  if (std::abs(rho) > 1.0)
    throw std::domain_error("dual_kernel_eval: rho must lie in [-1,1]");
  double acc = 0.0;
  double power = 1.0;
  for (double a : expansion.coefficients) {
    acc += a * a * power;
    power *= rho;
  }
  return acc;
}

enum class PdVerdict { ConsistentWithStrictPd, PolynomialLike, SingleParity };

inline std::string pd_verdict_name(PdVerdict v) {
  switch (v) {
    case PdVerdict::ConsistentWithStrictPd: return "consistent with strict PD";
    case PdVerdict::PolynomialLike: return "polynomial-like, NOT strict PD";
    case PdVerdict::SingleParity:
      return "single-parity spectrum (odd activation); see composed counts";
  }
  return "?";
}

struct PdDiagnostic {
  int nonzero_even = 0;
  int nonzero_odd = 0;
  int max_nonzero_index = -1;
  PdVerdict verdict = PdVerdict::PolynomialLike;
};

// Counts coefficients with a_n^2 above a relative threshold. "Infinitely many"
// is undecidable from a finite expansion; >= 3 per parity is the reported
// heuristic proxy, clearly labeled as such.
inline PdDiagnostic pd_diagnostic(const HermiteExpansion& expansion) {
  PdDiagnostic d;
  const double threshold = 1e-10 * expansion.mass();
  for (int n = 0; n < static_cast<int>(expansion.coefficients.size()); ++n) {
    const double a2 = expansion.coefficients[n] * expansion.coefficients[n];
    if (a2 > threshold) {
      (n % 2 == 0 ? d.nonzero_even : d.nonzero_odd) += 1;
      d.max_nonzero_index = n;
    }
  }
  if (d.nonzero_even >= 3 && d.nonzero_odd >= 3) {
    d.verdict = PdVerdict::ConsistentWithStrictPd;
  } else if (d.max_nonzero_index < expansion.truncation_N / 2) {
    d.verdict = PdVerdict::PolynomialLike;
  } else {
    d.verdict = PdVerdict::SingleParity;
  }
  return d;
}

// Even/odd counts after composing the dual series with the affine map
// rho(t) = (s0 + t)/(c+1) coming from the input injection. The binomial
// expansion in t has coefficients
//   b_k = sum_{n>=k} a_n^2 C(n,k) s0^{n-k} / (c+1)^n,
// all nonnegative; s0 defaults to the diagonal value c (the self-consistent
// point), which breaks the parity of odd activations the same way the
// injection term does in the limit-kernel series.
inline PdDiagnostic composed_pd_counts(const HermiteExpansion& expansion, double s0) {
  const int N = expansion.truncation_N;
  const double cp1 = expansion.scale_c + 1.0;
  std::vector<double> b(N + 1, 0.0);
  for (int n = 0; n <= N; ++n) {
    const double a2 = expansion.coefficients[n] * expansion.coefficients[n];
    if (a2 == 0.0) continue;
    // binom(n,k) s0^{n-k} / (c+1)^n accumulated by downward recurrence
    double term = a2 / std::pow(cp1, n);  // k = n term: C(n,n) s0^0
    b[n] += term;
    for (int k = n - 1; k >= 0; --k) {
      term *= s0 * (k + 1) / static_cast<double>(n - k);
      b[k] += term;
    }
  }
  PdDiagnostic d;
  double mass = 0.0;
  for (double v : b) mass += v;
  const double threshold = 1e-10 * mass;
  for (int k = 0; k <= N; ++k)
    if (b[k] > threshold) {
      (k % 2 == 0 ? d.nonzero_even : d.nonzero_odd) += 1;
      d.max_nonzero_index = k;
    }
  if (d.nonzero_even >= 3 && d.nonzero_odd >= 3)
    d.verdict = PdVerdict::ConsistentWithStrictPd;
  else if (d.max_nonzero_index < N / 2)
    d.verdict = PdVerdict::PolynomialLike;
  else
    d.verdict = PdVerdict::SingleParity;
  return d;
}

// Residual of the limit-kernel self-consistency series
//   Sigma*(x,x') = sigma_w^2 sum a_n^2 ((Sigma*(x,x') + <x,x'>)/(c+1))^n .
// A verification device, not a solver: feed it values produced by
// limit_kernel and expect a small residual.
inline double sigma_star_series_residual(const HermiteExpansion& expansion,
                                         double sigma1_entry, double sigma_star_entry,
                                         double c, double sigma_w) {
  const double rho = (sigma_star_entry + sigma1_entry) / (c + 1.0);
  if (std::abs(rho) > 1.0 + 1e-12)
    throw std::domain_error("sigma_star_series: |Sigma* + <x,x'>| exceeds c+1");
  const double series = dual_kernel_eval(expansion, std::clamp(rho, -1.0, 1.0));
  return std::abs(sigma_star_entry - sigma_w * sigma_w * series);
}

}  // namespace deqgp
