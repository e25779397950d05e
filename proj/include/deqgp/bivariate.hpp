#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "deqgp/activation.hpp"
#include "deqgp/errors.hpp"
#include "deqgp/quadrature.hpp"

namespace deqgp {

struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Covariance of the centered bivariate Gaussian (u, v) feeding E[phi(u)phi(v)].
struct BivariateGaussianSpec {
  double var_a = 1.0;
  double var_b = 1.0;
  double cov = 0.0;

  // Cauchy-Schwarz slack absorbs accumulated floating error from the kernel
  // recursion; anything beyond it is a genuine caller bug.
  static constexpr double kSlack = 1e-12;

  BivariateGaussianSpec validated() const {
    if (!(var_a >= 0.0) || !(var_b >= 0.0))
      throw std::invalid_argument("bivariate spec: variances must be >= 0");
    const double bound = std::sqrt(var_a * var_b);
    if (std::abs(cov) > bound + kSlack)
      throw std::invalid_argument("bivariate spec: |cov| exceeds sqrt(var_a*var_b)");
    BivariateGaussianSpec out = *this;
    out.cov = std::clamp(cov, -bound, bound);
    return out;
  }
};

namespace detail {

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * 0.3989422804014327;  // 1/sqrt(2*pi)
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.7071067811865476);
}

// E[relu(N(m, s^2))]
inline double relu_gaussian_mean(double m, double s) {
  if (s <= 0.0) return m > 0.0 ? m : 0.0;
  const double t = m / s;
  return m * normal_cdf(t) + s * normal_pdf(t);
}

// Half-line panels covering the effective support of the N(0,1) weight.
template <typename F>
double integrate_half_line(F&& f, int order) {
  static const double cuts[] = {0.0, 2.0, 5.0, 9.0, 13.0};
  double acc = 0.0;
  for (int p = 0; p + 1 < 5; ++p)
    acc += quadrature::integrate_segment(f, cuts[p], cuts[p + 1], order);
  return acc;
}

// ReLU expectation: the inner conditional integral is elementary, the outer
// one runs over the kink-free half line. Plain tensor Gauss-Hermite loses
// ~1e-3 across the kink, far too coarse for the closed-form cross-checks.
inline double relu_bivariate(const BivariateGaussianSpec& spec, int order) {
  const double l11 = std::sqrt(spec.var_a);
  const double l21 = spec.cov / l11;
  const double rem = spec.var_b - l21 * l21;
  const double l22 = rem > 0.0 ? std::sqrt(rem) : 0.0;
  const int panel_order = std::clamp(order, 32, 200);
  auto integrand = [&](double z) {
    return l11 * z * relu_gaussian_mean(l21 * z, l22) * normal_pdf(z);
  };
  return integrate_half_line(integrand, panel_order);
}

inline double relu_univariate_mean_sq(double var, int order) {
  // E[relu(u)^2], u ~ N(0, var): half-line integral of u^2.
  const double s = std::sqrt(var);
  const int panel_order = std::clamp(order, 32, 200);
  auto integrand = [&](double z) {
    const double u = s * z;
    return u * u * normal_pdf(z);
  };
  return integrate_half_line(integrand, panel_order);
}

// E[erf(a (m + s w))], w ~ N(0,1) -- elementary Gaussian-erf identity.
inline double erf_gaussian_mean(double a, double m, double s) {
  return std::erf(a * m / std::sqrt(1.0 + 2.0 * a * a * s * s));
}

// Erf expectation with the inner conditional integral in closed form and the
// outer integral on panels refined around the erf transition scales. Plain
// Gauss-Hermite cannot resolve erf of a large-variance argument (the
// integrand approaches a step), and the closed-form contract covers
// variances up to 1e2.
template <typename F>
double integrate_line_with_scales(F&& f, std::initializer_list<double> sharp_scales,
                                  int order) {
  std::vector<double> cuts = {-13.0, -9.0, -5.0, -2.0, 0.0, 2.0, 5.0, 9.0, 13.0};
  for (double scale : sharp_scales) {
    if (scale <= 1.5) continue;  // resolved by the base panels already
    for (double step : {0.5, 1.0, 2.0, 3.0, 4.0, 6.0}) {
      cuts.push_back(step / scale);
      cuts.push_back(-step / scale);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-6; }),
             cuts.end());
  double acc = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
    if (cuts[p] >= -13.0 && cuts[p + 1] <= 13.0)
      acc += quadrature::integrate_segment(f, cuts[p], cuts[p + 1], order);
  return acc;
}

inline double erf_bivariate(const BivariateGaussianSpec& spec, int order) {
  const double a = kErfScale;
  const double l11 = std::sqrt(spec.var_a);
  const double l21 = spec.cov / l11;
  const double rem = spec.var_b - l21 * l21;
  const double l22 = rem > 0.0 ? std::sqrt(rem) : 0.0;
  const double denom = std::sqrt(1.0 + 2.0 * a * a * l22 * l22);
  const int panel_order = std::clamp(order, 32, 200);
  auto integrand = [&](double z) {
    return std::erf(a * l11 * z) * std::erf(a * l21 * z / denom) * normal_pdf(z);
  };
  return integrate_line_with_scales(integrand, {a * l11, std::abs(a * l21) / denom},
                                    panel_order);
}

}  // namespace detail

// E_{N(0,var)}[phi(u)] by 1-D quadrature.
inline double gaussian_expectation(const Activation& phi, double var, int order) {
  if (var <= 0.0) return phi(0.0);
  const double s = std::sqrt(var);
  if (phi.has_kink_at_zero()) {
    const int panel_order = std::clamp(order, 32, 200);
    return detail::integrate_half_line(
        [&](double z) { return phi(s * z) * detail::normal_pdf(z); }, panel_order);
  }
  const auto& rule = quadrature::gauss_hermite(order);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * phi(s * rule.nodes[i]);
  return acc;
}

// E[phi(u) phi(v)] for (u,v) centered bivariate Gaussian. Smooth activations
// use tensor-product Gauss-Hermite on the Cholesky factorization; a zero
// variance collapses the corresponding axis to phi(0); a degenerate
// (perfectly correlated) spec falls back to the rank-1 1-D integral; ReLU
// routes through the kink-aware half-line scheme.
inline double bivariate_expectation(const Activation& phi, const BivariateGaussianSpec& raw,
                                    int order) {
  if (order < 2) throw std::invalid_argument("bivariate_expectation: order must be >= 2");
  const BivariateGaussianSpec spec = raw.validated();

  if (spec.var_a == 0.0 && spec.var_b == 0.0) {
    const double p0 = phi(0.0);
    return p0 * p0;
  }
  if (spec.var_a == 0.0) return phi(0.0) * gaussian_expectation(phi, spec.var_b, order);
  if (spec.var_b == 0.0) return phi(0.0) * gaussian_expectation(phi, spec.var_a, order);

  if (phi.kind() == ActivationKind::ReLU) {
    if (spec.var_b * 1e-14 >= spec.var_b - spec.cov * spec.cov / spec.var_a) {
      // rank-1: v = (cov/var_a) u
      const double slope = spec.cov / spec.var_a;
      if (slope <= 0.0) return 0.0;
      return slope * detail::relu_univariate_mean_sq(spec.var_a, order);
    }
    return detail::relu_bivariate(spec, order);
  }
  if (phi.kind() == ActivationKind::Erf) return detail::erf_bivariate(spec, order);

  const double l11 = std::sqrt(spec.var_a);
  const double l21 = spec.cov / l11;
  const double rem = spec.var_b - l21 * l21;
  const auto& rule = quadrature::gauss_hermite(order);
  const std::size_t n = rule.nodes.size();

  if (rem <= 1e-14 * spec.var_b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += rule.weights[i] * phi(l11 * rule.nodes[i]) * phi(l21 * rule.nodes[i]);
    return acc;
  }

  const double l22 = std::sqrt(rem);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = l11 * rule.nodes[i];
    const double pu = phi(u);
    const double mean_v = l21 * rule.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      inner += rule.weights[j] * phi(mean_v + l22 * rule.nodes[j]);
    acc += rule.weights[i] * pu * inner;
  }
  return acc;
}

// Closed forms for the activations that have one; the quadrature path above
// must agree with these to 1e-8 (they are validated against each other and
// against Monte Carlo in the tests).
inline double closed_form_expectation(const Activation& phi,
                                      const BivariateGaussianSpec& raw) {
  const BivariateGaussianSpec spec = raw.validated();
  switch (phi.kind()) {
    case ActivationKind::Identity:
      return spec.cov;
    case ActivationKind::ReLU: {
      const double denom = std::sqrt(spec.var_a * spec.var_b);
      if (denom == 0.0) return 0.0;
      const double rho = std::clamp(spec.cov / denom, -1.0, 1.0);
      const double pi = 3.14159265358979323846;
      return denom / (2.0 * pi) *
             (std::sqrt(std::max(0.0, 1.0 - rho * rho)) + rho * (pi - std::acos(rho)));
    }
    case ActivationKind::Erf: {
      // E[erf(a u) erf(a v)] = (2/pi) asin(2 a^2 cov / sqrt((1+2a^2 va)(1+2a^2 vb)))
      const double a2 = kErfScale * kErfScale;
      const double arg = 2.0 * a2 * spec.cov /
                         std::sqrt((1.0 + 2.0 * a2 * spec.var_a) * (1.0 + 2.0 * a2 * spec.var_b));
      const double pi = 3.14159265358979323846;
      return 2.0 / pi * std::asin(std::clamp(arg, -1.0, 1.0));
    }
    default:
      throw CapabilityError("no closed form for activation '" + phi.name() + "'");
  }
}

}  // namespace deqgp
