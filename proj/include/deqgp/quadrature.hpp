#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "deqgp/errors.hpp"

namespace deqgp::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 * (first eigenvector component)^2.
inline Rule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& subdiag,
                         double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw NumericalError("quadrature eigensolver failed");
  const int n = static_cast<int>(diag.size());
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

inline const Rule& cached(std::map<int, std::unique_ptr<Rule>>& cache, std::mutex& mutex,
                          int order, Rule (*build)(int)) {
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end())
    it = cache.emplace(order, std::make_unique<Rule>(build(order))).first;
  return *it->second;
}

}  // namespace detail

namespace detail {

// Normalized probabilists' Hermite values h_0..h_n at x (h_k' = sqrt(k) h_{k-1}).
inline void hermite_column(double x, int n, std::vector<double>& out) {
  out.resize(n + 1);
  out[0] = 1.0;
  if (n >= 1) out[1] = x;
  for (int k = 1; k < n; ++k)
    out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
}

}  // namespace detail

// Probabilists' Gauss-Hermite rule normalized against N(0,1):
// E[f(z)] ~= sum_i w_i f(x_i), sum w_i = 1. Eigensolver nodes are polished by
// Newton steps on h_order and the weights come from the Christoffel identity
// w_i = 1 / sum_k h_k(x_i)^2; the eigenvector-based weights lose all relative
// accuracy at the edge nodes (true values ~1e-70), which would poison
// integrands that grow like high-degree Hermite polynomials.
inline const Rule& gauss_hermite(int order) {
  if (order < 1) throw NumericalError("gauss_hermite order must be >= 1");
  if (order > 350) throw NumericalError("gauss_hermite order above 350 would overflow");
  static std::map<int, std::unique_ptr<Rule>> cache;
  static std::mutex mutex;
  return detail::cached(cache, mutex, order, [](int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1 > 0 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    Rule rule = detail::golub_welsch(diag, sub, 1.0);
    std::vector<double> h;
    for (int i = 0; i < n; ++i) {
      double x = rule.nodes[i];
      for (int step = 0; step < 3; ++step) {
        detail::hermite_column(x, n, h);
        const double deriv = std::sqrt(static_cast<double>(n)) * h[n - 1];
        if (deriv == 0.0) break;
        x -= h[n] / deriv;
      }
      detail::hermite_column(x, n - 1, h);
      double christoffel = 0.0;
      for (int k = 0; k < n; ++k) christoffel += h[k] * h[k];
      rule.nodes[i] = x;
      rule.weights[i] = 1.0 / christoffel;
    }
    return rule;
  });
}

// Gauss-Legendre on [-1,1], total weight 2.
inline const Rule& gauss_legendre(int order) {
  if (order < 1) throw NumericalError("gauss_legendre order must be >= 1");
  static std::map<int, std::unique_ptr<Rule>> cache;
  static std::mutex mutex;
  return detail::cached(cache, mutex, order, [](int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1 > 0 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) {
      const double kk = static_cast<double>(k);
      sub(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
    }
    return detail::golub_welsch(diag, sub, 2.0);
  });
}

// integral of f over [a,b] by Gauss-Legendre of the given order.
template <typename F>
double integrate_segment(F&& f, double a, double b, int order) {
  const Rule& rule = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * acc;
}

}  // namespace deqgp::quadrature
