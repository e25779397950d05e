#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deqgp/dataset.hpp"
#include "deqgp/errors.hpp"
#include "deqgp/kernel.hpp"
#include "deqgp/simulator.hpp"

namespace deqgp {

// One-hot targets, mean-centered by subtracting 1/n_classes (the standard
// NNGP classification readout; pass centered = false for raw one-hot).
inline Eigen::MatrixXd one_hot_targets(const Eigen::VectorXi& labels, int n_classes,
                                       bool centered = true) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(labels.size(), n_classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) < 0 || labels(i) >= n_classes)
      throw DataError("label " + std::to_string(labels(i)) + " out of range at row " +
                      std::to_string(i));
    Y(i, labels(i)) = 1.0;
  }
  if (centered) Y.array() -= 1.0 / n_classes;
  return Y;
}

// Exact-duplicate training rows make K_train singular (the theory requires
// pairwise distinct points); collapse them by majority label vote.
inline void deduplicate(Eigen::MatrixXd& X, Eigen::VectorXi& labels) {
  std::map<std::vector<double>, std::map<int, int>> votes;
  std::vector<std::vector<double>> order;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> key(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) key[j] = X(i, j);
    if (votes.find(key) == votes.end()) order.push_back(key);
    votes[key][labels(i)] += 1;
  }
  if (order.size() == static_cast<std::size_t>(X.rows())) return;
  Eigen::MatrixXd Xd(order.size(), X.cols());
  Eigen::VectorXi ld(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) Xd(i, j) = order[i][j];
    int best_label = -1, best_count = -1;
    for (const auto& [label, count] : votes[order[i]])
      if (count > best_count) { best_count = count; best_label = label; }
    ld(i) = best_label;
  }
  X = std::move(Xd);
  labels = std::move(ld);
}

struct GpPosterior {
  Eigen::MatrixXd train_chol;   // L of LL^T = K_train + jitter I
  Eigen::MatrixXd alpha;        // (K_train + jitter I)^{-1} Y
  double jitter_used = 0.0;
  Eigen::MatrixXd predictions;  // test mean, N_test x n_targets
};

inline std::vector<double> default_jitter_schedule() {
  return {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
}

// Noiseless GP mean predictor K_cross (K_train + jI)^{-1} Y via Cholesky.
// The jitter escalates through the schedule until the factorization succeeds
// AND the solve residual is below 1e-8 |Y|; exhaustion reports the smallest
// eigenvalue of K_train.
inline GpPosterior gp_predict(const Eigen::MatrixXd& K_train, const Eigen::MatrixXd& K_cross,
                              const Eigen::MatrixXd& Y_train,
                              const std::vector<double>& jitter_schedule =
                                  default_jitter_schedule()) {
  if (K_train.rows() != K_train.cols())
    throw std::invalid_argument("gp_predict: K_train must be square");
  if (!K_train.isApprox(K_train.transpose(), 1e-12))
    throw std::invalid_argument("gp_predict: K_train must be symmetric");
  if (K_cross.cols() != K_train.rows())
    throw std::invalid_argument("gp_predict: K_cross must be N_test x N_train");
  if (Y_train.rows() != K_train.rows())
    throw std::invalid_argument("gp_predict: Y_train row count mismatch");

  const double y_norm = Y_train.norm();
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double jitter : jitter_schedule) {
    Eigen::MatrixXd K = K_train;
    K.diagonal().array() += jitter;
    llt.compute(K);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd alpha = llt.solve(Y_train);
    const double residual = (K * alpha - Y_train).norm();
    if (residual > 1e-8 * std::max(y_norm, 1e-300)) continue;
    GpPosterior posterior;
    posterior.train_chol = llt.matrixL();
    posterior.alpha = std::move(alpha);
    posterior.jitter_used = jitter;
    posterior.predictions = K_cross * posterior.alpha;
    return posterior;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K_train, Eigen::EigenvaluesOnly);
  throw NumericalError(
      "gp_predict: jitter schedule exhausted; K_train is not numerically PD "
      "(lambda_min estimate " + std::to_string(es.eigenvalues().minCoeff()) + ")");
}

inline Eigen::VectorXi argmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::VectorXi out(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best;
    scores.row(i).maxCoeff(&best);
    out(i) = static_cast<int>(best);
  }
  return out;
}

inline double accuracy(const Eigen::MatrixXd& predictions, const Eigen::VectorXi& labels) {
  if (predictions.rows() != labels.size())
    throw std::invalid_argument("accuracy: shape mismatch");
  const Eigen::VectorXi pred = argmax_rows(predictions);
  double correct = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (pred(i) == labels(i)) correct += 1.0;
  return correct / static_cast<double>(labels.size());
}

inline double mean_squared_error(const Eigen::MatrixXd& predictions,
                                 const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw std::invalid_argument("mean_squared_error: shape mismatch");
  return (predictions - targets).squaredNorm() /
         static_cast<double>(predictions.rows() * predictions.cols());
}

struct InferenceResult {
  Eigen::MatrixXd predictions;
  double accuracy = 0.0;
  double mse = 0.0;
  double jitter_used = 0.0;
};

// End-to-end NNGP classification with a given kernel Gram function.
template <typename GramFn>
InferenceResult kernel_inference(const Dataset& train, const Dataset& test, int n_classes,
                                 GramFn&& gram, bool centered_targets = true) {
  Eigen::MatrixXd X = train.inputs;
  Eigen::VectorXi labels = train.labels;
  deduplicate(X, labels);
  const Eigen::MatrixXd Y = one_hot_targets(labels, n_classes, centered_targets);
  const Eigen::MatrixXd K_train = gram(X, X);
  const Eigen::MatrixXd K_cross = gram(test.inputs, X);
  const GpPosterior posterior = gp_predict(K_train, K_cross, Y);
  InferenceResult result;
  result.predictions = posterior.predictions;
  result.jitter_used = posterior.jitter_used;
  result.accuracy = accuracy(posterior.predictions, test.labels);
  result.mse = mean_squared_error(posterior.predictions,
                                  one_hot_targets(test.labels, n_classes, centered_targets));
  return result;
}

// NNGP with the limiting kernel Sigma* (isotropic fast path).
inline InferenceResult nngp_inference(const ExperimentConfig& config, const Dataset& train,
                                      const Dataset& test, int n_classes) {
  const isotropic::SigmaStarCurve curve = isotropic::SigmaStarCurve::build(config);
  return kernel_inference(train, test, n_classes,
                          [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
                            return curve.gram(A, B);
                          });
}

// Sigma^1-only baseline: the same pipeline on the linear kernel.
inline InferenceResult linear_inference(const ExperimentConfig& config, const Dataset& train,
                                        const Dataset& test, int n_classes) {
  const double scale = config.model.sigma_u * config.model.sigma_u /
                       static_cast<double>(train.inputs.cols());
  return kernel_inference(train, test, n_classes,
                          [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
                            return Eigen::MatrixXd(scale * A * B.transpose());
                          });
}

// Untrained-feature baseline: ridge regression on the fixed-point features
// h*(x) of one random finite-width network (the desk-scale proxy for the
// trained-DEQ comparison; the kernel is <h*_i, h*_j>/width).
inline InferenceResult feature_ridge_inference(const ExperimentConfig& config,
                                               const Dataset& train, const Dataset& test,
                                               int n_classes, int width, std::uint64_t seed,
                                               double ridge = 1e-6) {
  ModelConfig model = config.model;
  model.width = width;
  const NetworkParams params = init_params(model, seed);
  auto features = [&](const Eigen::MatrixXd& X) {
    Eigen::MatrixXd H(X.rows(), width);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      H.row(i) = forward_fixed_point(params, X.row(i).transpose()).h_star.transpose();
    return H;
  };
  Eigen::MatrixXd Xtr = train.inputs;
  Eigen::VectorXi labels = train.labels;
  deduplicate(Xtr, labels);
  const Eigen::MatrixXd Htr = features(Xtr);
  const Eigen::MatrixXd Hte = features(test.inputs);
  const Eigen::MatrixXd Y = one_hot_targets(labels, n_classes);
  const Eigen::MatrixXd K_train =
      (Htr * Htr.transpose() / static_cast<double>(width)).eval();
  const Eigen::MatrixXd K_cross = Hte * Htr.transpose() / static_cast<double>(width);
  const GpPosterior posterior = gp_predict(K_train, K_cross, Y, {ridge, 1e-4, 1e-2});
  InferenceResult result;
  result.predictions = posterior.predictions;
  result.jitter_used = posterior.jitter_used;
  result.accuracy = accuracy(posterior.predictions, test.labels);
  result.mse = mean_squared_error(posterior.predictions, one_hot_targets(test.labels, n_classes));
  return result;
}

}  // namespace deqgp
