#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "deqgp/dataset.hpp"
#include "deqgp/gp.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace deqgp;

namespace {

ExperimentConfig tanh_config(int n_in) {
  ExperimentConfig config;
  config.model = ModelConfig::defaults(n_in);
  return config;
}

}  // namespace

TEST_CASE("one-hot targets") {
  Eigen::VectorXi labels(3);
  labels << 0, 2, 1;
  const Eigen::MatrixXd Y = one_hot_targets(labels, 4);
  CHECK(Y(0, 0) == Catch::Approx(0.75));
  CHECK(Y(0, 1) == Catch::Approx(-0.25));
  const Eigen::MatrixXd raw = one_hot_targets(labels, 4, false);
  CHECK(raw(1, 2) == 1.0);
  CHECK(raw(1, 0) == 0.0);
  Eigen::VectorXi bad(1);
  bad << 7;
  CHECK_THROWS_AS(one_hot_targets(bad, 4), DataError);
}

TEST_CASE("deduplication keeps the majority label") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 0, 0, 1, 1, 0, 1, 0, 0, 1;
  Eigen::VectorXi labels(5);
  labels << 3, 1, 3, 2, 1;
  deduplicate(X, labels);
  REQUIRE(X.rows() == 2);
  CHECK(labels(0) == 3);  // (1,0) voted 3,3,2 -> 3
  CHECK(labels(1) == 1);
}

TEST_CASE("identity kernel predicts K_cross * Y") {
  const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(6, 6);
  Eigen::MatrixXd Kc(2, 6);
  Kc.setRandom();
  Eigen::MatrixXd Y(6, 3);
  Y.setRandom();
  const GpPosterior post = gp_predict(K, Kc, Y);
  CHECK((post.predictions - Kc * Y).norm() <= 1e-12);
  CHECK(post.jitter_used == 0.0);
}

TEST_CASE("noiseless gp interpolates on a strictly PD kernel") {
  const auto config = tanh_config(10);
  const auto curve = isotropic::SigmaStarCurve::build(config);
  const Eigen::MatrixXd X = oracles::random_unit_rows(20, 10, 15);
  const Eigen::MatrixXd K = curve.gram(X, X);
  Eigen::VectorXi labels(20);
  for (int i = 0; i < 20; ++i) labels(i) = i % 4;
  const Eigen::MatrixXd Y = one_hot_targets(labels, 4);

  const GpPosterior post = gp_predict(K, K, Y);
  CHECK(post.jitter_used <= 1e-10);
  CHECK((post.predictions - Y).cwiseAbs().maxCoeff() <= 1e-6);

  // a test point that coincides with a training point inherits its label
  const Eigen::MatrixXd K_cross = curve.gram(X.topRows(3), X);
  const GpPosterior post2 = gp_predict(K, K_cross, Y);
  const Eigen::VectorXi pred = argmax_rows(post2.predictions);
  for (int i = 0; i < 3; ++i) CHECK(pred(i) == labels(i));
}

TEST_CASE("scale coherence of the noiseless mean") {
  const auto config = tanh_config(8);
  const auto curve = isotropic::SigmaStarCurve::build(config);
  const Eigen::MatrixXd X = oracles::random_unit_rows(12, 8, 19);
  const Eigen::MatrixXd Xt = oracles::random_unit_rows(5, 8, 20);
  const Eigen::MatrixXd K = curve.gram(X, X);
  const Eigen::MatrixXd Kc = curve.gram(Xt, X);
  Eigen::VectorXi labels(12);
  for (int i = 0; i < 12; ++i) labels(i) = i % 3;
  const Eigen::MatrixXd Y = one_hot_targets(labels, 3);

  const GpPosterior base = gp_predict(K, Kc, Y, {0.0});
  const GpPosterior scaled = gp_predict(5.0 * K, 5.0 * Kc, Y, {0.0});
  CHECK((base.predictions - scaled.predictions).cwiseAbs().maxCoeff() <= 1e-9);

  // argmax invariance with jitter scaled by the same constant
  const GpPosterior j1 = gp_predict(K, Kc, Y, {1e-6});
  const GpPosterior j2 = gp_predict(5.0 * K, 5.0 * Kc, Y, {5e-6});
  CHECK(argmax_rows(j1.predictions) == argmax_rows(j2.predictions));
}

TEST_CASE("jitter schedule exhaustion reports lambda_min") {
  const Eigen::MatrixXd K = -Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd Y = Eigen::MatrixXd::Ones(4, 1);
  try {
    gp_predict(K, K, Y);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("lambda_min") != std::string::npos);
  }
}

TEST_CASE("gp_predict shape preconditions") {
  const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(4, 4);
  Eigen::MatrixXd notsym = K;
  notsym(0, 1) = 0.5;
  const Eigen::MatrixXd Y = Eigen::MatrixXd::Ones(4, 2);
  CHECK_THROWS_AS(gp_predict(notsym, K, Y), std::invalid_argument);
  CHECK_THROWS_AS(gp_predict(K, Eigen::MatrixXd::Ones(2, 5), Y), std::invalid_argument);
  CHECK_THROWS_AS(gp_predict(K, K, Eigen::MatrixXd::Ones(3, 2)), std::invalid_argument);
}

TEST_CASE("evaluation metrics") {
  Eigen::MatrixXd pred(3, 3);
  pred << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  Eigen::VectorXi labels(3);
  labels << 0, 1, 2;
  CHECK(accuracy(pred, labels) == 1.0);
  CHECK(mean_squared_error(pred, pred) == 0.0);

  // random predictions on 10 classes hover near chance
  rng::Xoshiro256 engine(404);
  const int m = 10000;
  Eigen::MatrixXd random_scores(m, 10);
  Eigen::VectorXi random_labels(m);
  for (int i = 0; i < m; ++i) {
    random_labels(i) = static_cast<int>(engine.next_u64() % 10);
    for (int j = 0; j < 10; ++j) random_scores(i, j) = engine.next_unit();
  }
  const double acc = accuracy(random_scores, random_labels);
  CHECK(acc >= 0.08);
  CHECK(acc <= 0.12);
}

TEST_CASE("nngp beats the linear baseline on the cluster task") {
  const auto dir = std::filesystem::temp_directory_path() / "deqgp_gp_tests";
  std::filesystem::create_directories(dir);
  synth::ClusterTask task(12, 5);  // 144-dim images
  const auto train_files = task.write_split(dir, "train", 240, 101);
  const auto test_files = task.write_split(dir, "test", 240, 202);
  Dataset train = load_mnist_idx(train_files.images, train_files.labels);
  Dataset test = load_mnist_idx(test_files.images, test_files.labels);

  const auto config = tanh_config(train.dim());
  const InferenceResult nngp = nngp_inference(config, train, test, 10);
  const InferenceResult linear = linear_inference(config, train, test, 10);

  CHECK(nngp.accuracy > 0.1);
  CHECK(nngp.accuracy > linear.accuracy);
  CHECK(nngp.mse < linear.mse);
}

TEST_CASE("feature ridge approaches the nngp accuracy with width") {
  const auto dir = std::filesystem::temp_directory_path() / "deqgp_gp_tests";
  std::filesystem::create_directories(dir);
  synth::ClusterTask task(12, 5);
  const auto train_files = task.write_split(dir, "ftr-train", 300, 301);
  const auto test_files = task.write_split(dir, "ftr-test", 300, 302);
  Dataset train = load_mnist_idx(train_files.images, train_files.labels);
  Dataset test = load_mnist_idx(test_files.images, test_files.labels);

  const auto config = tanh_config(train.dim());
  const double nngp_acc = nngp_inference(config, train, test, 10).accuracy;

  std::vector<double> gaps;
  for (int width : {64, 256, 1024}) {
    std::vector<double> accs;
    for (std::uint64_t seed : {11u, 12u, 13u})
      accs.push_back(
          feature_ridge_inference(config, train, test, 10, width, seed).accuracy);
    std::sort(accs.begin(), accs.end());
    gaps.push_back(std::abs(nngp_acc - accs[1]));  // median over 3 seeds
  }
  // the untrained-feature baseline approaches the NNGP accuracy (weak proxy
  // for the trained-DEQ trend, see report labeling)
  CHECK(gaps[2] <= gaps[0] + 1e-12);
  CHECK(gaps[2] <= gaps[1] + 0.02);
}
