// Experiment runner: every library module behind one subcommand each.
// Exit codes: 0 ok, 1 config error, 2 data error, 3 numerical error,
// 4 non-convergence.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deqgp/deqgp.hpp"

namespace fs = std::filesystem;
using namespace deqgp;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = default_threads();
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value with [sections])");
  cmd->add_option("--out-dir", opts.out_dir,
                  "output directory (default: runs/<kind>-<stamp>-<hash>)");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--threads", opts.threads, "worker threads");
  cmd->add_flag("--force", opts.force, "run even when the contraction condition fails");
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig config =
      opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (opts.seed) config.model.seed = *opts.seed;
  config.validate();
  return config;
}

fs::path resolve_out_dir(const CommonOptions& opts, const std::string& kind,
                         const ExperimentConfig& config) {
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    return opts.out_dir;
  }
  const fs::path dir = io::make_run_dir("runs", kind, config);
  return dir;
}

void finish_run(const CommonOptions& opts, const fs::path& dir,
                io::ExperimentReport& report,
                std::chrono::steady_clock::time_point started) {
  report.wall_time_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  io::write_text_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
  if (opts.out_dir.empty()) io::update_latest_pointer("runs", dir);
  std::cout << "wrote " << (dir / "report.json").string() << "\n";
}

// Plain numeric matrix file: one row per line, comma or whitespace separated.
Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream fields(line);
    std::vector<double> row;
    double value;
    while (fields >> value) row.push_back(value);
    if (!fields.eof())
      throw DataError(path + ": non-numeric token at line " + std::to_string(lineno));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no rows");
  Eigen::MatrixXd out(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw DataError(path + ": ragged row at line " + std::to_string(i + 1));
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

Eigen::MatrixXd random_unit_inputs(int count, int dim, std::uint64_t seed) {
  rng::GaussianSampler g(rng::derive_stream_seed(seed, 0x696e7075ULL));
  Eigen::MatrixXd X(count, dim);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < dim; ++j) X(i, j) = g.next();
    X.row(i) /= X.row(i).norm();
  }
  return X;
}

std::string csv_line(std::initializer_list<std::string> fields) {
  std::string out;
  for (const auto& f : fields) {
    if (!out.empty()) out += ',';
    out += f;
  }
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------
int cmd_simulate(const CommonOptions& opts, const std::string& input_path, bool random_input) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);
  const ModelConfig& model = config.model;

  if (!contraction_ok(model) && !opts.force)
    throw ConfigError("gamma = " + std::to_string(contraction_gamma(model)) +
                      " >= 1: the fixed point is not provably unique. "
                      "Pass --force to iterate anyway.");

  Eigen::VectorXd x;
  if (!input_path.empty()) {
    const Eigen::MatrixXd m = read_matrix_file(input_path);
    if (m.rows() != 1 && m.cols() != 1)
      throw DataError("--input must contain a single vector");
    x = m.rows() == 1 ? Eigen::VectorXd(m.row(0).transpose()) : Eigen::VectorXd(m.col(0));
    if (x.size() != model.n_in)
      throw DataError("--input has dimension " + std::to_string(x.size()) + ", config n_in = " +
                      std::to_string(model.n_in));
    x.normalize();
  } else if (random_input) {
    x = random_unit_inputs(1, model.n_in, model.seed).row(0).transpose();
  } else {
    throw ConfigError("simulate needs --input FILE or --random-input");
  }

  const NetworkParams params = init_params(model, model.seed);
  FixedPointResult result;
  bool diverged = false;
  std::string divergence_message;
  try {
    result = forward_fixed_point(params, x);
  } catch (const NonConvergenceError& e) {
    diverged = true;
    divergence_message = e.what();
    result.residual_trace = e.trace;
    result.iterations = static_cast<int>(e.trace.size());
  }

  const fs::path dir = resolve_out_dir(opts, "simulate", config);
  std::string trace_csv = "iteration,relative_residual\n";
  for (std::size_t i = 0; i < result.residual_trace.size(); ++i)
    trace_csv += std::to_string(i + 1) + "," + io::format_double(result.residual_trace[i]) + "\n";
  io::write_text_atomic(dir / "residual_trace.csv", trace_csv);

  io::ExperimentReport report;
  report.kind = "simulate";
  report.config = config;
  report.seeds = {model.seed};
  report.outputs = {{"residual_trace", "residual_trace.csv"},
                    {"converged", result.converged},
                    {"iterations", result.iterations},
                    {"gamma", contraction_gamma(model)},
                    {"final_residual",
                     result.residual_trace.empty() ? 0.0 : result.residual_trace.back()}};
  if (diverged) report.outputs["divergence"] = divergence_message;
  finish_run(opts, dir, report, started);

  if (diverged) throw NonConvergenceError(divergence_message, result.residual_trace);
  if (!result.converged)
    throw NonConvergenceError("fixed point did not reach tol " + std::to_string(model.fp_tol) +
                                  " in " + std::to_string(model.fp_max_iter) + " iterations",
                              result.residual_trace);
  return 0;
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------
int cmd_kernel(const CommonOptions& opts, const std::string& inputs_path, std::string mode,
               int depth, int width, bool normalize) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);

  Eigen::MatrixXd X;
  if (!inputs_path.empty()) {
    X = read_matrix_file(inputs_path);
    if (X.cols() != config.model.n_in)
      throw DataError("inputs have dimension " + std::to_string(X.cols()) + ", config n_in = " +
                      std::to_string(config.model.n_in));
    if (normalize)
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double norm = X.row(i).norm();
        if (norm <= 0.0) throw DataError("input row " + std::to_string(i) + " has zero norm");
        X.row(i) /= norm;
      }
  } else {
    X = random_unit_inputs(8, config.model.n_in, config.model.seed);
  }

  KernelMatrix kernel;
  nlohmann::json extra;
  if (mode == "recursion") {
    kernel = sigma_depth(X, config, depth);
  } else if (mode == "limit") {
    auto result = limit_kernel(X, config, config.kernel_tol, config.kernel_max_steps, opts.force);
    extra["steps"] = result.steps;
    extra["final_diff"] = result.diff_trace.back();
    kernel = std::move(result.kernel);
  } else if (mode == "empirical") {
    ModelConfig model = config.model;
    if (width > 0) model.width = width;
    const NetworkParams params = init_params(model, model.seed);
    kernel = depth > 0 ? empirical_kernel(params, X, EmpiricalKernelMode::Depth, depth)
                       : empirical_kernel(params, X, EmpiricalKernelMode::FixedPoint);
    extra["width"] = model.width;
  } else {
    throw ConfigError("--mode must be recursion, limit, or empirical");
  }

  const fs::path dir = resolve_out_dir(opts, "kernel", config);
  io::write_text_atomic(dir / "kernel.csv", io::kernel_csv(kernel));
  io::write_text_atomic(dir / "kernel.json", io::kernel_json(kernel).dump(2) + "\n");

  io::ExperimentReport report;
  report.kind = "kernel";
  report.config = config;
  report.seeds = {config.model.seed};
  report.outputs = {{"kernel_csv", "kernel.csv"},
                    {"kernel_json", "kernel.json"},
                    {"mode", mode},
                    {"level", kernel_level_name(kernel.level())},
                    {"depth", kernel.depth()},
                    {"inputs", static_cast<int>(X.rows())}};
  for (auto& [k, v] : extra.items()) report.outputs[k] = v;
  finish_run(opts, dir, report, started);
  return 0;
}

// ---------------------------------------------------------------------------
// gaussianity
// ---------------------------------------------------------------------------
int cmd_gaussianity(const CommonOptions& opts, std::vector<int> widths, int num_nets) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);
  if (widths.empty()) widths = {1000};

  const Eigen::VectorXd x =
      random_unit_inputs(1, config.model.n_in, config.model.seed).row(0).transpose();

  std::string table = "# one row per (width, output coordinate)\n";
  table += "width,coordinate,ks_statistic,p_value,sample_count\n";
  nlohmann::json summary = nlohmann::json::array();
  for (int width : widths) {
    ExperimentConfig c = config;
    c.model.width = width;
    const GaussianityResult result = gaussianity_experiment(c, x, num_nets, opts.threads);
    double max_corr = 0.0;
    for (int i = 0; i < result.cross_covariance.rows(); ++i)
      for (int j = 0; j < result.cross_covariance.cols(); ++j) {
        if (i == j) continue;
        max_corr = std::max(max_corr,
                            std::abs(result.cross_covariance(i, j) /
                                     std::sqrt(result.cross_covariance(i, i) *
                                               result.cross_covariance(j, j))));
      }
    for (std::size_t k = 0; k < result.per_output.size(); ++k) {
      const KsResult& ks = result.per_output[k];
      table += csv_line({std::to_string(width), std::to_string(k),
                         io::format_double(ks.statistic), io::format_double(ks.p_value),
                         std::to_string(ks.sample_count)});
    }
    summary.push_back({{"width", width},
                       {"first_output_D", result.per_output[0].statistic},
                       {"first_output_p", result.per_output[0].p_value},
                       {"failures", result.failures},
                       {"max_cross_correlation", max_corr},
                       {"theoretical_variance", result.theoretical_variance}});
    std::cout << "width " << width << ": D = " << result.per_output[0].statistic
              << ", p = " << result.per_output[0].p_value << "\n";
  }

  const fs::path dir = resolve_out_dir(opts, "gaussianity", config);
  io::write_text_atomic(dir / "ks_table.csv", table);
  io::ExperimentReport report;
  report.kind = "gaussianity";
  report.config = config;
  report.seeds = {config.model.seed};
  report.outputs = {{"ks_table", "ks_table.csv"}, {"num_nets", num_nets}, {"widths", summary}};
  finish_run(opts, dir, report, started);
  return 0;
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------
int cmd_convergence(const CommonOptions& opts, const std::string& axis, std::vector<int> widths,
                    std::vector<int> depths, int depth, int reps, int num_inputs) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);
  const Eigen::MatrixXd X =
      random_unit_inputs(num_inputs, config.model.n_in, config.model.seed);

  ConvergenceTrace trace;
  std::string header;
  nlohmann::json stats;
  if (axis == "width") {
    if (widths.empty())
      for (int k = 2; k <= 13; ++k) widths.push_back(1 << k);
    trace = width_convergence(config, X, widths, depth, reps, opts.threads);
    header = "# relative Frobenius error of the empirical kernel vs the limit kernel\n"
             "width,relative_error\n";
    stats = {{"fitted_slope", trace.fitted_slope},
             {"squared_error_slope", 2.0 * trace.fitted_slope},
             {"depth", depth},
             {"reps", reps}};
    std::cout << "fitted log-log slope = " << trace.fitted_slope
              << " (squared-error rate exponent = " << 2.0 * trace.fitted_slope << ")\n";
  } else if (axis == "depth") {
    if (depths.empty())
      for (int d = 2; d <= 40; ++d) depths.push_back(d);
    trace = depth_convergence(config, X, depths);
    header = "# relative Frobenius error of Sigma^l vs Sigma* (exact recursion)\n"
             "depth,relative_error\n";
    stats = {{"fitted_ratio", trace.fitted_ratio},
             {"beta", contraction_beta(config)}};
    std::cout << "fitted per-step ratio = " << trace.fitted_ratio << "\n";
  } else {
    throw ConfigError("--axis must be width or depth");
  }

  std::string csv = header;
  for (std::size_t i = 0; i < trace.abscissa.size(); ++i)
    csv += csv_line({io::format_double(trace.abscissa[i]), io::format_double(trace.errors[i])});

  const fs::path dir = resolve_out_dir(opts, "convergence", config);
  io::write_text_atomic(dir / "trace.csv", csv);
  io::ExperimentReport report;
  report.kind = "convergence";
  report.config = config;
  report.seeds = {config.model.seed};
  report.outputs = {{"trace", "trace.csv"}, {"axis", axis}, {"stats", stats}};
  finish_run(opts, dir, report, started);
  return 0;
}

// ---------------------------------------------------------------------------
// eigen
// ---------------------------------------------------------------------------
int cmd_eigen(const CommonOptions& opts, std::vector<int> depths, std::vector<double> sigma_ws,
              int sim_width, int num_inputs) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);
  if (depths.empty()) depths = {2, 3, 4, 5, 6, 8, 10, 12, 15};
  if (sigma_ws.empty()) sigma_ws = {0.15, 0.20, 0.25, 0.30};
  const Eigen::MatrixXd X =
      random_unit_inputs(num_inputs, config.model.n_in, config.model.seed);

  const EigenStudy study = eigen_study(config, X, depths, sigma_ws, sim_width);

  std::string csv =
      "# method is one of: theory (Sigma^depth), theory_star (Sigma*, depth -1),\n"
      "# simulation (empirical fixed-point kernel at sim_width, depth -1)\n"
      "sigma_w,depth,method,lambda_min\n";
  for (std::size_t s = 0; s < sigma_ws.size(); ++s) {
    for (std::size_t d = 0; d < depths.size(); ++d)
      csv += csv_line({io::format_double(sigma_ws[s]), std::to_string(depths[d]), "theory",
                       io::format_double(study.lambda_min(s, d))});
    csv += csv_line({io::format_double(sigma_ws[s]), "-1", "theory_star",
                     io::format_double(study.lambda_min_star[s])});
    csv += csv_line({io::format_double(sigma_ws[s]), "-1", "simulation",
                     io::format_double(study.lambda_min_sim[s])});
  }

  const fs::path dir = resolve_out_dir(opts, "eigen", config);
  io::write_text_atomic(dir / "lambda_min.csv", csv);
  io::ExperimentReport report;
  report.kind = "eigen";
  report.config = config;
  report.seeds = {config.model.seed};
  report.outputs = {{"lambda_min", "lambda_min.csv"},
                    {"sim_width", sim_width},
                    {"inputs", num_inputs}};
  finish_run(opts, dir, report, started);
  return 0;
}

// ---------------------------------------------------------------------------
// coeffs
// ---------------------------------------------------------------------------
int cmd_coeffs(const CommonOptions& opts, int N, double scale_c, bool auto_scale) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);
  if (N <= 0) N = config.hermite_truncation;
  if (auto_scale) scale_c = isotropic::diagonal_star(config);

  const HermiteExpansion expansion =
      hermite_coefficients(config.model.activation, scale_c, N, 2 * N + 16);
  const PdDiagnostic raw = pd_diagnostic(expansion);
  const PdDiagnostic composed = composed_pd_counts(expansion, scale_c);

  nlohmann::json out = expansion;
  out["pd_raw"] = {{"nonzero_even", raw.nonzero_even},
                   {"nonzero_odd", raw.nonzero_odd},
                   {"verdict", pd_verdict_name(raw.verdict)}};
  out["pd_composed"] = {{"nonzero_even", composed.nonzero_even},
                        {"nonzero_odd", composed.nonzero_odd},
                        {"verdict", pd_verdict_name(composed.verdict)},
                        {"s0", scale_c}};
  out["activation"] = config.model.activation.name();

  const fs::path dir = resolve_out_dir(opts, "coeffs", config);
  io::write_text_atomic(dir / "expansion.json", out.dump(2) + "\n");

  std::cout << config.model.activation.name() << " N=" << N << " c=" << scale_c
            << ": raw even/odd = " << raw.nonzero_even << "/" << raw.nonzero_odd << " ("
            << pd_verdict_name(raw.verdict) << "); composed even/odd = "
            << composed.nonzero_even << "/" << composed.nonzero_odd << " ("
            << pd_verdict_name(composed.verdict) << ")\n";

  io::ExperimentReport report;
  report.kind = "coeffs";
  report.config = config;
  report.seeds = {config.model.seed};
  report.outputs = {{"expansion", "expansion.json"},
                    {"parseval_defect", expansion.parseval_defect},
                    {"raw_verdict", pd_verdict_name(raw.verdict)},
                    {"composed_verdict", pd_verdict_name(composed.verdict)}};
  finish_run(opts, dir, report, started);
  return 0;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------
int cmd_infer(const CommonOptions& opts, const std::string& train_images,
              const std::string& train_labels, const std::string& test_images,
              const std::string& test_labels, const std::string& train_csv,
              const std::string& test_csv, const std::string& label_column, int subset_train,
              int subset_test, int classes, std::vector<int> feature_widths) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = resolve_config(opts);

  Dataset train, test;
  if (!train_csv.empty()) {
    train = load_csv(train_csv, label_column);
    test = load_csv(test_csv, label_column);
  } else {
    if (train_images.empty() || test_images.empty())
      throw ConfigError("infer needs --train-images/--train-labels/--test-images/--test-labels "
                        "or --train-csv/--test-csv");
    train = load_mnist_idx(train_images, train_labels);
    test = load_mnist_idx(test_images, test_labels);
  }
  train.split = "train";
  test.split = "test";
  if (subset_train > 0) train = train.head(subset_train);
  if (subset_test > 0) test = test.head(subset_test);
  if (!train.classification)
    throw DataError("infer currently supports classification datasets");
  if (classes <= 0) {
    classes = 0;
    for (int i = 0; i < train.size(); ++i) classes = std::max(classes, train.labels(i) + 1);
    for (int i = 0; i < test.size(); ++i) classes = std::max(classes, test.labels(i) + 1);
  }

  ExperimentConfig data_config = config;
  data_config.model.n_in = train.dim();
  data_config.model.sigma_u = std::sqrt(static_cast<double>(train.dim()));

  const InferenceResult nngp = nngp_inference(data_config, train, test, classes);
  const InferenceResult linear = linear_inference(data_config, train, test, classes);
  std::cout << "nngp accuracy = " << nngp.accuracy << " (mse " << nngp.mse
            << "), linear-kernel baseline = " << linear.accuracy << " (mse " << linear.mse
            << ")\n";

  nlohmann::json metrics = {
      {"nngp", {{"accuracy", nngp.accuracy}, {"mse", nngp.mse}, {"jitter", nngp.jitter_used}}},
      {"linear_baseline",
       {{"accuracy", linear.accuracy}, {"mse", linear.mse}, {"jitter", linear.jitter_used}}},
      {"train_size", train.size()},
      {"test_size", test.size()},
      {"classes", classes}};

  if (!feature_widths.empty()) {
    // untrained-feature ridge baseline: a weaker, desk-scale proxy for the
    // trained-DEQ comparison; labeled as such.
    nlohmann::json baseline = nlohmann::json::array();
    for (int width : feature_widths) {
      std::vector<double> accs;
      for (int rep = 0; rep < 3; ++rep) {
        const auto r = feature_ridge_inference(
            data_config, train, test, classes, width,
            rng::derive_stream_seed(config.model.seed, 0xfeedULL + rep));
        accs.push_back(r.accuracy);
      }
      std::sort(accs.begin(), accs.end());
      baseline.push_back({{"width", width},
                          {"median_accuracy", accs[1]},
                          {"accuracies", accs},
                          {"proxy_note", "untrained h* features, not a trained DEQ"}});
      std::cout << "feature baseline width " << width << ": median accuracy " << accs[1]
                << "\n";
    }
    metrics["feature_baseline"] = baseline;
  }

  std::string predictions = "# per-class NNGP posterior mean scores and argmax\nrow";
  for (int c = 0; c < classes; ++c) predictions += ",score_" + std::to_string(c);
  predictions += ",argmax\n";
  const Eigen::VectorXi argmax = argmax_rows(nngp.predictions);
  for (int i = 0; i < test.size(); ++i) {
    predictions += std::to_string(i);
    for (int c = 0; c < classes; ++c)
      predictions += "," + io::format_double(nngp.predictions(i, c));
    predictions += "," + std::to_string(argmax(i)) + "\n";
  }

  const fs::path dir = resolve_out_dir(opts, "infer", config);
  io::write_text_atomic(dir / "predictions.csv", predictions);
  io::write_text_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  io::ExperimentReport report;
  report.kind = "infer";
  report.config = config;
  report.seeds = {config.model.seed};
  report.outputs = {{"predictions", "predictions.csv"},
                    {"metrics", "metrics.json"},
                    {"nngp_accuracy", nngp.accuracy},
                    {"linear_accuracy", linear.accuracy}};
  finish_run(opts, dir, report, started);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DEQ NNGP kernel and simulation experiments"};
  app.require_subcommand(1);

  CommonOptions opts;

  // simulate
  auto* simulate = app.add_subcommand("simulate", "fixed-point forward pass, residual trace");
  std::string input_path;
  bool random_input = false;
  add_common(simulate, opts);
  simulate->add_option("--input", input_path, "file with one input vector");
  simulate->add_flag("--random-input", random_input, "draw a random unit input from the seed");

  // kernel
  auto* kernel = app.add_subcommand("kernel", "theoretical or empirical kernel matrix");
  std::string inputs_path, mode = "limit";
  int depth = 30, width = 0;
  bool normalize = true;
  add_common(kernel, opts);
  kernel->add_option("--inputs", inputs_path, "file with input vectors (rows)");
  kernel->add_option("--mode", mode, "recursion | limit | empirical");
  kernel->add_option("--depth", depth, "recursion depth / empirical depth (0 = fixed point)");
  kernel->add_option("--width", width, "empirical width override");
  kernel->add_flag("--normalize,!--no-normalize", normalize, "project inputs to the sphere");

  // gaussianity
  auto* gaussianity = app.add_subcommand("gaussianity", "KS tests of simulated outputs");
  std::vector<int> g_widths;
  int num_nets = 10000;
  add_common(gaussianity, opts);
  gaussianity->add_option("--widths", g_widths, "widths to sweep")->delimiter(',');
  gaussianity->add_option("--num-nets", num_nets, "networks per width");

  // convergence
  auto* convergence = app.add_subcommand("convergence", "kernel convergence in width or depth");
  std::string axis = "width";
  std::vector<int> c_widths, c_depths;
  int c_depth = 30, reps = 4, c_inputs = 8;
  add_common(convergence, opts);
  convergence->add_option("--axis", axis, "width | depth");
  convergence->add_option("--widths", c_widths, "width sweep")->delimiter(',');
  convergence->add_option("--depths", c_depths, "depth sweep")->delimiter(',');
  convergence->add_option("--depth", c_depth, "fixed depth for the width sweep");
  convergence->add_option("--reps", reps, "seeds averaged per width");
  convergence->add_option("--num-inputs", c_inputs, "random unit inputs");

  // eigen
  auto* eigen = app.add_subcommand("eigen", "smallest eigenvalue study");
  std::vector<int> e_depths;
  std::vector<double> e_sigmas;
  int sim_width = 1024, e_inputs = 10;
  add_common(eigen, opts);
  eigen->add_option("--depths", e_depths, "depths")->delimiter(',');
  eigen->add_option("--sigma-w", e_sigmas, "sigma_w values")->delimiter(',');
  eigen->add_option("--sim-width", sim_width, "width of the simulation kernel");
  eigen->add_option("--num-inputs", e_inputs, "random unit inputs");

  // coeffs
  auto* coeffs = app.add_subcommand("coeffs", "Hermite expansion and PD diagnostic");
  int N = 0;
  double scale_c = 0.0;
  bool auto_scale = true;
  add_common(coeffs, opts);
  coeffs->add_option("--N", N, "truncation (default: config hermite.truncation)");
  coeffs->add_option("--scale-c", scale_c, "expansion scale c")->each([&](const std::string&) {
    auto_scale = false;
  });

  // infer
  auto* infer = app.add_subcommand("infer", "NNGP posterior inference on a dataset");
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_csv, test_csv, label_column = "label";
  int subset_train = 0, subset_test = 0, classes = 0;
  std::vector<int> feature_widths;
  add_common(infer, opts);
  infer->add_option("--train-images", train_images, "IDX train images");
  infer->add_option("--train-labels", train_labels, "IDX train labels");
  infer->add_option("--test-images", test_images, "IDX test images");
  infer->add_option("--test-labels", test_labels, "IDX test labels");
  infer->add_option("--train-csv", train_csv, "CSV training set");
  infer->add_option("--test-csv", test_csv, "CSV test set");
  infer->add_option("--label-column", label_column, "label column name for CSV");
  infer->add_option("--subset-train", subset_train, "truncate training set");
  infer->add_option("--subset-test", subset_test, "truncate test set");
  infer->add_option("--classes", classes, "number of classes (default: inferred)");
  infer->add_option("--feature-widths", feature_widths,
                    "untrained h*-feature ridge baseline widths")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(opts, input_path, random_input);
    if (kernel->parsed()) return cmd_kernel(opts, inputs_path, mode, depth, width, normalize);
    if (gaussianity->parsed()) return cmd_gaussianity(opts, g_widths, num_nets);
    if (convergence->parsed())
      return cmd_convergence(opts, axis, c_widths, c_depths, c_depth, reps, c_inputs);
    if (eigen->parsed()) return cmd_eigen(opts, e_depths, e_sigmas, sim_width, e_inputs);
    if (coeffs->parsed()) return cmd_coeffs(opts, N, scale_c, auto_scale);
    if (infer->parsed())
      return cmd_infer(opts, train_images, train_labels, test_images, test_labels, train_csv,
                       test_csv, label_column, subset_train, subset_test, classes,
                       feature_widths);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
