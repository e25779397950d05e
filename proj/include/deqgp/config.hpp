#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "deqgp/activation.hpp"
#include "deqgp/errors.hpp"

namespace deqgp {

// All model hyperparameters. Immutable by convention after construction;
// experiments are replayable from (config, seed) alone.
struct ModelConfig {
  int n_in = 10;
  int n_out = 10;
  int width = 1000;
  double sigma_u = std::sqrt(10.0);  // default sqrt(n_in): Sigma^1(x,x) = 1 on the sphere
  double sigma_w = 0.25;
  double sigma_v = 1.0;
  Activation activation = Activation(ActivationKind::Tanh);
  double fp_tol = 1e-6;
  int fp_max_iter = 200;
  std::uint64_t seed = 42;

  static ModelConfig defaults(int n_in_ = 10) {
    ModelConfig c;
    c.n_in = n_in_;
    c.sigma_u = std::sqrt(static_cast<double>(n_in_));
    return c;
  }

  void validate() const {
    if (n_in < 1 || n_out < 1 || width < 1)
      throw ConfigError("dimensions must be >= 1");
    if (!(sigma_u > 0.0) || !(sigma_w > 0.0) || !(sigma_v > 0.0))
      throw ConfigError("sigma_u, sigma_w, sigma_v must be > 0");
    if (!(fp_tol > 0.0)) throw ConfigError("fp_tol must be > 0");
    if (fp_max_iter < 1) throw ConfigError("fp_max_iter must be >= 1");
  }
};

// Forward-pass contraction rate gamma = 2*sqrt(2)*sigma_w. The fixed point is
// provably unique when gamma < 1; construction with gamma >= 1 is allowed but
// flagged, and the iteration then runs divergence detection.
inline double contraction_gamma(const ModelConfig& config) {
  return 2.0 * std::sqrt(2.0) * config.sigma_w;
}

inline bool contraction_ok(const ModelConfig& config) {
  return contraction_gamma(config) < 1.0;
}

// Numeric knobs that sit above the model itself.
struct ExperimentConfig {
  ModelConfig model;
  double kernel_tol = 1e-10;
  int kernel_max_steps = 500;
  int quad_order = 64;
  int hermite_truncation = 80;

  void validate() const {
    model.validate();
    if (!(kernel_tol > 0.0)) throw ConfigError("kernel.tol must be > 0");
    if (kernel_max_steps < 1) throw ConfigError("kernel.max_steps must be >= 1");
    if (quad_order < 2) throw ConfigError("kernel.quad_order must be >= 2");
    if (hermite_truncation < 0) throw ConfigError("hermite.truncation must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_in", c.n_in},       {"n_out", c.n_out},
                     {"width", c.width},     {"sigma_u", c.sigma_u},
                     {"sigma_w", c.sigma_w}, {"sigma_v", c.sigma_v},
                     {"activation", c.activation.name()},
                     {"fp_tol", c.fp_tol},   {"fp_max_iter", c.fp_max_iter},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.n_in = j.at("n_in").get<int>();
  c.n_out = j.at("n_out").get<int>();
  c.width = j.at("width").get<int>();
  c.sigma_u = j.contains("sigma_u") ? j.at("sigma_u").get<double>()
                                    : std::sqrt(static_cast<double>(c.n_in));
  c.sigma_w = j.at("sigma_w").get<double>();
  c.sigma_v = j.at("sigma_v").get<double>();
  c.activation = Activation::parse(j.at("activation").get<std::string>());
  c.fp_tol = j.at("fp_tol").get<double>();
  c.fp_max_iter = j.at("fp_max_iter").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"model", c.model},
                     {"kernel_tol", c.kernel_tol},
                     {"kernel_max_steps", c.kernel_max_steps},
                     {"quad_order", c.quad_order},
                     {"hermite_truncation", c.hermite_truncation}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.model = j.at("model").get<ModelConfig>();
  c.kernel_tol = j.value("kernel_tol", 1e-10);
  c.kernel_max_steps = j.value("kernel_max_steps", 500);
  c.quad_order = j.value("quad_order", 64);
  c.hermite_truncation = j.value("hermite_truncation", 80);
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out;
  in >> out;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigError("bad numeric value for '" + key + "': '" + value + "'");
  return out;
}

}  // namespace detail

// Flat key = value file with [section] headers. Section names prefix the key
// ("model.sigma_w"). Lines starting with '#' are comments.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  bool sigma_u_given = false;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;

    ModelConfig& m = config.model;
    if (key == "model.n_in") m.n_in = detail::parse_number<int>(key, value);
    else if (key == "model.n_out") m.n_out = detail::parse_number<int>(key, value);
    else if (key == "model.width") m.width = detail::parse_number<int>(key, value);
    else if (key == "model.sigma_u") { m.sigma_u = detail::parse_number<double>(key, value); sigma_u_given = true; }
    else if (key == "model.sigma_w") m.sigma_w = detail::parse_number<double>(key, value);
    else if (key == "model.sigma_v") m.sigma_v = detail::parse_number<double>(key, value);
    else if (key == "model.activation") m.activation = Activation::parse(value);
    else if (key == "model.seed") m.seed = detail::parse_number<std::uint64_t>(key, value);
    else if (key == "fixed_point.tol") m.fp_tol = detail::parse_number<double>(key, value);
    else if (key == "fixed_point.max_iter") m.fp_max_iter = detail::parse_number<int>(key, value);
    else if (key == "kernel.tol") config.kernel_tol = detail::parse_number<double>(key, value);
    else if (key == "kernel.max_steps") config.kernel_max_steps = detail::parse_number<int>(key, value);
    else if (key == "kernel.quad_order") config.quad_order = detail::parse_number<int>(key, value);
    else if (key == "hermite.truncation") config.hermite_truncation = detail::parse_number<int>(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (!sigma_u_given)
    config.model.sigma_u = std::sqrt(static_cast<double>(config.model.n_in));
  config.validate();
  return config;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline std::string config_to_text(const ExperimentConfig& config) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  const ModelConfig& m = config.model;
  out << "[model]\n"
      << "n_in = " << m.n_in << "\n"
      << "n_out = " << m.n_out << "\n"
      << "width = " << m.width << "\n"
      << "sigma_u = " << num(m.sigma_u) << "\n"
      << "sigma_w = " << num(m.sigma_w) << "\n"
      << "sigma_v = " << num(m.sigma_v) << "\n"
      << "activation = " << m.activation.name() << "\n"
      << "seed = " << m.seed << "\n\n"
      << "[fixed_point]\n"
      << "tol = " << num(m.fp_tol) << "\n"
      << "max_iter = " << m.fp_max_iter << "\n\n"
      << "[kernel]\n"
      << "tol = " << num(config.kernel_tol) << "\n"
      << "max_steps = " << config.kernel_max_steps << "\n"
      << "quad_order = " << config.quad_order << "\n\n"
      << "[hermite]\n"
      << "truncation = " << config.hermite_truncation << "\n";
  return out.str();
}

}  // namespace deqgp
