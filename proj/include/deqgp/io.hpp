#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "deqgp/config.hpp"
#include "deqgp/errors.hpp"
#include "deqgp/kernel.hpp"

namespace deqgp::io {

inline constexpr const char* kArtifactVersion = "deqgp 0.1.0";

// %.17g: shortest representation that still round-trips a double.
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// Write via a temporary in the same directory, then rename (atomic on POSIX).
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string kernel_csv(const KernelMatrix& kernel) {
  std::string out;
  for (int i = 0; i < kernel.size(); ++i) {
    for (int j = 0; j < kernel.size(); ++j) {
      if (j) out += ',';
      out += format_double(kernel(i, j));
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json kernel_json(const KernelMatrix& kernel) {
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < kernel.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < kernel.size(); ++j) row.push_back(kernel(i, j));
    entries.push_back(row);
  }
  return nlohmann::json{{"level", kernel_level_name(kernel.level())},
                        {"depth", kernel.depth()},
                        {"size", kernel.size()},
                        {"inputs_id", kernel.inputs_id()},
                        {"entries", entries}};
}

// 64-bit FNV-1a of the canonical config JSON; names run directories.
inline std::string config_hash(const ExperimentConfig& config) {
  const std::string dump = nlohmann::json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf).substr(0, 8);
}

// runs/<kind>-<timestamp>-<confighash>/, plus a `latest` pointer file updated
// after all artifacts land.
inline std::filesystem::path make_run_dir(const std::filesystem::path& base,
                                          const std::string& kind,
                                          const ExperimentConfig& config) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
  std::filesystem::path dir = base / (kind + "-" + stamp + "-" + config_hash(config));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void update_latest_pointer(const std::filesystem::path& base,
                                  const std::filesystem::path& run_dir) {
  write_text_atomic(base / "latest", run_dir.filename().string() + "\n");
}

struct ExperimentReport {
  std::string kind;
  ExperimentConfig config;
  std::vector<std::uint64_t> seeds;
  double wall_time_ms = 0.0;
  nlohmann::json outputs;  // statistics plus artifact file names

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", kind},          {"config", config},
                          {"seeds", seeds},        {"wall_time_ms", wall_time_ms},
                          {"outputs", outputs},    {"version", kArtifactVersion}};
  }
};

}  // namespace deqgp::io
