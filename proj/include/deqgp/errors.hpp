#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace deqgp {

// Error taxonomy mirrored by the CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-point or kernel iteration failed to converge; carries the trace so
// callers can inspect or dump it.
struct NonConvergenceError : std::runtime_error {
  NonConvergenceError(const std::string& what, std::vector<double> trace_in)
      : std::runtime_error(what), trace(std::move(trace_in)) {}
  std::vector<double> trace;
};

}  // namespace deqgp
