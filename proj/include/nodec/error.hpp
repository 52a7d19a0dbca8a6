#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nodec {

// Error taxonomy shared by the whole library. Everything derives from
// std::exception so callers can catch broadly; the CLI maps these to
// exit codes (config -> 2, divergence -> 3).

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SymmetryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Near-singular controllability Gramian: some direction of state space is
// (numerically) unreachable, so the minimum-energy formula is refused.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConnectivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite state during integration; carries the failing step index.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, std::size_t step_index)
      : std::runtime_error(msg + " (step " + std::to_string(step_index) + ")"),
        step(step_index) {}
  std::size_t step;
};

}  // namespace nodec
