#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roughmkv {

// Exact Gaussian synthesis could not produce a valid factorisation.
struct SynthesisError : std::runtime_error {
  explicit SynthesisError(const std::string& what) : std::runtime_error(what) {}
};

// A covariance (sub)matrix required for conditioning is singular.
struct ConditioningError : std::runtime_error {
  explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

// A path leaves the spatial box; `node` is the first offending time node.
struct CoverageError : std::runtime_error {
  CoverageError(const std::string& what, std::size_t node)
      : std::runtime_error(what), node(node) {}
  std::size_t node;
};

// A coefficient or functional produced a non-finite value.
struct EvaluationError : std::runtime_error {
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

// Particle state became non-finite; `step` is the offending step index.
struct BlowUpError : std::runtime_error {
  BlowUpError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step(step) {}
  std::size_t step;
};

// Configuration text could not be parsed; `line` is 1-based (0 = unknown).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line(line) {}
  std::size_t line;
};

// A persisted artifact does not match its recorded checksum.
struct ReproducibilityError : std::runtime_error {
  explicit ReproducibilityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace roughmkv
