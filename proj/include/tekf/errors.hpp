#pragma once

#include <stdexcept>
#include <string>

namespace tekf {

// Dimension or precondition violation at an API boundary.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Innovation covariance condition number above the 1e12 threshold.
struct SingularInnovation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact-update fixed point failed to converge within the iteration cap.
struct ExactUpdateDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transformation construction failed (leading block singular beyond permutation repair).
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bearing measurement taken at (numerically) zero range.
struct DegenerateGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid run configuration (CLI flags or config file).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset file problem; carries file and 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file_in, int line_in, const std::string& message)
      : std::runtime_error(file_in + ":" + std::to_string(line_in) + ": " + message),
        file(file_in),
        line(line_in) {}
  std::string file;
  int line;
};

}  // namespace tekf
