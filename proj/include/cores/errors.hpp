#pragma once

#include <stdexcept>
#include <string>

namespace cores {

// Raised when a training loop produces a non-finite loss or gradient.
struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when the three-term decomposition fails to reproduce the exact
// enumerated risk; signals an implementation bug, never bad input.
struct DecouplingMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (dataset CSV, world JSON, config).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cores
