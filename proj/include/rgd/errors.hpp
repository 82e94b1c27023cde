#pragma once

#include <stdexcept>
#include <string>

namespace rgd {

// Error taxonomy shared by all modules.  Each failure mode gets its own type
// so callers (and the CLI exit-code mapping) can react per category.

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Config/CLI errors; mapped to exit code 2 at the command line.
struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CapacityExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Signals a bug (an algebraic identity violated far beyond roundoff), never a
// property of the data.
struct NumericalInconsistency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HypothesisViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotConvergent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NormalizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssumptionViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rgd
