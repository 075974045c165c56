#pragma once

#include <stdexcept>
#include <string>

namespace mcx {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy shared by every module.  The CLI maps these onto exit codes:
// bad arguments / bad config -> 1, numeric failures -> 2.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A caller broke an internal invariant (e.g. fed a negative layer into a
// density product).  Distinct from ArgumentError so tests can tell the two
// apart.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg, double worst = 0.0)
      : std::runtime_error(msg), worst_value(worst) {}
  double worst_value;
};

}  // namespace mcx
