#pragma once

#include <stdexcept>
#include <string>

namespace polyproj {

// Caller handed us something malformed (bad dimensions, bad labels, bad
// config). Maps to CLI exit code 1.
struct UsageError : std::invalid_argument {
  explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

// The computation itself failed (rank deficiency, infeasible system,
// diverging loss). Maps to CLI exit code 2.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RankDeficientError : NumericError {
  explicit RankDeficientError(const std::string& msg) : NumericError(msg) {}
};

struct InfeasibleError : NumericError {
  explicit InfeasibleError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace polyproj
