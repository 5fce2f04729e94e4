#pragma once

#include <stdexcept>
#include <string>

namespace lpld {

// Invalid arguments and violated preconditions. Maps to the CLI's config-error exit code.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation failed to meet its own accuracy certificate.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The max-entropy problem has no feasible density.
class InfeasibleProblem : public NumericError {
 public:
  using NumericError::NumericError;
};

// The max-entropy problem has no normalizable maximizer (entropy unbounded above).
class UnboundedProblem : public NumericError {
 public:
  using NumericError::NumericError;
};

// A Monte Carlo estimate whose effective sample size is too small to be trusted.
class UnreliableEstimate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}
}  // namespace detail

}  // namespace lpld
