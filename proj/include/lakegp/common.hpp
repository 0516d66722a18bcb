#pragma once

#include <stdexcept>
#include <string>

namespace lakegp {

// Two-sided 90% normal interval multiplier, pinned to four decimals so that
// interval bounds are bit-stable across implementations.
inline constexpr double kQ95 = 1.6449;

// Dense fits are used up to this many rows; beyond it the Vecchia path takes over.
inline constexpr int kDenseThreshold = 4000;

/// A caller violated an operation's preconditions (bad sizes, bad ranges).
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure that survived the jitter policy (non-PD covariance etc.).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Hyperparameter optimization failed at every start point.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input data is malformed or insufficient for the requested operation.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure (missing file, unwritable path, parse error).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Persisted engine state is missing, locked, corrupt, or inconsistent.
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lakegp
