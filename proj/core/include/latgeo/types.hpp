#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace latgeo {

// Desk-scale dimensions only. Wedge lattices for d = 4 and relation-search
// lattices for d = 6 stay within this bound.
inline constexpr int kMaxDim = 8;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor,
                          kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::RowMajor, kMaxDim, kMaxDim>;
using IVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

// Error hierarchy. The CLI maps each class onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: shape mismatch, precondition violated, malformed config.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Input lies on a measure-zero degenerate set the math excludes
/// (singular rotation point, singular block A(s), tangential flow).
class DegenerateError : public InputError {
 public:
  using InputError::InputError;
};

/// Requested feature is outside the supported desk-scale envelope.
class UnsupportedError : public InputError {
 public:
  using InputError::InputError;
};

/// Floating-point trouble: determinant drift, overflow, precision exhausted.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An enumeration exceeded its hard candidate budget.
class BudgetError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace latgeo
