#pragma once

#include <stdexcept>
#include <string>

namespace rsr {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input matrix is numerically zero (every entry below absolute tolerance).
struct AllZeroError : Error {
  AllZeroError() : Error("input matrix is numerically zero") {}
};

struct DimensionMismatchError : Error {
  explicit DimensionMismatchError(const std::string& what) : Error(what) {}
};

struct ZeroVectorError : Error {
  ZeroVectorError() : Error("zero vector has no direction") {}
};

/// Tangent matrix is not orthogonal to the base point's basis.
struct TangencyViolationError : Error {
  explicit TangencyViolationError(double max_entry)
      : Error("tangent direction violates B^T H = 0, max |entry| = " +
              std::to_string(max_entry)) {}
};

/// A data column is the zero vector and cannot be spherized.
struct ZeroColumnError : Error {
  explicit ZeroColumnError(int column_index, const std::string& detail = "")
      : Error("column " + std::to_string(column_index) +
              " is the zero vector" + (detail.empty() ? "" : " (" + detail + ")")),
        column(column_index) {}
  int column;
};

/// Instance exceeds the combinatorial size guard of an exact computation.
struct TooLargeError : Error {
  TooLargeError(int n, int limit)
      : Error("instance size " + std::to_string(n) +
              " exceeds the guard " + std::to_string(limit)),
        n(n) {}
  int n;
};

struct RankDeficientDataError : Error {
  explicit RankDeficientDataError(const std::string& what) : Error(what) {}
};

/// A point expected to lie on a reference subspace does not.
struct OffSubspaceError : Error {
  explicit OffSubspaceError(int index)
      : Error("point " + std::to_string(index) +
              " does not lie on the reference subspace"),
        index(index) {}
  int index;
};

/// Inliers concentrate on a strictly lower-dimensional subspace.
struct DegenerateInliersError : Error {
  DegenerateInliersError()
      : Error("inliers do not permeate the subspace (lambda_d ~ 0)") {}
};

struct DivisibilityError : Error {
  DivisibilityError(int a, int b)
      : Error(std::to_string(a) + " is not divisible by " + std::to_string(b)) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// The descent energy became NaN or infinite.
struct NonFiniteEnergyError : Error {
  explicit NonFiniteEnergyError(int iteration)
      : Error("energy became non-finite at iteration " +
              std::to_string(iteration)),
        iteration(iteration) {}
  int iteration;
};

struct ConfigError : Error {
  ConfigError(const std::string& what, int line = -1)
      : Error(line >= 0 ? "config line " + std::to_string(line) + ": " + what
                        : "config: " + what),
        line(line) {}
  int line;
};

}  // namespace rsr
