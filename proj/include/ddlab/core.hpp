#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ddlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x D matrix of frozen features, one row per sample.
using DesignMatrix = Matrix;
/// n x k matrix of regression targets (k = 1) or one-hot rows (k = C).
using TargetMatrix = Matrix;
/// D x k trained second layer.
using Coefficients = Matrix;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments supplied by a caller (negative lambda, oversized subsample, ...).
class InputError : public Error {
public:
  using Error::Error;
};

/// Shapes that must agree do not.
class ContractError : public Error {
public:
  using Error::Error;
};

/// A file on disk does not match its declared layout.
class FormatError : public Error {
public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

/// A referenced dataset file could not be found or opened.
class DataError : public Error {
public:
  using Error::Error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) throw InputError(std::string(name) + " contains non-finite entries");
}

}  // namespace ddlab
