#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
  DimensionMismatch,
  InvalidArgument,
  SingularGram,
  DegenerateRow,
  ZeroNormal,
  NonProjector,
  SingularKkt,
  SingularSchur,
  SingularSystem,
  VanishingDirection,
  MaxIterExceeded,
  InitialResidualTooLarge,
  NearZeroInput,
  InsufficientTail,
  InsufficientPoints,
  MalformedFile,
  AsymmetricMatrix,
  RankDeficient,
  LineSearchFailed,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind is the stable
/// discriminator; the message carries context for diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when the metric projection onto a row sphere is multivalued
/// (2 R_i = e1^T exactly). `row()` is the ambient row index.
class DegenerateRowError : public Error {
 public:
  DegenerateRowError(Index row, const std::string& what)
      : Error(ErrorKind::DegenerateRow, what), row_(row) {}
  Index row() const noexcept { return row_; }

 private:
  Index row_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

/// Frobenius inner product.
inline double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace isect
