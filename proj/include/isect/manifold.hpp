#pragma once

#include "isect/common.hpp"

#include <vector>

namespace isect {

struct ProblemDims {
  Index N = 0;       // ambient rows
  Index r = 0;       // columns (factorization rank)
  Index m_rows = 0;  // rows of the affine system
  Index s = 0;       // number of binary rows
};

/// A' R = b' e1^T with the Gram matrix A' A'^T factored once.
class AffineSystem {
 public:
  AffineSystem(Matrix A, Vector b_col);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  Index rows() const { return A_.rows(); }
  Index cols() const { return A_.cols(); }

  /// Solves (A A^T) X = Y.
  Matrix gram_solve(const Matrix& Y) const;
  const Eigen::LLT<Matrix>& gram() const { return gram_; }

 private:
  Matrix A_;
  Vector b_;
  Eigen::LLT<Matrix> gram_;
};

enum class SchurPath { Direct, SMW, Auto };

/// M_r = {R : A'R = b'e1^T, ||R_i||^2 = R_i1 for i in B}.
///
/// Immutable after construction. Precomputes the Gram factorization, the
/// binary-column block A'_B and the factor U with A'_B^T (A'A'^T)^{-1} A'_B = U U^T.
class IntersectionManifold {
 public:
  IntersectionManifold(Matrix A, Vector b_col, std::vector<Index> binary_rows, Index r);

  const ProblemDims& dims() const { return dims_; }
  const AffineSystem& affine() const { return affine_; }
  const std::vector<Index>& binary_rows() const { return binary_rows_; }
  /// m x s block of A' restricted to the binary columns.
  const Matrix& A_binary() const { return A_B_; }
  /// s x m factor U.
  const Matrix& low_rank_factor() const { return U_; }
  /// S = U U^T (s x s).
  const Matrix& schur_kernel() const { return S_; }

  /// A copy of this manifold with a different column count.
  IntersectionManifold with_rank(Index r) const;

  void check_shape(const Matrix& R, const char* where) const;

 private:
  ProblemDims dims_;
  AffineSystem affine_;
  std::vector<Index> binary_rows_;
  Matrix A_B_;
  Matrix U_;
  Matrix S_;
};

struct ConstraintResidual {
  Matrix affine_block;  // m x r
  Vector binary_block;  // s
  double combined_norm = 0.0;
};

struct TangentVector {
  Matrix xi;
  Matrix base;
};

Vector binary_residual(const IntersectionManifold& M, const Matrix& R);
Matrix affine_residual(const IntersectionManifold& M, const Matrix& R);
ConstraintResidual residual(const IntersectionManifold& M, const Matrix& R);
double combined_residual(const IntersectionManifold& M, const Matrix& R);

/// Feasibility scale used throughout: ||R||_F + 1.
inline double scale_of(const Matrix& R) { return R.norm() + 1.0; }
bool is_feasible(const IntersectionManifold& M, const Matrix& R, double tol = 1e-6);

Matrix project_affine(const IntersectionManifold& M, const Matrix& R);
/// Projection onto the null space of A' (no right-hand side).
Matrix project_affine_kernel(const IntersectionManifold& M, const Matrix& Z);

/// Throws DegenerateRowError when 2 R_i = e1^T for some binary row.
Matrix project_binary(const IntersectionManifold& M, const Matrix& R);

/// s x r matrix with rows 2 R_{B(i),:} - e1^T.
Matrix row_normals(const IntersectionManifold& M, const Matrix& R);

/// Solves (Diag(d) - (C C^T) .* S) mu = rhs by forming the s x s matrix
/// (Direct) or through the rank-(m r) Woodbury identity (SMW).
Vector solve_schur(const IntersectionManifold& M, const Matrix& C, const Vector& d,
                   const Vector& rhs, SchurPath path);

/// Rows i in B of the result are mu_i C_i; all others zero.
Matrix embed_rows(const IntersectionManifold& M, const Vector& mu, const Matrix& C);

SchurPath resolve_path(const IntersectionManifold& M, SchurPath path);

/// Orthogonal projection of v onto T_R M_r.
TangentVector project_tangent(const IntersectionManifold& M, const Matrix& R, const Matrix& v,
                              SchurPath path = SchurPath::Auto);

/// Row-wise projection onto the linearization of ||R_i||^2 - R_i1 = 0.
Matrix linearized_project(const IntersectionManifold& M, const Matrix& R);

/// Full constraint Jacobian at R, shape (m r + s) x (N r), acting on
/// column-major vec(xi).
Matrix constraint_jacobian(const IntersectionManifold& M, const Matrix& R);

/// Orthonormal basis (columns, N r rows) of ker of the Jacobian at R.
Matrix tangent_basis(const IntersectionManifold& M, const Matrix& R);

struct TangentProjectors {
  Matrix affine;        // T M1
  Matrix binary;        // T_R M2
  Matrix intersection;  // T_R M_r
};

/// Dense (N r) x (N r) projectors; intended for small instances.
TangentProjectors tangent_projectors(const IntersectionManifold& M, const Matrix& R);

/// ||P2 P1 - Pcap||_2 for orthogonal projectors.
double angle_cosine(const Matrix& P1, const Matrix& P2, const Matrix& Pcap);

/// Angle diagnostic c(M1, M2, R) from the tangent-space projectors at R.
double angle_cosine_at(const IntersectionManifold& M, const Matrix& R);

}  // namespace isect
