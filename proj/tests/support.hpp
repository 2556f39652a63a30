#pragma once

#include "isect/problems.hpp"
#include "isect/rng.hpp"

#include <Eigen/LU>

namespace isect::testing {

/// Gaussian A (m x N) and b, binary rows 0..s-1.
inline IntersectionManifold random_manifold(std::uint64_t seed, Index N, Index r, Index s,
                                            Index m) {
  const Matrix G = random_matrix(m, N + 1, seed);
  std::vector<Index> B;
  for (Index i = 0; i < s; ++i) B.push_back(i);
  return IntersectionManifold(G.leftCols(N), G.col(N), B, r);
}

/// N = 8 with r, s and m_rows cycling through {1, 2}, {1, 2, 3} and {1, 2}.
inline IntersectionManifold small_manifold(std::uint64_t seed) {
  const Index r = 1 + static_cast<Index>(seed % 2);
  const Index s = 1 + static_cast<Index>(seed % 3);
  const Index m = 1 + static_cast<Index>((seed / 2) % 2);
  return random_manifold(seed, 8, r, s, m);
}

inline Index vec_index(Index N, Index i, Index k) { return i + k * N; }

/// Rows of the linear system A'Z = b'e1^T acting on vec(Z).
inline void add_affine_rows(const IntersectionManifold& M, Matrix& J, Vector& h, Index& row) {
  const auto& d = M.dims();
  const Matrix& A = M.affine().A();
  for (Index k = 0; k < d.r; ++k) {
    for (Index j = 0; j < d.m_rows; ++j) {
      for (Index i = 0; i < d.N; ++i) J(row, vec_index(d.N, i, k)) = A(j, i);
      h(row) = k == 0 ? M.affine().b()(j) : 0.0;
      ++row;
    }
  }
}

/// <Z_i, c> = value as one row.
inline void add_row_constraint(Index N, Index i, const Eigen::RowVectorXd& c, double value,
                               Matrix& J, Vector& h, Index& row) {
  for (Index k = 0; k < c.size(); ++k) J(row, vec_index(N, i, k)) = c(k);
  h(row) = value;
  ++row;
}

/// argmin ||Z - R||_F subject to J vec(Z) = h, through the full KKT matrix
/// [I J^T; J 0] and a full-pivot LU.
inline Matrix kkt_project(const Matrix& R, const Matrix& J, const Vector& h) {
  const Index n = R.size();
  const Index c = J.rows();
  Matrix K = Matrix::Zero(n + c, n + c);
  K.topLeftCorner(n, n).setIdentity();
  K.topRightCorner(n, c) = J.transpose();
  K.bottomLeftCorner(c, n) = J;
  Vector rhs(n + c);
  rhs.head(n) = Eigen::Map<const Vector>(R.data(), n);
  rhs.tail(c) = h;
  const Vector sol = K.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(sol.data(), R.rows(), R.cols());
}

inline Index constraint_count(const IntersectionManifold& M, Index extra) {
  return M.dims().m_rows * M.dims().r + extra;
}

/// argmin ||Z - R|| s.t. A'Z = b'e1^T and <Z_i - P_i, c_i> = 0 on binary rows,
/// where c_i = 2 P_i - e1.
inline Matrix linearized_kkt(const IntersectionManifold& M, const Matrix& R, const Matrix& P) {
  const auto& d = M.dims();
  Matrix J = Matrix::Zero(constraint_count(M, d.s), R.size());
  Vector h(J.rows());
  Index row = 0;
  add_affine_rows(M, J, h, row);
  for (Index k = 0; k < d.s; ++k) {
    const Index i = M.binary_rows()[k];
    Eigen::RowVectorXd c = 2.0 * P.row(i);
    c(0) -= 1.0;
    add_row_constraint(d.N, i, c, P.row(i).dot(c), J, h, row);
  }
  return kkt_project(R, J, h);
}

/// argmin ||Z - R|| s.t. A'Z = b'e1^T and <D, Z> = <D, P_M2(R)>, D = R - P_M2(R).
inline Matrix relaxed_kkt(const IntersectionManifold& M, const Matrix& R) {
  const Matrix Rt = project_binary(M, R);
  const Matrix D = R - Rt;
  Matrix J = Matrix::Zero(constraint_count(M, 1), R.size());
  Vector h(J.rows());
  Index row = 0;
  add_affine_rows(M, J, h, row);
  J.row(row) = Eigen::Map<const Vector>(D.data(), D.size()).transpose();
  h(row) = inner(D, Rt);
  return kkt_project(R, J, h);
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1.0);
}

/// Feasible point plus a seeded Gaussian perturbation of norm `scale`.
inline Matrix perturbed_point(const IntersectionManifold& M, std::uint64_t seed, double scale) {
  const Matrix x = random_feasible_point(M, seed);
  Matrix Z = random_matrix(x.rows(), x.cols(), seed + 1000);
  return x + scale * Z / Z.norm();
}

}  // namespace isect::testing
