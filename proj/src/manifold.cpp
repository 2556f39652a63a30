#include "isect/manifold.hpp"

#include <cmath>
#include <sstream>

namespace isect {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::ZeroNormal: return "ZeroNormal";
    case ErrorKind::NonProjector: return "NonProjector";
    case ErrorKind::SingularKkt: return "SingularKkt";
    case ErrorKind::SingularSchur: return "SingularSchur";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::VanishingDirection: return "VanishingDirection";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::InitialResidualTooLarge: return "InitialResidualTooLarge";
    case ErrorKind::NearZeroInput: return "NearZeroInput";
    case ErrorKind::InsufficientTail: return "InsufficientTail";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::LineSearchFailed: return "LineSearchFailed";
  }
  return "Unknown";
}

namespace {

constexpr double kSingularRcond = 1e-14;

std::string shape_str(const Matrix& R) {
  std::ostringstream os;
  os << R.rows() << "x" << R.cols();
  return os.str();
}

}  // namespace

AffineSystem::AffineSystem(Matrix A, Vector b_col) : A_(std::move(A)), b_(std::move(b_col)) {
  require(A_.rows() == b_.size(), ErrorKind::DimensionMismatch, "b' length must match rows of A'");
  require(A_.rows() >= 1, ErrorKind::InvalidArgument, "A' needs at least one row");
  const Matrix G = A_ * A_.transpose();
  gram_.compute(G);
  const double scale = std::max(A_.squaredNorm(), 1e-300);
  bool ok = gram_.info() == Eigen::Success;
  if (ok) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
    ok = eig.eigenvalues().minCoeff() > 1e-12 * scale;
  }
  require(ok, ErrorKind::SingularGram, "A' A'^T is singular (A' is not of full row rank)");
}

Matrix AffineSystem::gram_solve(const Matrix& Y) const { return gram_.solve(Y); }

IntersectionManifold::IntersectionManifold(Matrix A, Vector b_col, std::vector<Index> binary_rows,
                                           Index r)
    : affine_(std::move(A), std::move(b_col)), binary_rows_(std::move(binary_rows)) {
  dims_.N = affine_.cols();
  dims_.r = r;
  dims_.m_rows = affine_.rows();
  dims_.s = static_cast<Index>(binary_rows_.size());
  require(r >= 1, ErrorKind::InvalidArgument, "rank r must be >= 1");
  require(dims_.s >= 1 && dims_.s <= dims_.N, ErrorKind::InvalidArgument,
          "binary row set must satisfy 1 <= s <= N");
  require(dims_.m_rows < dims_.N, ErrorKind::InvalidArgument, "A' must have fewer rows than columns");
  for (std::size_t k = 0; k < binary_rows_.size(); ++k) {
    const Index i = binary_rows_[k];
    require(i >= 0 && i < dims_.N, ErrorKind::InvalidArgument, "binary row index out of range");
    require(k == 0 || binary_rows_[k - 1] < i, ErrorKind::InvalidArgument,
            "binary rows must be strictly increasing");
  }

  const Matrix& A_full = affine_.A();
  A_B_.resize(dims_.m_rows, dims_.s);
  for (Index k = 0; k < dims_.s; ++k) A_B_.col(k) = A_full.col(binary_rows_[k]);

  // A A^T = L L^T  =>  S = A_B^T L^{-T} L^{-1} A_B = U U^T with U = (L^{-1} A_B)^T.
  const Matrix LinvAB = affine_.gram().matrixL().solve(A_B_);
  U_ = LinvAB.transpose();
  S_ = U_ * U_.transpose();
}

IntersectionManifold IntersectionManifold::with_rank(Index r) const {
  return IntersectionManifold(affine_.A(), affine_.b(), binary_rows_, r);
}

void IntersectionManifold::check_shape(const Matrix& R, const char* where) const {
  if (R.rows() != dims_.N || R.cols() != dims_.r) {
    std::ostringstream os;
    os << where << ": expected " << dims_.N << "x" << dims_.r << ", got " << shape_str(R);
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

Vector binary_residual(const IntersectionManifold& M, const Matrix& R) {
  M.check_shape(R, "binary_residual");
  const auto& B = M.binary_rows();
  Vector h(M.dims().s);
  for (Index k = 0; k < h.size(); ++k) {
    const auto row = R.row(B[k]);
    h(k) = row.squaredNorm() - row(0);
  }
  return h;
}

Matrix affine_residual(const IntersectionManifold& M, const Matrix& R) {
  M.check_shape(R, "affine_residual");
  Matrix E = M.affine().A() * R;
  E.col(0) -= M.affine().b();
  return E;
}

ConstraintResidual residual(const IntersectionManifold& M, const Matrix& R) {
  ConstraintResidual out;
  out.affine_block = affine_residual(M, R);
  out.binary_block = binary_residual(M, R);
  out.combined_norm =
      std::sqrt(out.affine_block.squaredNorm() + out.binary_block.squaredNorm());
  return out;
}

double combined_residual(const IntersectionManifold& M, const Matrix& R) {
  return residual(M, R).combined_norm;
}

bool is_feasible(const IntersectionManifold& M, const Matrix& R, double tol) {
  return combined_residual(M, R) <= tol * scale_of(R);
}

Matrix project_affine_kernel(const IntersectionManifold& M, const Matrix& Z) {
  const Matrix& A = M.affine().A();
  return Z - A.transpose() * M.affine().gram_solve(A * Z);
}

Matrix project_affine(const IntersectionManifold& M, const Matrix& R) {
  const Matrix E = affine_residual(M, R);
  return R - M.affine().A().transpose() * M.affine().gram_solve(E);
}

Matrix project_binary(const IntersectionManifold& M, const Matrix& R) {
  M.check_shape(R, "project_binary");
  Matrix out = R;
  for (const Index i : M.binary_rows()) {
    Eigen::RowVectorXd c = 2.0 * R.row(i);
    c(0) -= 1.0;
    const double nc = c.norm();
    if (nc == 0.0) {
      std::ostringstream os;
      os << "row " << i << " satisfies 2R_i = e1^T; projection is multivalued";
      throw DegenerateRowError(i, os.str());
    }
    out.row(i) = 0.5 * (c / nc);
    out(i, 0) += 0.5;
  }
  return out;
}

Matrix row_normals(const IntersectionManifold& M, const Matrix& R) {
  M.check_shape(R, "row_normals");
  const auto& B = M.binary_rows();
  Matrix C(M.dims().s, M.dims().r);
  for (Index k = 0; k < C.rows(); ++k) {
    C.row(k) = 2.0 * R.row(B[k]);
    C(k, 0) -= 1.0;
  }
  return C;
}

SchurPath resolve_path(const IntersectionManifold& M, SchurPath path) {
  if (path != SchurPath::Auto) return path;
  const auto& d = M.dims();
  return d.s > 4 * d.m_rows * d.r ? SchurPath::SMW : SchurPath::Direct;
}

Vector solve_schur(const IntersectionManifold& M, const Matrix& C, const Vector& d,
                   const Vector& rhs, SchurPath path) {
  const Index s = M.dims().s;
  require(C.rows() == s && d.size() == s && rhs.size() == s, ErrorKind::DimensionMismatch,
          "solve_schur: operand sizes");
  if (resolve_path(M, path) == SchurPath::Direct) {
    Matrix K = -(C * C.transpose()).cwiseProduct(M.schur_kernel());
    K.diagonal() += d;
    const Eigen::PartialPivLU<Matrix> lu(K);
    if (!(lu.rcond() > kSingularRcond)) {
      throw Error(ErrorKind::SingularSchur, "Schur matrix is numerically singular");
    }
    return lu.solve(rhs);
  }

  // K = D - W W^T with W = [Diag(C(:,1)) U, ..., Diag(C(:,r)) U].
  const Matrix& U = M.low_rank_factor();
  const Index m = U.cols();
  const Index r = C.cols();
  for (Index i = 0; i < s; ++i) {
    require(d(i) > 0.0, ErrorKind::SingularSchur, "SMW path needs a positive diagonal");
  }
  Matrix W(s, m * r);
  for (Index k = 0; k < r; ++k) W.middleCols(k * m, m) = C.col(k).asDiagonal() * U;
  const Vector dinv = d.cwiseInverse();
  Matrix inner = -W.transpose() * dinv.asDiagonal() * W;
  inner.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<Matrix> lu(inner);
  if (!(lu.rcond() > kSingularRcond)) {
    throw Error(ErrorKind::SingularSchur, "Woodbury capacitance matrix is numerically singular");
  }
  const Vector y = dinv.cwiseProduct(rhs);
  return y + dinv.cwiseProduct(W * lu.solve(W.transpose() * y));
}

Matrix embed_rows(const IntersectionManifold& M, const Vector& mu, const Matrix& C) {
  Matrix T = Matrix::Zero(M.dims().N, C.cols());
  const auto& B = M.binary_rows();
  for (Index k = 0; k < mu.size(); ++k) T.row(B[k]) = mu(k) * C.row(k);
  return T;
}

TangentVector project_tangent(const IntersectionManifold& M, const Matrix& R, const Matrix& v,
                              SchurPath path) {
  M.check_shape(R, "project_tangent");
  M.check_shape(v, "project_tangent");
  if (path == SchurPath::Auto && M.dims().s <= 64) path = SchurPath::Direct;
  const Matrix C = row_normals(M, R);
  const Matrix P0v = project_affine_kernel(M, v);
  const auto& B = M.binary_rows();
  Vector w(C.rows());
  for (Index k = 0; k < C.rows(); ++k) w(k) = C.row(k).dot(P0v.row(B[k]));
  const Vector d = C.rowwise().squaredNorm();
  Vector mu;
  try {
    mu = solve_schur(M, C, d, w, path);
  } catch (const Error& e) {
    throw Error(ErrorKind::SingularKkt, std::string("tangent projection: ") + e.what());
  }
  return TangentVector{project_affine_kernel(M, v - embed_rows(M, mu, C)), R};
}

Matrix linearized_project(const IntersectionManifold& M, const Matrix& R) {
  const Vector h = binary_residual(M, R);
  const Matrix C = row_normals(M, R);
  Matrix out = R;
  const auto& B = M.binary_rows();
  for (Index k = 0; k < C.rows(); ++k) {
    const double nc2 = C.row(k).squaredNorm();
    if (std::sqrt(nc2) < 1e-14) {
      std::ostringstream os;
      os << "row " << B[k] << " has a vanishing constraint normal";
      throw Error(ErrorKind::ZeroNormal, os.str());
    }
    out.row(B[k]) -= (h(k) / nc2) * C.row(k);
  }
  return out;
}

Matrix constraint_jacobian(const IntersectionManifold& M, const Matrix& R) {
  M.check_shape(R, "constraint_jacobian");
  const auto& dm = M.dims();
  const Matrix& A = M.affine().A();
  Matrix J = Matrix::Zero(dm.m_rows * dm.r + dm.s, dm.N * dm.r);
  for (Index k = 0; k < dm.r; ++k) {
    J.block(k * dm.m_rows, k * dm.N, dm.m_rows, dm.N) = A;
  }
  const Matrix C = row_normals(M, R);
  const auto& B = M.binary_rows();
  for (Index b = 0; b < dm.s; ++b) {
    for (Index k = 0; k < dm.r; ++k) J(dm.m_rows * dm.r + b, B[b] + k * dm.N) = C(b, k);
  }
  return J;
}

Matrix tangent_basis(const IntersectionManifold& M, const Matrix& R) {
  const Matrix J = constraint_jacobian(M, R);
  const Eigen::ColPivHouseholderQR<Matrix> qr(J.transpose());
  const Index rank = qr.rank();
  const Matrix Q = qr.householderQ();
  return Q.rightCols(Q.cols() - rank);
}

namespace {

Matrix kernel_projector(const Matrix& J) {
  const Index n = J.cols();
  if (J.rows() == 0) return Matrix::Identity(n, n);
  const Eigen::ColPivHouseholderQR<Matrix> qr(J.transpose());
  const Matrix Q = qr.householderQ();
  const Matrix range = Q.leftCols(qr.rank());
  return Matrix::Identity(n, n) - range * range.transpose();
}

}  // namespace

TangentProjectors tangent_projectors(const IntersectionManifold& M, const Matrix& R) {
  const auto& dm = M.dims();
  const Matrix J = constraint_jacobian(M, R);
  TangentProjectors P;
  P.affine = kernel_projector(J.topRows(dm.m_rows * dm.r));
  P.binary = kernel_projector(J.bottomRows(dm.s));
  P.intersection = kernel_projector(J);
  return P;
}

namespace {

void check_projector(const Matrix& P, const char* name) {
  require(P.rows() == P.cols(), ErrorKind::NonProjector, std::string(name) + " is not square");
  const double scale = std::max(1.0, P.norm());
  if ((P - P.transpose()).norm() > 1e-10 * scale || (P * P - P).norm() > 1e-10 * scale) {
    throw Error(ErrorKind::NonProjector, std::string(name) + " is not an orthogonal projector");
  }
}

}  // namespace

double angle_cosine(const Matrix& P1, const Matrix& P2, const Matrix& Pcap) {
  check_projector(P1, "P1");
  check_projector(P2, "P2");
  check_projector(Pcap, "Pcap");
  require(P1.rows() == P2.rows() && P1.rows() == Pcap.rows(), ErrorKind::DimensionMismatch,
          "angle_cosine: projector sizes differ");
  const Matrix D = P2 * P1 - Pcap;
  const Eigen::BDCSVD<Matrix> svd(D);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double angle_cosine_at(const IntersectionManifold& M, const Matrix& R) {
  const TangentProjectors P = tangent_projectors(M, R);
  return angle_cosine(P.affine, P.binary, P.intersection);
}

}  // namespace isect
