#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isect/manifold.hpp"
#include "isect/problems.hpp"
#include "isect/verification.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace isect;
using isect::testing::random_manifold;

namespace {

// Row 0 binary, row 1 pinned by A = [0 1], b = 0.
IntersectionManifold one_binary_row(Index r) {
  Matrix A(1, 2);
  A << 0, 1;
  return IntersectionManifold(A, Vector::Zero(1), {0}, r);
}

IntersectionManifold sum_three() {
  Matrix A(1, 3);
  A << 1, 1, 1;
  return IntersectionManifold(A, Vector::Constant(1, 3.0), {0}, 1);
}

Matrix rows2(std::initializer_list<std::pair<double, double>> rows) {
  Matrix R(static_cast<Index>(rows.size()), 2);
  Index i = 0;
  for (auto [a, b] : rows) {
    R(i, 0) = a;
    R(i, 1) = b;
    ++i;
  }
  return R;
}

Matrix line_projector(double angle) {
  Vector u(2);
  u << std::cos(angle), std::sin(angle);
  return u * u.transpose();
}

}  // namespace

TEST_CASE("binary_residual examples") {
  const auto M = one_binary_row(2);
  CHECK(binary_residual(M, rows2({{1, 0}, {0, 0}}))(0) == doctest::Approx(0.0));
  CHECK(binary_residual(M, rows2({{0, 0}, {0, 0}}))(0) == doctest::Approx(0.0));
  CHECK(binary_residual(M, rows2({{0.6, 0}, {0, 0}}))(0) == doctest::Approx(-0.24));
  CHECK_THROWS_AS(binary_residual(M, Matrix::Zero(3, 2)), Error);
}

TEST_CASE("affine_residual examples") {
  const auto M = sum_three();
  CHECK(affine_residual(M, Matrix::Ones(3, 1))(0, 0) == doctest::Approx(0.0));
  CHECK(affine_residual(M, Matrix::Zero(3, 1))(0, 0) == doctest::Approx(-3.0));

  const auto M2 = M.with_rank(2);
  Matrix R(3, 2);
  R << 1, 2, 1, 0, 1, 5;
  const Matrix E = affine_residual(M2, R);
  CHECK(E(0, 0) == doctest::Approx(0.0));
  CHECK(E(0, 1) == doctest::Approx(7.0));
}

TEST_CASE("project_affine examples") {
  const auto M = sum_three();
  const Matrix P = project_affine(M, Matrix::Zero(3, 1));
  CHECK((P - Matrix::Ones(3, 1)).norm() < 1e-14);
  CHECK((project_affine(M, Matrix::Ones(3, 1)) - Matrix::Ones(3, 1)).norm() < 1e-14);

  const auto Mr = random_manifold(5, 7, 2, 3, 2);
  const Matrix R = random_matrix(7, 2, 9);
  const Matrix P1 = project_affine(Mr, R);
  CHECK((project_affine(Mr, P1) - P1).norm() <= 1e-10 * P1.norm());
  CHECK(affine_residual(Mr, P1).norm() <= 1e-10 * scale_of(P1));
}

TEST_CASE("singular Gram matrix is rejected") {
  Matrix A(2, 3);
  A << 1, 1, 1, 2, 2, 2;
  CHECK_THROWS_AS(IntersectionManifold(A, Vector::Ones(2), {}, 1), Error);
  try {
    IntersectionManifold(A, Vector::Ones(2), {}, 1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularGram);
  }
}

TEST_CASE("project_binary examples") {
  const auto M = one_binary_row(2);
  auto first = [&](double a, double b) {
    return Eigen::RowVector2d(project_binary(M, rows2({{a, b}, {0, 0}})).row(0));
  };
  CHECK((first(1, 0) - Eigen::RowVector2d(1, 0)).norm() < 1e-15);
  CHECK((first(0.5, 0.5) - Eigen::RowVector2d(0.5, 0.5)).norm() < 1e-15);
  const Eigen::RowVector2d p = first(2, 0);
  CHECK((p - Eigen::RowVector2d(1, 0)).norm() < 1e-15);
  CHECK(std::abs(p.squaredNorm() - p(0)) < 1e-12);

  // unbound rows are untouched
  const Matrix R = rows2({{2, 0}, {3, 4}});
  CHECK(project_binary(M, R).row(1) == R.row(1));
}

TEST_CASE("project_binary signals a degenerate row with its index") {
  const auto M = random_manifold(3, 6, 2, 3, 1);
  Matrix R = random_matrix(6, 2, 4);
  R.row(2) << 0.5, 0.0;
  try {
    project_binary(M, R);
    FAIL("expected DegenerateRow");
  } catch (const DegenerateRowError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateRow);
    CHECK(e.row() == 2);
  }
}

TEST_CASE("row_normals examples") {
  const auto M = one_binary_row(2);
  CHECK((row_normals(M, rows2({{1, 0}, {0, 0}})) - rows2({{1, 0}})).norm() == 0.0);
  CHECK((row_normals(M, rows2({{0, 0}, {0, 0}})) - rows2({{-1, 0}})).norm() == 0.0);

  const auto Mr = random_manifold(8, 8, 3, 3, 2);
  const Matrix x = random_feasible_point(Mr, 21);
  const Matrix C = row_normals(Mr, x);
  for (Index k = 0; k < C.rows(); ++k) CHECK(std::abs(C.row(k).norm() - 1.0) < 1e-12);
}

TEST_CASE("project_tangent examples") {
  const auto M = one_binary_row(2);
  const Matrix R = rows2({{1, 0}, {0, 0}});
  const Matrix v = rows2({{2, 3}, {0, 0}});
  const Matrix xi = project_tangent(M, R, v).xi;
  CHECK((Eigen::RowVector2d(xi.row(0)) - Eigen::RowVector2d(0, 3)).norm() < 1e-14);

  const auto Mr = random_manifold(12, 8, 2, 3, 2);
  const Matrix x = random_feasible_point(Mr, 13);
  const Matrix w = random_matrix(8, 2, 14);
  const Matrix t = project_tangent(Mr, x, w).xi;
  CHECK((project_tangent(Mr, x, t).xi - t).norm() <= 1e-10 * t.norm());

  // normal vector: A'^T L + row embedding of mu_i c_i
  const Matrix L = random_matrix(2, 2, 15);
  const Vector mu = random_matrix(3, 1, 16);
  const Matrix n = Mr.affine().A().transpose() * L + embed_rows(Mr, mu, row_normals(Mr, x));
  CHECK(project_tangent(Mr, x, n).xi.norm() <= 1e-10 * n.norm());
}

TEST_CASE("project_tangent is self-adjoint and orthogonal to the tangent basis") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto M = random_manifold(seed, 8, 2, 3, 2);
    const Matrix x = random_feasible_point(M, seed + 50);
    const Matrix u = random_matrix(8, 2, seed + 100);
    const Matrix v = random_matrix(8, 2, seed + 200);
    const Matrix Pu = project_tangent(M, x, u).xi;
    const Matrix Pv = project_tangent(M, x, v).xi;
    CHECK(std::abs(inner(Pu, v) - inner(u, Pv)) <= 1e-10 * u.norm() * v.norm());

    const Matrix basis = tangent_basis(M, x);
    const Matrix resid = v - Pv;
    const Vector proj = basis.transpose() * Eigen::Map<const Vector>(resid.data(), resid.size());
    CHECK(proj.norm() <= 1e-10 * v.norm());
  }
}

TEST_CASE("project_tangent Direct and SMW paths agree") {
  // s = 12 > 4 m r = 8 so Auto picks SMW
  const auto M = random_manifold(31, 16, 2, 12, 1);
  CHECK(resolve_path(M, SchurPath::Auto) == SchurPath::SMW);
  const Matrix x = random_feasible_point(M, 32);
  const Matrix v = random_matrix(16, 2, 33);
  const Matrix a = project_tangent(M, x, v, SchurPath::Direct).xi;
  const Matrix b = project_tangent(M, x, v, SchurPath::SMW).xi;
  CHECK((a - b).norm() <= 1e-10 * a.norm());
}

TEST_CASE("solve_schur Direct and SMW agree") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto M = random_manifold(seed, 10, 2, 6, 1);
    const Matrix x = random_feasible_point(M, seed + 7);
    const Matrix C = row_normals(M, x);
    const Vector rhs = random_matrix(6, 1, seed + 9);
    const Vector d = C.rowwise().squaredNorm();
    const Vector a = solve_schur(M, C, d, rhs, SchurPath::Direct);
    const Vector b = solve_schur(M, C, d, rhs, SchurPath::SMW);
    CHECK((a - b).norm() <= 1e-10 * a.norm());
  }
}

TEST_CASE("linearized_project examples") {
  const auto M = one_binary_row(2);
  const Matrix on = rows2({{0.5, 0.5}, {0, 0}});
  CHECK((linearized_project(M, on) - on).norm() < 1e-15);

  const Matrix L = linearized_project(M, rows2({{2, 0}, {0, 0}}));
  CHECK(L(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(L(0, 1) == doctest::Approx(0.0));
  const double before = 2.0;
  const double after = std::abs(binary_residual(M, L)(0));
  CHECK(after == doctest::Approx(4.0 / 9.0));
  CHECK(after < before);

  CHECK_THROWS_AS(linearized_project(M, rows2({{0.5, 0}, {0, 0}})), Error);
}

TEST_CASE("linearized_project agrees with project_binary to second order") {
  const auto M = random_manifold(41, 8, 3, 3, 2);
  const Matrix x = random_feasible_point(M, 42);
  const Matrix Z = random_matrix(8, 3, 43);
  std::vector<double> dist, gap;
  for (int k = 7; k >= 0; --k) {
    const double eps = std::pow(10.0, -1.0 - 0.5 * k);
    const Matrix R = x + eps * Z / Z.norm();
    const Matrix P = project_binary(M, R);
    dist.push_back((R - P).norm());
    gap.push_back((linearized_project(M, R) - P).norm());
  }
  const SlopeFit fit = fit_slope(dist, gap, 1e-15);
  CHECK(fit.slope >= 1.8);
}

TEST_CASE("angle_cosine examples") {
  const Matrix P = line_projector(0.3);
  CHECK(angle_cosine(P, P, P) == doctest::Approx(0.0).epsilon(1e-12));

  const double pi = std::numbers::pi;
  const Matrix P1 = line_projector(0.0);
  const Matrix P2 = line_projector(pi / 3.0);
  const double c = angle_cosine(P1, P2, Matrix::Zero(2, 2));
  // brute force: max <xi, zeta> over unit xi in L1, zeta in L2
  double best = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Vector xi = Eigen::Vector2d(a ? -1.0 : 1.0, 0.0);
      const Vector zeta =
          (b ? -1.0 : 1.0) * Eigen::Vector2d(std::cos(pi / 3.0), std::sin(pi / 3.0));
      best = std::max(best, xi.dot(zeta));
    }
  }
  CHECK(c == doctest::Approx(best).epsilon(1e-12));
  CHECK(c == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(angle_cosine(P1, line_projector(pi / 2.0), Matrix::Zero(2, 2)) <= 1e-15);
}

TEST_CASE("angle_cosine rejects non-projectors") {
  Matrix Q(2, 2);
  Q << 1, 1, 0, 1;
  try {
    angle_cosine(Q, Q, Matrix::Zero(2, 2));
    FAIL("expected NonProjector");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonProjector);
  }
}

TEST_CASE("projection invariants on random inputs") {
  const auto M = random_manifold(51, 8, 2, 3, 2);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Matrix X = 3.0 * random_matrix(8, 2, seed);
    const Matrix Y = 3.0 * random_matrix(8, 2, seed + 500);
    const Matrix PA = project_affine(M, X);
    const Matrix PB = project_binary(M, X);
    CHECK((project_affine(M, PA) - PA).norm() <= 1e-10 * scale_of(PA));
    CHECK((project_binary(M, PB) - PB).norm() <= 1e-10 * scale_of(PB));
    CHECK((project_affine(M, X) - project_affine(M, Y)).norm() <= (X - Y).norm() * (1 + 1e-12));
  }
}

TEST_CASE("angle diagnostic lies in [0, 1) at feasible points of generated instances") {
  const auto qkp = lift_qkp(gen_qkp(6, 0.8, 3), 2);
  const auto qap = lift_qap(parse_qaplib("3  0 1 2 1 0 3 2 3 0  0 5 1 5 0 2 1 2 0"), 2);
  for (const auto* inst : {&qkp, &qap}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Matrix x = random_feasible_point(*inst, seed);
      const double c = angle_cosine_at(inst->manifold, x);
      CHECK(c >= 0.0);
      CHECK(c < 1.0);
    }
  }
}

TEST_CASE("constraint jacobian kernel matches the tangent projector") {
  const auto M = random_manifold(61, 7, 2, 3, 2);
  const Matrix x = random_feasible_point(M, 62);
  const Matrix J = constraint_jacobian(M, x);
  CHECK(J.rows() == 2 * 2 + 3);
  CHECK(J.cols() == 7 * 2);
  const Matrix xi = project_tangent(M, x, random_matrix(7, 2, 63)).xi;
  const Vector Jxi = J * Eigen::Map<const Vector>(xi.data(), xi.size());
  CHECK(Jxi.norm() <= 1e-10 * xi.norm());

  const TangentProjectors P = tangent_projectors(M, x);
  const Matrix Pv = P.intersection * Eigen::Map<const Vector>(xi.data(), xi.size());
  CHECK((Pv - Eigen::Map<const Vector>(xi.data(), xi.size())).norm() <= 1e-10 * xi.norm());
}
