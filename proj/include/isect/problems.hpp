#pragma once

#include "isect/manifold.hpp"

#include <cstdint>
#include <string>

namespace isect {

struct QapInstance {
  Index p = 0;
  Matrix W;  // flow
  Matrix D;  // distance
  std::string name;
};

struct QkpInstance {
  Index n = 0;
  Matrix Q;  // symmetric, integer valued in {0} u {1..100}
  Vector a;  // integer weights in {1..50}
  double tau = 0.0;
  double density = 1.0;
  std::uint64_t seed = 0;
};

enum class ProblemKind { QAP, QKP };

struct ProblemMeta {
  ProblemKind kind = ProblemKind::QKP;
  std::string name;
  std::uint64_t seed = 0;
  Index n = 0;  // original variable count
  Index p = 0;  // QAP permutation size, 0 for QKP
  Index r = 0;
  /// True when the source problem maximizes; Qlift then holds -Q.
  bool negated = false;
  double tau = 0.0;
};

struct ProblemInstance {
  IntersectionManifold manifold;
  Matrix Qlift;  // N x N
  Vector clift;  // N
  ProblemMeta meta;
};

/// QAPLib flat format: p, then p^2 entries of W, then p^2 of D.
QapInstance parse_qaplib(const std::string& text, std::string name = "");

/// x = vec(Y), Q = D (x) W, A = [e^T (x) I; I (x) e^T], lifted with
/// A' = [A I 0; A 0 -I] (N = p^2 + 4p, m_rows = 4p, B = first p^2 rows).
ProblemInstance lift_qap(const QapInstance& inst, Index r = 0);

QkpInstance gen_qkp(Index n, double density, std::uint64_t seed);

/// N = n + 2, A' = [a^T 1 0; a^T 0 -1], b' = (tau, tau), Qlift = -Q.
ProblemInstance lift_qkp(const QkpInstance& inst, Index r = 0);

/// Serializes as "qkp v1 n density seed", upper triangle of Q row by row,
/// then a, then tau.
std::string write_qkp(const QkpInstance& inst);
QkpInstance parse_qkp(const std::string& text);

/// Loads either a qkp-v1 file or a QAPLib file and lifts it with rank r
/// (r = 0 selects initial_rank(n)).
ProblemInstance load_instance(const std::string& path, Index r = 0);

/// min(200, ceil(n / 5))
Index initial_rank(Index n);

/// Rank-one feasible point: QKP x = 0 with slacks (tau, -tau); QAP the
/// identity permutation with zero slacks.
Matrix feasible_init(const ProblemInstance& inst);

/// Feasible point with binary rows drawn uniformly on their spheres and the
/// remaining rows solving the affine system in the least-squares sense.
Matrix random_feasible_point(const ProblemInstance& inst, std::uint64_t seed);
Matrix random_feasible_point(const IntersectionManifold& M, std::uint64_t seed);

/// Seeded standard-normal N x r matrix.
Matrix random_matrix(Index rows, Index cols, std::uint64_t seed);

}  // namespace isect
