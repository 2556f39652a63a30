#pragma once

#include "isect/problems.hpp"
#include "isect/retraction.hpp"

#include <vector>

namespace isect {

enum class BBVariant { BB1, BB2, Alternating };

/// Constructive is feasible_init (a rank-one vertex, where the Riemannian
/// gradient vanishes); Random is random_feasible_point(inst, start_seed).
enum class StartPoint { Constructive, Random };

struct OptimizerConfig {
  RetractionConfig retraction;
  double grad_tol = 1e-4;
  int max_outer = 2000;
  BBVariant bb_variant = BBVariant::Alternating;
  double step_min = 1e-8;
  double step_max = 1e2;
  int nonmonotone_window = 5;
  /// Wall-clock cap in seconds; 0 disables it.
  double time_limit = 0.0;
  StartPoint start = StartPoint::Constructive;
  std::uint64_t start_seed = 1;

  void validate() const;
};

struct IterLog {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  int retraction_iters = 0;
  double residual = 0.0;
  double retraction_tol = 0.0;
  int halvings = 0;
  /// max of the window the acceptance test compared against
  double reference = 0.0;
};

struct SolveReport {
  Matrix final_point;
  double final_objective = 0.0;
  double grad_norm = 0.0;
  int outer_iters = 0;
  int total_retraction_iters = 0;
  double mean_retraction_iters = 0.0;
  double wall_time = 0.0;
  bool converged = false;
  std::vector<IterLog> per_iter_log;  // entry 0 describes the start point
};

/// trace(R^T Q' R) + 2 c'^T R e1
double objective(const ProblemInstance& inst, const Matrix& R);
/// 2 Q' R + 2 c' e1^T
Matrix gradient(const ProblemInstance& inst, const Matrix& R);
/// P_{T_R M_r} of the Euclidean gradient.
Matrix riemannian_gradient(const ProblemInstance& inst, const Matrix& R);

/// Barzilai-Borwein step from the last displacement s and gradient change y.
/// `iter` selects the variant for Alternating (odd: BB1, even: BB2).
double bb_step(const Matrix& s, const Matrix& y, BBVariant variant, int iter, double step_min,
               double step_max);

SolveReport solve(const ProblemInstance& inst, const Matrix& start, const OptimizerConfig& cfg);
/// Starts from the point selected by cfg.start.
SolveReport solve(const ProblemInstance& inst, const OptimizerConfig& cfg);

}  // namespace isect
