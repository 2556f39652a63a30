#include "isect/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

namespace isect {

void OptimizerConfig::validate() const {
  retraction.validate();
  require(grad_tol > 0.0, ErrorKind::InvalidArgument, "grad_tol must be positive");
  require(max_outer >= 1, ErrorKind::InvalidArgument, "max_outer must be >= 1");
  require(step_min > 0.0 && step_min <= step_max, ErrorKind::InvalidArgument,
          "step bounds need 0 < min <= max");
  require(nonmonotone_window >= 1, ErrorKind::InvalidArgument, "nonmonotone window must be >= 1");
}

double objective(const ProblemInstance& inst, const Matrix& R) {
  inst.manifold.check_shape(R, "objective");
  return inner(R, inst.Qlift * R) + 2.0 * inst.clift.dot(R.col(0));
}

Matrix gradient(const ProblemInstance& inst, const Matrix& R) {
  inst.manifold.check_shape(R, "gradient");
  Matrix G = 2.0 * (inst.Qlift * R);
  G.col(0) += 2.0 * inst.clift;
  return G;
}

Matrix riemannian_gradient(const ProblemInstance& inst, const Matrix& R) {
  return project_tangent(inst.manifold, R, gradient(inst, R)).xi;
}

double bb_step(const Matrix& s, const Matrix& y, BBVariant variant, int iter, double step_min,
               double step_max) {
  const double ss = s.squaredNorm();
  const double sy = inner(s, y);
  const double yy = y.squaredNorm();
  bool first = variant == BBVariant::BB1;
  if (variant == BBVariant::Alternating) first = (iter % 2) == 1;
  const double raw = first ? ss / sy : sy / yy;
  if (!std::isfinite(raw) || raw <= 0.0) return step_min;
  return std::clamp(raw, step_min, step_max);
}

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

SolveReport solve(const ProblemInstance& inst, const Matrix& start, const OptimizerConfig& cfg) {
  cfg.validate();
  const IntersectionManifold& M = inst.manifold;
  M.check_shape(start, "solve");
  const auto t0 = Clock::now();

  SolveReport rep;
  Matrix R = start;
  double f = objective(inst, R);
  Matrix g = riemannian_gradient(inst, R);
  double gn = g.norm();
  std::deque<double> window{f};
  rep.per_iter_log.push_back(IterLog{0, f, gn, 0.0, 0, combined_residual(M, R), 0.0, 0, f});

  Matrix s_prev, y_prev;
  double t_prev = 0.0;
  for (int i = 1; i <= cfg.max_outer; ++i) {
    if (gn <= cfg.grad_tol) break;
    if (cfg.time_limit > 0.0 &&
        std::chrono::duration<double>(Clock::now() - t0).count() > cfg.time_limit) {
      break;
    }
    double t = 1e-3 / (gn + 1.0);
    if (i > 1) {
      // BB is meaningless under non-positive curvature; grow the last step instead
      t = inner(s_prev, y_prev) > 0.0
              ? bb_step(s_prev, y_prev, cfg.bb_variant, i, cfg.step_min, cfg.step_max)
              : std::min(2.0 * t_prev, cfg.step_max);
    }
    const double reference = *std::max_element(window.begin(), window.end());

    RetractionConfig rc = cfg.retraction;
    const double abs_tol = retract_tol(gn, i);
    rc.tol = std::max(abs_tol / scale_of(R), 1e-15);
    if (rc.kind == RetractionKind::TAPR && !cfg.retraction.tapr) {
      rc.tapr = TaprParams::for_tolerance(abs_tol);
    }

    bool accepted = false;
    int halvings = 0;
    RetractionResult res;
    double f_new = 0.0;
    std::string last_error = "sufficient decrease not met";
    for (; halvings <= 20; ++halvings) {
      try {
        res = retract(M, R, Matrix(-t * g), rc);
        f_new = objective(inst, res.point);
        if (f_new <= reference - 1e-8 * t * gn * gn) {
          accepted = true;
          break;
        }
        last_error = "sufficient decrease not met";
      } catch (const Error& e) {
        last_error = e.what();
      }
      if (halvings < 20) t *= 0.5;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "outer iteration " << i << ": no acceptable step after 20 halvings (" << last_error
         << ")";
      throw Error(ErrorKind::LineSearchFailed, os.str());
    }

    Matrix g_new = riemannian_gradient(inst, res.point);
    s_prev = res.point - R;
    y_prev = g_new - g;
    R = std::move(res.point);
    g = std::move(g_new);
    f = f_new;
    t_prev = t;
    gn = g.norm();
    window.push_back(f);
    while (static_cast<int>(window.size()) > cfg.nonmonotone_window) window.pop_front();

    const int steps = res.trace.steps();
    rep.total_retraction_iters += steps;
    rep.outer_iters = i;
    rep.per_iter_log.push_back(IterLog{i, f, gn, t, steps, res.trace.records.back().combined,
                                       abs_tol, halvings, reference});
  }

  rep.final_point = R;
  rep.final_objective = f;
  rep.grad_norm = gn;
  rep.converged = gn <= cfg.grad_tol;
  rep.mean_retraction_iters =
      rep.outer_iters > 0 ? static_cast<double>(rep.total_retraction_iters) / rep.outer_iters : 0.0;
  rep.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

SolveReport solve(const ProblemInstance& inst, const OptimizerConfig& cfg) {
  const Matrix R0 = cfg.start == StartPoint::Constructive
                        ? feasible_init(inst)
                        : random_feasible_point(inst, cfg.start_seed);
  return solve(inst, R0, cfg);
}

}  // namespace isect
