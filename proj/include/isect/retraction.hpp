#pragma once

#include "isect/manifold.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isect {

enum class RetractionKind {
  APM,
  IAP,
  NewtonSLRA,
  RelaxedNewtonSLRA,
  APHL,
  MetricGWA,
  MetricGWANewton,
  TAPR,
};

inline constexpr RetractionKind kAllRetractionKinds[] = {
    RetractionKind::APM,        RetractionKind::IAP,       RetractionKind::NewtonSLRA,
    RetractionKind::RelaxedNewtonSLRA, RetractionKind::APHL, RetractionKind::MetricGWA,
    RetractionKind::MetricGWANewton, RetractionKind::TAPR,
};

/// CLI spelling, e.g. "newton-slra".
std::string_view kind_name(RetractionKind kind);
std::optional<RetractionKind> parse_kind(std::string_view name);

struct TaprParams {
  double a0 = 1.0;
  double a1 = 1e-2;
  double a2 = 1e-3;
  double mu0 = 0.05;
  double mu1 = 0.1;
  double mu2 = 0.3;

  /// Throws InvalidArgument unless a0 > 0, 1 > a1 > a2 > 0 and
  /// 0 < mu0 < mu1 <= mu2 < 1.
  void validate() const;

  /// Defaults with a2 tied to the retraction tolerance (a2 = 1e3 * tol),
  /// capped below a1.
  static TaprParams for_tolerance(double tol);
};

struct RetractionConfig {
  RetractionKind kind = RetractionKind::APM;
  double tol = 1e-10;
  int maxiter = 500;
  SchurPath schur_path = SchurPath::Auto;
  std::optional<TaprParams> tapr;

  void validate() const;
};

enum class Phase { Init, APM, IAP, SecondOrder, Newton, Relaxed, APHL, Dual, Fallback };
std::string_view phase_name(Phase p);

struct IterRecord {
  Phase phase = Phase::Init;
  double combined = 0.0;
  double binary_norm = 0.0;
  double step_norm = 0.0;
  double seconds = 0.0;
  bool accepted = true;
};

struct IterTrace {
  std::vector<IterRecord> records;

  /// Number of steps taken (records after the initial one).
  int steps() const { return records.empty() ? 0 : static_cast<int>(records.size()) - 1; }
  std::vector<double> combined() const;
  std::vector<double> binary() const;
};

struct RetractionResult {
  Matrix point;
  bool converged = false;
  IterTrace trace;
  RetractionKind kind = RetractionKind::APM;
};

/// Raised when an iterative map does not reach its tolerance; carries the
/// trace accumulated so far.
class MaxIterExceeded : public Error {
 public:
  MaxIterExceeded(const std::string& what, IterTrace trace)
      : Error(ErrorKind::MaxIterExceeded, what), trace_(std::move(trace)) {}
  const IterTrace& trace() const { return trace_; }

 private:
  IterTrace trace_;
};

// Single-step maps.
Matrix apm_step(const IntersectionManifold& M, const Matrix& R);
Matrix iap_step(const IntersectionManifold& M, const Matrix& R);
Matrix newton_slra_step(const IntersectionManifold& M, const Matrix& R,
                        SchurPath path = SchurPath::Auto);
Matrix relaxed_newton_slra_step(const IntersectionManifold& M, const Matrix& R);
Matrix aphl_step(const IntersectionManifold& M, const Matrix& R, SchurPath path = SchurPath::Auto);

/// Data of the convex dual of min ||X - V||_F^2 over M_r.
struct DualProblem {
  Matrix Vprime;  // V - 1/2 e e1^T
  Vector gamma;   // A'e - 2b'

  static DualProblem from_point(const IntersectionManifold& M, const Matrix& V);
};

/// G(Theta) = sum_B ||Y_i|| + sum_{not B} ||Y_i||^2 + <gamma e1^T, Theta>.
double dual_objective(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta);
/// Gradient of G: gamma e1^T + A' Diag(v) Y.
Matrix dual_gradient(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta);

Matrix gwa_iterate(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta,
                   SchurPath path = SchurPath::Auto);
Matrix gwa_newton_iterate(const IntersectionManifold& M, const DualProblem& dual,
                          const Matrix& Theta, SchurPath path = SchurPath::Auto);

enum class MetricMethod { GWA, GWANewton };

struct MetricProjection {
  Matrix point;
  Matrix theta;
  int iterations = 0;
};

/// Metric projection onto M_r through the dual iteration started at 0.
MetricProjection metric_project(const IntersectionManifold& M, const Matrix& V, MetricMethod method,
                                double tol, int maxiter, SchurPath path = SchurPath::Auto);

/// Runs cfg.kind from the trial point V until the combined residual is
/// <= cfg.tol * (||R||_F + 1). Throws MaxIterExceeded on failure.
RetractionResult solve_to_manifold(const IntersectionManifold& M, const Matrix& V,
                                   const RetractionConfig& cfg);

/// Retr_x(eta) as the limit of cfg.kind started from x + eta.
RetractionResult retract(const IntersectionManifold& M, const Matrix& x, const TangentVector& eta,
                         const RetractionConfig& cfg);
RetractionResult retract(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                         const RetractionConfig& cfg);

/// Three-phase hybrid (APM -> iAP -> NewtonSLRA) with merit safeguards.
RetractionResult tapr(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                      const TaprParams& params, double tol, int maxiter,
                      SchurPath path = SchurPath::Auto);

/// max(min(grad_norm / 100, 1 / i^3), 1e-9)
double retract_tol(double grad_norm, int i);

}  // namespace isect
