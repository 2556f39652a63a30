#include "isect/retraction.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace isect {

std::string_view kind_name(RetractionKind kind) {
  switch (kind) {
    case RetractionKind::APM: return "apm";
    case RetractionKind::IAP: return "iap";
    case RetractionKind::NewtonSLRA: return "newton-slra";
    case RetractionKind::RelaxedNewtonSLRA: return "relaxed-newton-slra";
    case RetractionKind::APHL: return "aphl";
    case RetractionKind::MetricGWA: return "gwa";
    case RetractionKind::MetricGWANewton: return "gwa-newton";
    case RetractionKind::TAPR: return "tapr";
  }
  return "unknown";
}

std::optional<RetractionKind> parse_kind(std::string_view name) {
  for (const RetractionKind k : kAllRetractionKinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::APM: return "apm";
    case Phase::IAP: return "iap";
    case Phase::SecondOrder: return "second-order";
    case Phase::Newton: return "newton";
    case Phase::Relaxed: return "relaxed";
    case Phase::APHL: return "aphl";
    case Phase::Dual: return "dual";
    case Phase::Fallback: return "fallback";
  }
  return "unknown";
}

void TaprParams::validate() const {
  const bool ok = a0 > 0.0 && a1 < 1.0 && a1 > a2 && a2 > 0.0 && mu0 > 0.0 && mu0 < mu1 &&
                  mu1 <= mu2 && mu2 < 1.0;
  require(ok, ErrorKind::InvalidArgument,
          "TAPR parameters need a0 > 0, 1 > a1 > a2 > 0, 0 < mu0 < mu1 <= mu2 < 1");
}

TaprParams TaprParams::for_tolerance(double tol) {
  TaprParams p;
  p.a2 = std::min(tol * 1e3, 0.5 * p.a1);
  return p;
}

void RetractionConfig::validate() const {
  require(tol >= 1e-15, ErrorKind::InvalidArgument, "retraction tol must be >= 1e-15");
  require(maxiter >= 1, ErrorKind::InvalidArgument, "retraction maxiter must be >= 1");
  if (tapr) tapr->validate();
}

std::vector<double> IterTrace::combined() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(rec.combined);
  return out;
}

std::vector<double> IterTrace::binary() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(rec.binary_norm);
  return out;
}

double retract_tol(double grad_norm, int i) {
  const double ii = static_cast<double>(std::max(i, 1));
  return std::max(std::min(grad_norm / 1e2, 1.0 / (ii * ii * ii)), 1e-9);
}

// ---------------------------------------------------------------------------
// Single-step maps

Matrix apm_step(const IntersectionManifold& M, const Matrix& R) {
  return project_affine(M, project_binary(M, R));
}

Matrix iap_step(const IntersectionManifold& M, const Matrix& R) {
  return project_affine(M, linearized_project(M, R));
}

Matrix newton_slra_step(const IntersectionManifold& M, const Matrix& R, SchurPath path) {
  const Matrix Rt = project_binary(M, R);
  const Matrix C = row_normals(M, Rt);
  const auto& B = M.binary_rows();
  Vector g(C.rows());
  for (Index k = 0; k < C.rows(); ++k) g(k) = (R.row(B[k]) - Rt.row(B[k])).dot(C.row(k));
  const Vector mu = solve_schur(M, C, C.rowwise().squaredNorm(), g, path);
  const Matrix T = embed_rows(M, mu, C);
  const Matrix& A = M.affine().A();
  // Lambda = -(A A^T)^{-1} A_B Diag(mu) C;  Delta = -A^T Lambda - T_B^*(mu).
  const Matrix Lambda = -M.affine().gram_solve(A * T);
  return R - A.transpose() * Lambda - T;
}

Matrix relaxed_newton_slra_step(const IntersectionManifold& M, const Matrix& R) {
  const Matrix Rt = project_binary(M, R);
  const Matrix D = R - Rt;
  const double nd = D.norm();
  if (nd < 1e-14) return project_affine(M, Rt);
  const Matrix P1 = project_affine(M, R);
  const Matrix P0D = project_affine_kernel(M, D);
  const double denom = P0D.squaredNorm();
  if (!(denom > 1e-28 * nd * nd)) {
    throw Error(ErrorKind::VanishingDirection,
                "relaxed tangent hyperplane is parallel to the affine normal space");
  }
  const double lambda = inner(D, P1 - Rt) / denom;
  return P1 - lambda * P0D;
}

Matrix aphl_step(const IntersectionManifold& M, const Matrix& R, SchurPath path) {
  const Matrix E = affine_residual(M, R);
  const Matrix C = row_normals(M, R);
  const Matrix GE = M.affine().gram_solve(E);
  const Matrix ABt_GE = M.A_binary().transpose() * GE;  // s x r
  const Vector h = (ABt_GE.array() * C.array()).rowwise().sum();
  const Vector mu = solve_schur(M, C, Vector::Ones(C.rows()), h, path);
  const Matrix T = embed_rows(M, mu, C);
  const Matrix& A = M.affine().A();
  const Matrix Lambda = M.affine().gram_solve(E + A * T);
  // Q_k[A^T Lambda] = A^T Lambda - T_B^*(mu)
  return project_binary(M, R - A.transpose() * Lambda + T);
}

// ---------------------------------------------------------------------------
// Dual (generalized Weiszfeld) iterations

DualProblem DualProblem::from_point(const IntersectionManifold& M, const Matrix& V) {
  M.check_shape(V, "DualProblem");
  DualProblem d;
  d.Vprime = V;
  d.Vprime.col(0).array() -= 0.5;
  const Matrix& A = M.affine().A();
  d.gamma = A.rowwise().sum() - 2.0 * M.affine().b();
  return d;
}

namespace {

constexpr double kWeightFloor = 1e-12;

std::vector<char> binary_mask(const IntersectionManifold& M) {
  std::vector<char> mask(static_cast<std::size_t>(M.dims().N), 0);
  for (const Index i : M.binary_rows()) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

Matrix dual_Y(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta) {
  require(Theta.rows() == M.dims().m_rows && Theta.cols() == M.dims().r,
          ErrorKind::DimensionMismatch, "Theta must be m_rows x r");
  return dual.Vprime + M.affine().A().transpose() * Theta;
}

Vector dual_weights(const IntersectionManifold& M, const Matrix& Y) {
  Vector v = Vector::Constant(Y.rows(), 2.0);
  for (const Index i : M.binary_rows()) v(i) = 1.0 / std::max(Y.row(i).norm(), kWeightFloor);
  return v;
}

Matrix gamma_e1(const DualProblem& dual, Index r) {
  Matrix G = Matrix::Zero(dual.gamma.size(), r);
  G.col(0) = dual.gamma;
  return G;
}

Matrix chol_solve(const Matrix& K, const Matrix& rhs, const char* what) {
  const Eigen::LLT<Matrix> llt(K);
  if (llt.info() == Eigen::Success) {
    const Vector diag = llt.matrixLLT().diagonal();
    if (diag.minCoeff() > 1e-7 * std::sqrt(std::max(K.diagonal().maxCoeff(), 1e-300))) {
      return llt.solve(rhs);
    }
  }
  const Eigen::PartialPivLU<Matrix> lu(K);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorKind::SingularSystem, what);
  return lu.solve(rhs);
}

}  // namespace

double dual_objective(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta) {
  const Matrix Y = dual_Y(M, dual, Theta);
  const auto mask = binary_mask(M);
  double g = 0.0;
  for (Index i = 0; i < Y.rows(); ++i) {
    g += mask[static_cast<std::size_t>(i)] ? Y.row(i).norm() : Y.row(i).squaredNorm();
  }
  return g + dual.gamma.dot(Theta.col(0));
}

Matrix dual_gradient(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta) {
  const Matrix Y = dual_Y(M, dual, Theta);
  const Vector v = dual_weights(M, Y);
  return gamma_e1(dual, Y.cols()) + M.affine().A() * (v.asDiagonal() * Y);
}

Matrix gwa_iterate(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta,
                   SchurPath path) {
  const Matrix Y = dual_Y(M, dual, Theta);
  const Vector v = dual_weights(M, Y);
  const Matrix& A = M.affine().A();
  const Matrix& AB = M.A_binary();
  const auto& B = M.binary_rows();
  const Index s = M.dims().s;

  const Matrix rhs = gamma_e1(dual, Y.cols()) + A * (v.asDiagonal() * dual.Vprime);
  Vector dB(s);
  for (Index k = 0; k < s; ++k) dB(k) = v(B[k]) - 2.0;

  if (resolve_path(M, path) == SchurPath::Direct) {
    // A Diag(v) A^T = 2 A A^T + A_B Diag(v_B - 2) A_B^T
    const Matrix K = 2.0 * A * A.transpose() + AB * dB.asDiagonal() * AB.transpose();
    return -chol_solve(K, rhs, "weighted Gram matrix of the Weiszfeld step is singular");
  }

  // (G + A_B D A_B^T)^{-1} = G^{-1} - G^{-1} A_B (I + D A_B^T G^{-1} A_B)^{-1} D A_B^T G^{-1},
  // with G = 2 A A^T so that A_B^T G^{-1} A_B = S / 2.
  const Matrix X = 0.5 * M.affine().gram_solve(rhs);
  Matrix cap = 0.5 * (dB.asDiagonal() * M.schur_kernel());
  cap.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<Matrix> lu(cap);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorKind::SingularSystem, "Woodbury capacitance of the Weiszfeld step is singular");
  }
  const Matrix Z = lu.solve(dB.asDiagonal() * (AB.transpose() * X));
  return -(X - 0.5 * M.affine().gram_solve(AB * Z));
}

Matrix gwa_newton_iterate(const IntersectionManifold& M, const DualProblem& dual,
                          const Matrix& Theta, SchurPath path) {
  const Matrix Y = dual_Y(M, dual, Theta);
  const auto& B = M.binary_rows();
  for (const Index i : B) {
    if (!(Y.row(i).norm() > kWeightFloor)) {
      throw Error(ErrorKind::SingularSystem, "Newton Hessian undefined at a vanishing dual row");
    }
  }
  const Vector v = dual_weights(M, Y);
  const Matrix& A = M.affine().A();
  const Index m = M.dims().m_rows;
  const Index r = M.dims().r;
  const Index N = M.dims().N;
  const Matrix rhs = gamma_e1(dual, r) + A * (v.asDiagonal() * Y);

  if (resolve_path(M, path) == SchurPath::Direct) {
    // Vectorized operator sum_i M_i (x) a_i a_i^T over every ambient row,
    // with M_i the row block of the Hessian operator P_k.
    const auto mask = binary_mask(M);
    Matrix L = Matrix::Zero(m * r, m * r);
    for (Index i = 0; i < N; ++i) {
      const Vector a = A.col(i);
      const Matrix aa = a * a.transpose();
      Matrix Mi;
      if (mask[static_cast<std::size_t>(i)]) {
        const Eigen::RowVectorXd y = Y.row(i);
        const double ny = y.norm();
        Mi = Matrix::Identity(r, r) / ny - (y.transpose() * y) / (ny * ny * ny);
      } else {
        Mi = 2.0 * Matrix::Identity(r, r);
      }
      for (Index p = 0; p < r; ++p) {
        for (Index q = 0; q < r; ++q) {
          if (Mi(p, q) != 0.0) L.block(p * m, q * m, m, m) += Mi(p, q) * aa;
        }
      }
    }
    const Vector rhs_vec = Eigen::Map<const Vector>(rhs.data(), rhs.size());
    const Eigen::PartialPivLU<Matrix> lu(L);
    if (!(lu.rcond() > 1e-14)) throw Error(ErrorKind::SingularSystem, "Newton system is singular");
    const Vector d = lu.solve(rhs_vec);
    return Theta - Eigen::Map<const Matrix>(d.data(), m, r);
  }

  // I_r (x) K - W W^T, K = A Diag(v) A^T, W columns vec(a_i yhat_i) with
  // yhat_i = y_i / ||y_i||^{3/2}.
  const Matrix& AB = M.A_binary();
  const Index s = M.dims().s;
  Matrix Yhat(s, r);
  for (Index k = 0; k < s; ++k) {
    const double ny = Y.row(B[k]).norm();
    Yhat.row(k) = Y.row(B[k]) / std::pow(ny, 1.5);
  }
  Vector dB(s);
  for (Index k = 0; k < s; ++k) dB(k) = v(B[k]) - 2.0;
  const Matrix K = 2.0 * A * A.transpose() + AB * dB.asDiagonal() * AB.transpose();
  const Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "weighted Gram matrix is not positive definite");
  }
  const Matrix X = llt.solve(rhs);
  const Matrix KinvAB = llt.solve(AB);
  Matrix cap = -(AB.transpose() * KinvAB).cwiseProduct(Yhat * Yhat.transpose());
  cap.diagonal().array() += 1.0;
  const Vector WtX = ((AB.transpose() * X).array() * Yhat.array()).rowwise().sum();
  const Eigen::PartialPivLU<Matrix> lu(cap);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorKind::SingularSystem, "Woodbury capacitance of the Newton system is singular");
  }
  const Vector z = lu.solve(WtX);
  const Matrix delta = X + KinvAB * (z.asDiagonal() * Yhat);
  return Theta - delta;
}

namespace {

/// One dual update with the G-decrease safeguard for Newton.
Matrix dual_step(const IntersectionManifold& M, const DualProblem& dual, const Matrix& Theta,
                 double G_old, MetricMethod method, SchurPath path, double* G_new) {
  if (method == MetricMethod::GWANewton) {
    try {
      Matrix cand = gwa_newton_iterate(M, dual, Theta, path);
      const double g = dual_objective(M, dual, cand);
      if (std::isfinite(g) && g <= G_old + 1e-12 * (std::abs(G_old) + 1.0)) {
        *G_new = g;
        return cand;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularSystem) throw;
    }
  }
  Matrix next = gwa_iterate(M, dual, Theta, path);
  *G_new = dual_objective(M, dual, next);
  return next;
}

Matrix primal_from_dual(const IntersectionManifold& M, const Matrix& V, const Matrix& Theta) {
  return project_binary(M, V + M.affine().A().transpose() * Theta);
}

}  // namespace

MetricProjection metric_project(const IntersectionManifold& M, const Matrix& V, MetricMethod method,
                                double tol, int maxiter, SchurPath path) {
  const DualProblem dual = DualProblem::from_point(M, V);
  Matrix Theta = Matrix::Zero(M.dims().m_rows, M.dims().r);
  double G = dual_objective(M, dual, Theta);
  for (int k = 1; k <= maxiter; ++k) {
    double G_next = 0.0;
    Matrix next = dual_step(M, dual, Theta, G, method, path, &G_next);
    const double change = (next - Theta).norm();
    const bool decreased = G_next <= G + 1e-12 * (std::abs(G) + 1.0);
    const bool small = change <= tol * (Theta.norm() + 1.0);
    Theta = std::move(next);
    G = G_next;
    if (small && decreased) return MetricProjection{primal_from_dual(M, V, Theta), Theta, k};
  }
  IterTrace empty;
  throw MaxIterExceeded("metric projection dual iteration did not converge", empty);
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

using Clock = std::chrono::steady_clock;

struct Tracer {
  explicit Tracer(const IntersectionManifold& m) : M(m) {}

  const IntersectionManifold& M;
  Clock::time_point start = Clock::now();
  IterTrace trace;

  IterRecord make(Phase phase, const Matrix& R, const Matrix* prev, bool accepted = true) {
    const ConstraintResidual res = residual(M, R);
    IterRecord rec;
    rec.phase = phase;
    rec.combined = res.combined_norm;
    rec.binary_norm = res.binary_block.norm();
    rec.step_norm = prev ? (R - *prev).norm() : 0.0;
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rec.accepted = accepted;
    return rec;
  }
  const IterRecord& push(IterRecord rec) {
    trace.records.push_back(rec);
    return trace.records.back();
  }
};

Matrix perturb_row(const Matrix& R, Index row) {
  std::mt19937_64 gen(static_cast<std::uint64_t>(row) * 0x9E3779B97F4A7C15ULL + 1);
  std::normal_distribution<double> nd;
  Eigen::RowVectorXd u(R.cols());
  for (Index k = 0; k < u.size(); ++k) u(k) = nd(gen);
  Matrix out = R;
  out.row(row) += 1e-12 * u / u.norm();
  return out;
}

/// Applies a step map; on a degenerate binary row perturbs that row once
/// and retries.
template <typename Step>
Matrix guarded(const Matrix& R, int iter, Step&& step) {
  try {
    try {
      return step(R);
    } catch (const DegenerateRowError& e) {
      return step(perturb_row(R, e.row()));
    }
  } catch (const DegenerateRowError& e) {
    std::ostringstream os;
    os << "iteration " << iter << ": " << e.what();
    throw DegenerateRowError(e.row(), os.str());
  } catch (const MaxIterExceeded&) {
    throw;
  } catch (const Error& e) {
    std::ostringstream os;
    os << "iteration " << iter << ": " << e.what();
    throw Error(e.kind(), os.str());
  }
}

bool within(double combined, const Matrix& R, double tol) { return combined <= tol * scale_of(R); }

[[noreturn]] void fail_maxiter(RetractionKind kind, int maxiter, IterTrace trace) {
  std::ostringstream os;
  os << kind_name(kind) << " did not reach tolerance in " << maxiter << " iterations";
  throw MaxIterExceeded(os.str(), std::move(trace));
}

RetractionResult run_metric(const IntersectionManifold& M, const Matrix& V,
                            const RetractionConfig& cfg) {
  const MetricMethod method =
      cfg.kind == RetractionKind::MetricGWANewton ? MetricMethod::GWANewton : MetricMethod::GWA;
  Tracer tr(M);
  const DualProblem dual = DualProblem::from_point(M, V);
  Matrix Theta = Matrix::Zero(M.dims().m_rows, M.dims().r);
  double G = dual_objective(M, dual, Theta);
  Matrix X = guarded(V, 0, [&](const Matrix&) { return primal_from_dual(M, V, Theta); });
  tr.push(tr.make(Phase::Init, X, nullptr));
  for (int k = 1; k <= cfg.maxiter; ++k) {
    double G_next = 0.0;
    Theta = dual_step(M, dual, Theta, G, method, cfg.schur_path, &G_next);
    G = G_next;
    Matrix Xn = guarded(V, k, [&](const Matrix&) { return primal_from_dual(M, V, Theta); });
    const IterRecord& rec = tr.push(tr.make(Phase::Dual, Xn, &X));
    X = std::move(Xn);
    if (within(rec.combined, X, cfg.tol)) {
      return RetractionResult{X, true, std::move(tr.trace), cfg.kind};
    }
  }
  fail_maxiter(cfg.kind, cfg.maxiter, std::move(tr.trace));
}

RetractionResult run_tapr(const IntersectionManifold& M, const Matrix& V, const TaprParams& params,
                          double tol, int maxiter, SchurPath path) {
  params.validate();
  Tracer tr(M);
  Matrix y = V;
  double err = residual(M, y).combined_norm;
  tr.push(tr.make(Phase::APM, y, nullptr));
  if (err > params.a0) {
    std::ostringstream os;
    os << "initial residual " << err << " exceeds a0 = " << params.a0;
    throw Error(ErrorKind::InitialResidualTooLarge, os.str());
  }
  Phase phase = Phase::APM;
  int i = 1;
  while (i <= maxiter && !within(err, y, tol)) {
    if (phase == Phase::APM) {
      Matrix yn = guarded(y, i, [&](const Matrix& z) { return apm_step(M, z); });
      const IterRecord& rec = tr.push(tr.make(Phase::APM, yn, &y));
      y = std::move(yn);
      err = rec.combined;
      if (err < params.a1) phase = Phase::IAP;
    } else if (phase == Phase::IAP) {
      Matrix yp = guarded(y, i, [&](const Matrix& z) { return iap_step(M, z); });
      IterRecord rec = tr.make(Phase::IAP, yp, &y);
      const double e_old = err;
      const double e_new = rec.combined;
      rec.accepted = e_new * e_new <= (1.0 - params.mu1) * e_old * e_old;
      tr.push(rec);
      if (rec.accepted) {
        y = std::move(yp);
        err = e_new;
      } else {
        phase = Phase::APM;
      }
      if (err <= params.a2 || e_new * e_new > (1.0 - params.mu0) * e_old * e_old) {
        phase = Phase::SecondOrder;
      }
    } else {
      Matrix yp = guarded(y, i, [&](const Matrix& z) { return newton_slra_step(M, z, path); });
      IterRecord rec = tr.make(Phase::SecondOrder, yp, &y);
      rec.accepted = rec.combined * rec.combined <= (1.0 - params.mu2) * err * err;
      tr.push(rec);
      if (rec.accepted) {
        y = std::move(yp);
        err = rec.combined;
      } else {
        phase = Phase::IAP;
      }
    }
    ++i;
  }
  if (!within(err, y, tol)) fail_maxiter(RetractionKind::TAPR, maxiter, std::move(tr.trace));
  return RetractionResult{y, true, std::move(tr.trace), RetractionKind::TAPR};
}

}  // namespace

RetractionResult tapr(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                      const TaprParams& params, double tol, int maxiter, SchurPath path) {
  M.check_shape(x, "tapr");
  M.check_shape(eta, "tapr");
  return run_tapr(M, x + eta, params, tol, maxiter, path);
}

RetractionResult solve_to_manifold(const IntersectionManifold& M, const Matrix& V,
                                   const RetractionConfig& cfg) {
  cfg.validate();
  M.check_shape(V, "solve_to_manifold");
  if (cfg.kind == RetractionKind::TAPR) {
    return run_tapr(M, V, cfg.tapr.value_or(TaprParams::for_tolerance(cfg.tol)), cfg.tol,
                    cfg.maxiter, cfg.schur_path);
  }

  Tracer tr(M);
  Matrix R = V;
  {
    const IterRecord& rec = tr.push(tr.make(Phase::Init, R, nullptr));
    if (within(rec.combined, R, cfg.tol)) {
      return RetractionResult{R, true, std::move(tr.trace), cfg.kind};
    }
  }
  if (cfg.kind == RetractionKind::MetricGWA || cfg.kind == RetractionKind::MetricGWANewton) {
    return run_metric(M, V, cfg);
  }

  // Seeding: APHL lives on M2, the Newton-type maps need a point on M1.
  if (cfg.kind == RetractionKind::APHL) {
    R = guarded(R, 0, [&](const Matrix& z) { return project_binary(M, z); });
    tr.trace.records.back() = tr.make(Phase::Init, R, nullptr);
  } else if (cfg.kind == RetractionKind::NewtonSLRA ||
             cfg.kind == RetractionKind::RelaxedNewtonSLRA) {
    if (affine_residual(M, R).norm() > 1e-8 * scale_of(R)) {
      R = project_affine(M, R);
      tr.trace.records.back() = tr.make(Phase::Init, R, nullptr);
    }
  }
  if (within(tr.trace.records.back().combined, R, cfg.tol)) {
    return RetractionResult{R, true, std::move(tr.trace), cfg.kind};
  }

  for (int k = 1; k <= cfg.maxiter; ++k) {
    Phase phase = Phase::APM;
    Matrix next;
    switch (cfg.kind) {
      case RetractionKind::APM:
        next = guarded(R, k, [&](const Matrix& z) { return apm_step(M, z); });
        break;
      case RetractionKind::IAP:
        phase = Phase::IAP;
        next = guarded(R, k, [&](const Matrix& z) { return iap_step(M, z); });
        break;
      case RetractionKind::RelaxedNewtonSLRA:
        phase = Phase::Relaxed;
        next = guarded(R, k, [&](const Matrix& z) { return relaxed_newton_slra_step(M, z); });
        break;
      case RetractionKind::NewtonSLRA:
      case RetractionKind::APHL: {
        const bool newton = cfg.kind == RetractionKind::NewtonSLRA;
        phase = newton ? Phase::Newton : Phase::APHL;
        next = guarded(R, k, [&](const Matrix& z) {
          return newton ? newton_slra_step(M, z, cfg.schur_path) : aphl_step(M, z, cfg.schur_path);
        });
        if (combined_residual(M, next) > tr.trace.records.back().combined) {
          phase = Phase::Fallback;
          next = guarded(R, k, [&](const Matrix& z) { return apm_step(M, z); });
        }
        break;
      }
      default:
        throw Error(ErrorKind::InvalidArgument, "unsupported retraction kind");
    }
    const IterRecord& rec = tr.push(tr.make(phase, next, &R));
    R = std::move(next);
    if (within(rec.combined, R, cfg.tol)) {
      return RetractionResult{R, true, std::move(tr.trace), cfg.kind};
    }
  }
  fail_maxiter(cfg.kind, cfg.maxiter, std::move(tr.trace));
}

RetractionResult retract(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                         const RetractionConfig& cfg) {
  M.check_shape(x, "retract");
  M.check_shape(eta, "retract");
  return solve_to_manifold(M, x + eta, cfg);
}

RetractionResult retract(const IntersectionManifold& M, const Matrix& x, const TangentVector& eta,
                         const RetractionConfig& cfg) {
  return retract(M, x, eta.xi, cfg);
}

}  // namespace isect
