#include "isect/verification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace isect {

SlopeFit fit_slope(const std::vector<double>& t, const std::vector<double>& errors, double floor) {
  require(t.size() == errors.size(), ErrorKind::DimensionMismatch,
          "fit_slope: t and errors differ in length");
  SlopeFit fit;
  fit.t_values = t;
  fit.errors = errors;
  fit.plateau_floor = floor;

  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < t.size(); ++k) {
    require(t[k] > 0.0, ErrorKind::InvalidArgument, "fit_slope: t must be positive");
    if (k > 0) {
      require(t[k] > t[k - 1], ErrorKind::InvalidArgument, "fit_slope: t must be increasing");
    }
    if (errors[k] > floor) {
      lx.push_back(std::log10(t[k]));
      ly.push_back(std::log10(errors[k]));
    } else {
      ++fit.excluded;
    }
  }
  if (lx.size() < 4) {
    std::ostringstream os;
    os << "fit_slope: " << lx.size() << " points above the floor " << floor << ", need 4";
    throw Error(ErrorKind::InsufficientPoints, os.str());
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

RateFit rate_fit(const std::vector<double>& residuals, RateMode mode) {
  RateFit fit;
  fit.mode = mode;
  for (double r : residuals) {
    require(r >= 0.0, ErrorKind::InvalidArgument, "rate_fit: negative residual");
    if (r > 1e-13) fit.residuals.push_back(r);
  }
  if (fit.residuals.size() < 4) {
    throw Error(ErrorKind::InsufficientTail,
                "rate_fit: fewer than 4 residuals above 1e-13");
  }
  const auto& r = fit.residuals;
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) ratios.push_back(r[k + 1] / r[k]);
  const std::size_t first = ratios.size() > 5 ? ratios.size() - 5 : 0;
  double logsum = 0.0;
  fit.max_ratio = 0.0;
  for (std::size_t k = first; k < ratios.size(); ++k) {
    logsum += std::log(ratios[k]);
    fit.max_ratio = std::max(fit.max_ratio, ratios[k]);
  }
  fit.linear_factor = std::exp(logsum / static_cast<double>(ratios.size() - first));

  if (mode == RateMode::Quadratic) {
    double lo = INFINITY, hi = 0.0;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
      const double c = r[k + 1] / (r[k] * r[k]);
      fit.quadratic_constants.push_back(c);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    fit.quadratic_spread = hi / lo;
  }
  return fit;
}

RateFit rate_fit(const IterTrace& trace, RateMode mode) {
  std::vector<double> r;
  for (const auto& rec : trace.records) {
    if (rec.accepted) r.push_back(rec.combined);
  }
  return rate_fit(r, mode);
}

std::vector<double> log_grid(double lo, double hi, int points) {
  require(lo > 0.0 && hi > lo && points >= 2, ErrorKind::InvalidArgument,
          "log_grid needs 0 < lo < hi and >= 2 points");
  std::vector<double> t(points);
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < points; ++k) {
    t[k] = std::pow(10.0, a + (b - a) * k / (points - 1));
  }
  t.front() = lo;
  t.back() = hi;
  return t;
}

Vector sphere_project(const Vector& x) {
  const double nx = x.norm();
  require(nx > 1e-14, ErrorKind::NearZeroInput, "sphere_project: input too close to 0");
  return x / nx;
}

Vector sphere_second_fundamental(const Vector& x, const Vector& u) {
  return -u.squaredNorm() * x;
}

Vector sphere_weingarten(const Vector& x, const Vector& u) {
  const double un = u.dot(x);
  return -un * (u - un * x);
}

SphereExpansion sphere_expansion_check(const Vector& x, const Vector& u) {
  require(x.size() == u.size(), ErrorKind::DimensionMismatch, "sphere_expansion_check: sizes");
  require(std::abs(x.norm() - 1.0) <= 1e-12, ErrorKind::InvalidArgument,
          "sphere_expansion_check: base point is not on the unit sphere");
  require(u.norm() <= 0.1, ErrorKind::InvalidArgument,
          "sphere_expansion_check: perturbation norm above 0.1");
  const double un = u.dot(x);
  const Vector uT = u - un * x;
  const Vector model = x + uT + sphere_weingarten(x, u) + 0.5 * sphere_second_fundamental(x, uT);
  const Vector gap = sphere_project(Vector(x + u)) - model;
  const double gn = gap.dot(x);

  SphereExpansion out;
  out.x = x;
  out.u = u;
  out.tangential_residual = (gap - gn * x).norm();
  out.normal_residual_gap = std::abs(gn);
  return out;
}

RetractionConfig slope_config(RetractionKind kind) {
  RetractionConfig cfg;
  cfg.kind = kind;
  cfg.tol = 1e-15;
  cfg.maxiter = 20000;
  if (kind == RetractionKind::TAPR) cfg.tapr = TaprParams::for_tolerance(cfg.tol);
  return cfg;
}

OrderSlope order_slope(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                       const std::vector<double>& t_grid, const RetractionConfig& cfg) {
  M.check_shape(x, "order_slope");
  M.check_shape(eta, "order_slope");
  std::vector<double> total(t_grid.size()), tangential(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    const Matrix V = x + t * eta;
    Matrix Y;
    try {
      Y = retract(M, x, Matrix(t * eta), cfg).point;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "order_slope at t = " << t << ": " << e.what();
      throw Error(e.kind(), os.str());
    }
    const Matrix e = Y - V;
    total[k] = e.norm();
    tangential[k] = project_tangent(M, x, e).xi.norm();
  }
  const double floor = 1e-13 * scale_of(x);
  return OrderSlope{fit_slope(t_grid, total, floor), fit_slope(t_grid, tangential, floor)};
}

LimitGap limit_gap(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                   const std::vector<double>& t_grid, double tol) {
  LimitGap out;
  out.t_values = t_grid;
  RetractionConfig cfg = slope_config(RetractionKind::APM);
  cfg.tol = tol;
  for (double t : t_grid) {
    const Matrix V = x + t * eta;
    const Matrix apm = solve_to_manifold(M, V, cfg).point;
    const Matrix metric = metric_project(M, V, MetricMethod::GWANewton, tol, 500).point;
    const Matrix ea = apm - V;
    const Matrix ed = apm - metric;
    const Matrix ta = project_tangent(M, x, ea).xi;
    const Matrix td = project_tangent(M, x, ed).xi;
    out.apm_tangential.push_back(ta.norm());
    out.apm_normal.push_back((ea - ta).norm());
    out.diff_tangential.push_back(td.norm());
    out.diff_normal.push_back((ed - td).norm());
  }
  return out;
}

}  // namespace isect
