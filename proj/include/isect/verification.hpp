#pragma once

#include "isect/retraction.hpp"

#include <vector>

namespace isect {

struct SlopeFit {
  std::vector<double> t_values;
  std::vector<double> errors;
  double slope = 0.0;
  double intercept = 0.0;
  double plateau_floor = 0.0;
  int excluded = 0;  // points at or below the floor
};

/// OLS fit of log10(err) against log10(t) over the points with err > floor.
/// Needs at least 4 surviving points (InsufficientPoints otherwise).
SlopeFit fit_slope(const std::vector<double>& t, const std::vector<double>& errors, double floor);

enum class RateMode { Linear, Quadratic };

struct RateFit {
  std::vector<double> residuals;  // tail entries above 1e-13
  RateMode mode = RateMode::Linear;
  double linear_factor = 0.0;  // geometric mean of the last (up to) 5 ratios
  double max_ratio = 0.0;      // largest of those ratios
  std::vector<double> quadratic_constants;  // r_{k+1} / r_k^2
  double quadratic_spread = 0.0;            // max / min of the constants
};

RateFit rate_fit(const std::vector<double>& residuals, RateMode mode);
/// Uses the combined residual of accepted records.
RateFit rate_fit(const IterTrace& trace, RateMode mode);

std::vector<double> log_grid(double lo, double hi, int points);

// Unit sphere S^{n-1}, the analytic reference for the projection expansion.
Vector sphere_project(const Vector& x);

struct SphereExpansion {
  Vector x;
  Vector u;
  double tangential_residual = 0.0;
  double normal_residual_gap = 0.0;
};

/// II_x(u, u) = -|u|^2 x for tangent u.
Vector sphere_second_fundamental(const Vector& x, const Vector& u);
/// W_x(u_T, u_N) = -<u, x> u_T.
Vector sphere_weingarten(const Vector& x, const Vector& u);

SphereExpansion sphere_expansion_check(const Vector& x, const Vector& u);

struct OrderSlope {
  SlopeFit total;
  SlopeFit tangential;
};

/// e(t) = retract(x, t eta) - (x + t eta) for each t; fits ||e|| and
/// ||P_T e|| with the floor 1e-13 (||x|| + 1). cfg.kind picks the method.
OrderSlope order_slope(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                       const std::vector<double>& t_grid, const RetractionConfig& cfg);

/// Retraction config used for slope runs of a given kind.
RetractionConfig slope_config(RetractionKind kind);

struct LimitGap {
  std::vector<double> t_values;
  std::vector<double> apm_normal;       // |P_N (apm - V)|
  std::vector<double> apm_tangential;   // |P_T (apm - V)|
  std::vector<double> diff_normal;      // |P_N (apm - metric)|
  std::vector<double> diff_tangential;  // |P_T (apm - metric)|
};

/// Compares the APM limit with the metric projection of V = x + t eta.
LimitGap limit_gap(const IntersectionManifold& M, const Matrix& x, const Matrix& eta,
                   const std::vector<double>& t_grid, double tol);

}  // namespace isect
