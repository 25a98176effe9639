#pragma once

// Small numerical kernels shared by every module: finite-difference
// derivatives with pinned endpoint conventions, trapezoid quadrature,
// a Thomas tridiagonal solve, overflow-safe sinh ratios, discrete norms
// and least-squares line fits.  All of them are deterministic: fixed
// summation order, no parallelism.

#include <cstddef>
#include <span>
#include <vector>

#include "patl/types.hpp"

namespace patl {

// First derivative of nodal data: centered in the interior, one-sided
// second-order 3-point stencils at both ends.
std::vector<double> derivative(std::span<const double> f, double h);
CoefficientProfile derivative(const CoefficientProfile& f);

// Second derivative: centered 3-point in the interior, one-sided 4-point
// second-order stencils at the ends (falls back to copying the neighbor
// value when fewer than 4 points are available).
std::vector<double> second_derivative(std::span<const double> f, double h);

// Trapezoid rule on a uniform grid.
double trapezoid(std::span<const double> f, double h);
// Running trapezoid integral: out[i] = integral from node 0 to node i.
std::vector<double> cumulative_trapezoid(std::span<const double> f, double h);

// Thomas algorithm for a tridiagonal system; diagonals (lower, diag, upper)
// with lower[0] and upper[n-1] unused.  No pivoting: callers must supply
// diagonally dominant systems (all ours are M-matrices).
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

// sinh(s*y)/sinh(s*H) evaluated without overflow for large s*H, with the
// s -> 0 limit y/H.  Requires 0 <= y <= H.
double sinh_ratio(double s, double y, double H);

// Discrete norms on uniform grids.
double sup_norm(std::span<const double> f);
double l2_norm(std::span<const double> f, double h);    // sqrt(trapezoid(f^2))
double c1_norm(std::span<const double> f, double h);    // sup|f| + sup|f'|
double h1_norm(std::span<const double> f, double h);    // sqrt(||f||^2 + ||f'||^2)
double h3_norm(std::span<const double> f, double h);    // sqrt(sum_{j<=3} ||f^(j)||^2)

// Third-derivative-penalized smoothing with the penalty weight set by the
// discrepancy principle: `values` minimizes
//   sum_i w_i (g_i - f_i)^2 + alpha * sum h * (third difference of g / h^3)^2
// (w = trapezoid weights) with alpha chosen so that the L2 distance
// ||g - f|| matches the supplied noise level delta (within 5%), i.e. the
// smoothest profile consistent with the data at that noise level.  This is
// the stable route to differentiating noisy nodal data; the penalty order
// matches the H^3 a-priori bound on the coefficient class, which buys
// ||g' - f_true'|| = O(delta^{2/3}) instead of the O(delta^{1/2}) of a
// curvature penalty.
//
// `slope` is the stencil derivative of `values`.
//
// delta <= 0 (or n < 7) returns f and its stencil derivative unchanged;
// delta beyond the quadratic-fit residual returns the maximally smoothed
// (quadratic) profile.
struct SmoothedData {
  std::vector<double> values;
  std::vector<double> slope;
  double penalty_weight = 0.0;  // chosen penalty weight (alpha / h^5)
};
SmoothedData smooth_to_discrepancy(std::span<const double> f, double h, double delta);

// Least-squares slope/intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Pearson correlation coefficient.
double pearson(std::span<const double> x, std::span<const double> y);

// Linear interpolation of a profile onto a finer/coarser uniform grid with
// the same endpoints.
CoefficientProfile resample(const CoefficientProfile& f, std::size_t n_new);

}  // namespace patl
