#pragma once

// Explicit optical-coefficient reconstruction from two modal internal data
// h_j = mu_a u_{k_j} (k1 < k2, both above the kappa > 0 threshold):
//
//   h = h2/h1 = u_{k2}/u_{k1} solves  -(F h')' + (lam2^2 - lam1^2) F h = 0
//   with F = D u_{k1}^2, so F is recovered in closed form anchored at the
//   calibrated end:  F(y) = D_H (h'(H)/h'(y)) exp(-(lam2^2-lam1^2) int_y^H h/h'),
//   and v = 1/u_{k1} solves  -(F v')' - lam1^2 F v = h1,  integrated backward
//   from v(H) = 1, v'(H) = -(F'(H) - D'(H)) / (2 D_H).
//
// Finally D = F v^2 and mu_a = h1 v.  v blows up like 1/u near y = 0, so the
// reconstruction truncates where v stops being a positive finite number and
// flags nodes beyond the double-precision trust horizon (v^2 > 1/eps_mach).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "patl/medium.hpp"
#include "patl/optical.hpp"
#include "patl/types.hpp"

namespace patl {

struct RatioData {
  long k1 = 0, k2 = 0;
  CoefficientProfile h;        // h2/h1 with the y=0 limit value h2'(0)/h1'(0)
  CoefficientProfile h_prime;  // discrete derivative of h (h'(0+) = 0 in the continuum)
  double h_at_0 = 0.0;
  double lower_slope = 0.0;    // envelope lower bound for h' over nodes y_i > 0
  // Pointwise envelope lower bound for h' (node 0 carries 0); empty in the
  // data-only variant.  reconstruct_F uses it to detect nodes where the
  // measured slope is provably corrupted.
  CoefficientProfile slope_floor;
};

// Builds the ratio from two internal data sets; the modal solutions provide
// the envelopes for the constructive lower slope
//   h'(y) >= (lam2^2 - lam1^2) int_0^y D lo_1 lo_2 ds / (D(y) hi_1(y)^2),
// whose minimum over interior nodes is reported (the pointwise bound decays
// to 0 like y at the Dirichlet end, which is why node 0 is excluded).
RatioData build_ratio(const InternalDatum& h1, const InternalDatum& h2,
                      const LayeredMedium& medium, const Envelopes& env1, const Envelopes& env2);

// Data-only variant for standalone use without a medium description: the
// envelope gate and lower slope are skipped (lower_slope = 0).
RatioData build_ratio(const InternalDatum& h1, const InternalDatum& h2);

// Residual of the ratio equation -(F h')' + (lam2^2 - lam1^2) F h = 0 in the
// conservative stencil (harmonic-mean faces); endpoints carry no equation.
struct RatioOdeResidual {
  CoefficientProfile residual;
  double max_abs = 0.0;
};
RatioOdeResidual verify_ratio_ode(const RatioData& ratio, const CoefficientProfile& F,
                                  double lambda1, double lambda2);

// When the ratio carries a slope_floor, nodes whose measured h' undershoots
// this fraction of the constructive lower bound are treated as corrupted:
// the continuum satisfies h' >= floor exactly, so the margin only absorbs
// discretization error of the discrete derivative.
inline constexpr double kSlopeFloorSafety = 0.5;

// Anchored closed-form recovery of F = D u_{k1}^2.  Guards: h' must be
// positive and finite on interior nodes, and at least kSlopeFloorSafety times
// the envelope slope_floor when the ratio carries one; F(0) = 0 exactly
// (forced by u(0) = 0).  With truncation == nullptr a guard violation throws
// a singular-integrand error naming the first offending node; otherwise the
// reconstruction is truncated there instead (F = 0 below *truncation), which
// is the noisy-data behavior: deep nodes lose the slope of h first.
CoefficientProfile reconstruct_F(const RatioData& ratio, double lambda1, double lambda2,
                                 double calib_D_H, std::size_t* truncation = nullptr);

struct Calibration {
  double D_H = 0.0;        // D(H)
  double D_prime_H = 0.0;  // D'(H)
  double mu_prime_H = 0.0; // mu_a'(H); only the end-anchor estimator reads it
};

struct AnchorEstimate {
  double slope_H = 0.0;    // h'(H) of the mode ratio h2/h1
  double u_prime_H = 0.0;  // u_{k1}'(H)
  bool ok = false;         // both fits finite and slope_H > 0
};

// Calibrated end anchors fitted from *values* of the raw (pre-smoothing)
// internal data near y = H.  Recovery error is L2-small and oscillatory, so a
// least-squares fit of nodal values averages it out, while any slope read at
// the end inherits the full derivative-scale error; this is what makes these
// anchors noise-robust where the smoothed profiles are not.  With
// g = h2 - h1, s = (h2/h1)'(H), the end conditions u_k(H) = 1 and the modal
// ODE give
//   g(H) = 0,  g'(H) = mu_H s,
//   g''(H) = (2 mu'_H - mu_H D'_H/D_H) s + mu_H (lam2^2 - lam1^2),
// with no mu''(H) term (its coefficient is u_{k2} - u_{k1} = 0 at H), so the
// cubic Taylor model in t = H - y is linear in s alone.  The analogous
// expansion of h1 is linear in (u_{k1}'(H), mu''(H)).  Both are fitted over
// the last `window` nodes with one extra free cubic coefficient.  mu_H is the
// calibration-grade value of h1(H) (e.g. from the smoothed profile); the end
// derivatives of D and mu_a come from `calib`.
AnchorEstimate estimate_anchors(const CoefficientProfile& h1_raw,
                                const CoefficientProfile& h2_raw, double mu_H,
                                const Calibration& calib, double lambda1, double lambda2,
                                std::size_t window);

// End-zone repair of the ratio derivative toward a trusted end slope.  The
// penalized smoothing spline's free boundary relaxes across a layer of width
// ~ (penalty h^5)^{1/6} nodes, and reconstruct_F turns a slope error at y = H
// into a *global multiplicative* error of F, so the end slope must come from
// a source that does not degrade there (estimate_anchors).  Replaces h' on
// the last `reach` nodes by the quadratic in t = H - y that takes the value
// slope_H at t = 0 and matches the interior h' and its backward difference at
// the zone edge; h itself is kept unchanged.
RatioData anchored_ratio(const RatioData& ratio, double slope_H, std::size_t reach);

struct OpticalReconstruction {
  CoefficientProfile F;       // D u_{k1}^2
  CoefficientProfile u_rec;   // 1/v
  CoefficientProfile D_rec;   // F v^2
  CoefficientProfile mu_rec;  // h1 v
  CoefficientProfile weight;  // envelope_lo^2 of mode k1 (empty if not supplied)
  Calibration calib;
  std::size_t truncation_index = 0;       // nodes < index were not reconstructed
  std::vector<std::uint8_t> trusted;      // 1 where v is within the trust horizon
};

// Trust gating slack: reconstructed coefficients outside the a-priori box by
// more than this factor are unambiguous corruption, not discretization error.
inline constexpr double kBoxSlack = 2.0;

// Backward second-order march of the v-system from the calibrated end;
// truncates where v <= 0 or non-finite, zero-fills the truncated nodes.
// envelope_lo_sq may be empty; when given it is stored as the reporting
// weight for the depth-weighted norms.  The trusted flags require v within
// the floating-point trust horizon and, when `box` is supplied, D_rec in
// [d0/kBoxSlack, kBoxSlack*M] and mu_rec in [mu0/kBoxSlack, kBoxSlack*M];
// trust is contiguous from the calibrated end (everything below the first
// failure is untrusted: the march carries corruption downward with it).
// When u_prime_H is supplied it overrides the stencil value of u'(H) — the
// right call on noisy data, where the F' stencil at the end is the least
// reliable number in the whole pipeline and estimate_anchors has a better one.
OpticalReconstruction reconstruct_coefficients(const CoefficientProfile& F,
                                               const InternalDatum& h1, double lambda1,
                                               const Calibration& calib,
                                               const CoefficientProfile& envelope_lo_sq = {},
                                               const AdmissibleBounds* box = nullptr,
                                               const double* u_prime_H = nullptr);

// Empirical LHS/RHS pairs of the stability estimates for two reconstructions
// of the same experiment: sup-norm differences of F, of u(u - u~) and of the
// u^2-weighted coefficient differences, against the C1 misfit of the data
// (||h1 - h1~||_C1 + ||h2 - h2~||_C1).  Weights use the node-wise minimum of
// the two runs so every LHS is symmetric under swapping the roles.
struct StabilityDiagnostics {
  double data_c1_misfit = 0.0;
  double f_gap = 0.0;           // ||F - F~||_inf
  double u_weighted_gap = 0.0;  // ||min(u,u~) (u - u~)||_inf
  double d_weighted_gap = 0.0;  // ||min(u,u~)^2 (D - D~)||_inf
  double mu_weighted_gap = 0.0; // ||min(u,u~)^2 (mu - mu~)||_inf
  double ratio_f = 0.0;         // f_gap / data_c1_misfit, 0 when misfit == 0
  double ratio_u = 0.0;
  double ratio_d = 0.0;
  double ratio_mu = 0.0;
};
StabilityDiagnostics stability_diagnostics(const OpticalReconstruction& rec,
                                           const OpticalReconstruction& rec_tilde,
                                           const InternalDatum& h1, const InternalDatum& h2,
                                           const InternalDatum& h1_tilde,
                                           const InternalDatum& h2_tilde);

}  // namespace patl
