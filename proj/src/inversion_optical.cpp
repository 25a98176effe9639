#include "patl/inversion_optical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "patl/numerics.hpp"

namespace patl {

namespace {

// Nodal quotient with the y = 0 value filled by the L'Hopital limit
// h2'(0)/h1'(0); shared by both build_ratio overloads.
RatioData build_ratio_core(const InternalDatum& h1, const InternalDatum& h2) {
  const Grid1D& g = h1.h.grid;
  if (!g.matches(h2.h.grid)) throw structural_error("build_ratio: grid mismatch");
  if (h1.k == h2.k) throw config_error("build_ratio: need two distinct modes");

  const std::size_t n = g.n_points;
  RatioData r;
  r.k1 = h1.k;
  r.k2 = h2.k;

  std::vector<double> h(n);
  for (std::size_t i = 1; i < n; ++i) {
    if (h1.h[i] == 0.0)
      throw numerical_error("build_ratio: h1 vanishes at interior node " + std::to_string(i));
    h[i] = h2.h[i] / h1.h[i];
  }
  // y = 0 limit by L'Hopital: h2'(0)/h1'(0) from the supplied slopes
  if (h1.h_prime.values.size() != n || h2.h_prime.values.size() != n)
    throw structural_error("build_ratio: data derivatives missing");
  if (h1.h_prime[0] == 0.0) throw numerical_error("build_ratio: h1'(0) vanishes, limit undefined");
  r.h_at_0 = h2.h_prime[0] / h1.h_prime[0];
  h[0] = r.h_at_0;
  r.h = CoefficientProfile(g, std::move(h));

  // Quotient rule from the per-mode slopes, so any end-layer repair the
  // caller applied to noisy data propagates; the y = 0 slope falls back to
  // the one-sided stencil on the ratio itself (the quotient degenerates).
  std::vector<double> hp(n);
  for (std::size_t i = 1; i < n; ++i)
    hp[i] = (h2.h_prime[i] - r.h[i] * h1.h_prime[i]) / h1.h[i];
  hp[0] = (-3.0 * r.h[0] + 4.0 * r.h[1] - r.h[2]) / (2.0 * g.h_step);
  r.h_prime = CoefficientProfile(g, std::move(hp));
  return r;
}

}  // namespace

RatioData build_ratio(const InternalDatum& h1, const InternalDatum& h2) {
  return build_ratio_core(h1, h2);
}

RatioData build_ratio(const InternalDatum& h1, const InternalDatum& h2,
                      const LayeredMedium& medium, const Envelopes& env1, const Envelopes& env2) {
  const Grid1D& g = h1.h.grid;
  if (!g.matches(medium.grid())) throw structural_error("build_ratio: grid mismatch");
  if (env1.k != h1.k || env2.k != h2.k) throw structural_error("build_ratio: envelope mode mismatch");
  if (!env1.k_large_enough || !env2.k_large_enough)
    throw config_error("build_ratio: both modes must satisfy kappa_min > 0");

  const std::size_t n = g.n_points;
  RatioData r = build_ratio_core(h1, h2);

  // constructive lower slope from the envelopes, minimized over nodes y_i > 0
  const double lam1 = wavenumber(h1.k, medium.width_L);
  const double lam2 = wavenumber(h2.k, medium.width_L);
  const double dl2 = lam2 * lam2 - lam1 * lam1;
  std::vector<double> integrand(n);
  for (std::size_t i = 0; i < n; ++i)
    integrand[i] = medium.diffusion[i] * env1.envelope_lo[i] * env2.envelope_lo[i];
  const auto cumul = cumulative_trapezoid(integrand, g.h_step);
  std::vector<double> floor(n, 0.0);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) {
    const double hi1 = env1.envelope_hi[i];
    floor[i] = dl2 * cumul[i] / (medium.diffusion[i] * hi1 * hi1);
    lo = std::min(lo, floor[i]);
  }
  r.lower_slope = lo;
  r.slope_floor = CoefficientProfile(g, std::move(floor));
  return r;
}

RatioOdeResidual verify_ratio_ode(const RatioData& ratio, const CoefficientProfile& F,
                                  double lambda1, double lambda2) {
  const Grid1D& g = ratio.h.grid;
  if (!g.matches(F.grid)) throw structural_error("verify_ratio_ode: grid mismatch");
  const std::size_t n = g.n_points;
  const double invh2 = 1.0 / (g.h_step * g.h_step);
  const double dl2 = lambda2 * lambda2 - lambda1 * lambda1;
  auto face = [&](std::size_t i) {
    const double a = F[i], b = F[i + 1];
    return (a + b) == 0.0 ? 0.0 : 2.0 * a * b / (a + b);
  };
  RatioOdeResidual out;
  std::vector<double> res(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double flux = face(i) * (ratio.h[i + 1] - ratio.h[i]) -
                        face(i - 1) * (ratio.h[i] - ratio.h[i - 1]);
    res[i] = -flux * invh2 + dl2 * F[i] * ratio.h[i];
  }
  out.residual = CoefficientProfile(g, std::move(res));
  out.max_abs = sup_norm(out.residual.values);
  return out;
}

CoefficientProfile reconstruct_F(const RatioData& ratio, double lambda1, double lambda2,
                                 double calib_D_H, std::size_t* truncation) {
  const Grid1D& g = ratio.h.grid;
  const std::size_t n = g.n_points;
  if (!(calib_D_H > 0.0)) throw config_error("reconstruct_F: calibration D(H) must be positive");
  if (!(lambda2 * lambda2 > lambda1 * lambda1))
    throw config_error("reconstruct_F: need lambda2^2 > lambda1^2");
  const double dl2 = lambda2 * lambda2 - lambda1 * lambda1;

  // h' must stay positive and finite walking down from the anchored end
  // (h'(0+) = 0 in the continuum, so node 0 never enters a division), and
  // clear the envelope slope floor when one is available: the continuum
  // satisfies h' >= floor, so a measured slope below half of it is data
  // corruption, not geometry.  On noisy data the slope is lost at depth
  // first; `truncation` selects between failing hard and cutting there.
  const bool have_floor = !ratio.slope_floor.values.empty();
  auto slope_ok = [&](std::size_t i) {
    const double hp = ratio.h_prime[i];
    if (!std::isfinite(hp) || hp <= 0.0) return false;
    return !have_floor || hp >= kSlopeFloorSafety * ratio.slope_floor[i];
  };
  std::size_t first_valid = 1;
  for (std::size_t i = n - 1; i >= 1; --i) {
    if (!slope_ok(i)) {
      if (truncation == nullptr)
        throw numerical_error("reconstruct_F: h' below its admissible floor at node " +
                              std::to_string(i) + " (y = " + std::to_string(g.y(i)) + ")");
      first_valid = i + 1;
      break;
    }
    if (i == 1) break;
  }
  if (first_valid >= n)
    throw numerical_error("reconstruct_F: h'(H) is not positive, nothing to anchor to");

  // I(y) = int_y^H h/h' ds by trapezoid from the anchored end
  std::vector<double> gint(n, 0.0);
  for (std::size_t i = first_valid; i < n; ++i) gint[i] = ratio.h[i] / ratio.h_prime[i];
  std::vector<double> I(n, 0.0);
  for (std::size_t i = n - 1; i >= first_valid + 1; --i)
    I[i - 1] = I[i] + 0.5 * g.h_step * (gint[i - 1] + gint[i]);

  const double hpH = ratio.h_prime[n - 1];
  std::vector<double> F(n, 0.0);
  F[n - 1] = calib_D_H;  // exp(0) * h'(H)/h'(H)
  for (std::size_t i = std::max<std::size_t>(first_valid, 1); i + 1 < n; ++i) {
    F[i] = calib_D_H * (hpH / ratio.h_prime[i]) * std::exp(-dl2 * I[i]);
    if (!std::isfinite(F[i]) || F[i] <= 0.0) {  // overflow/underflow of the exponential
      if (truncation == nullptr)
        throw numerical_error("reconstruct_F: non-positive or non-finite F at node " +
                              std::to_string(i));
      for (std::size_t j = first_valid; j <= i; ++j) F[j] = 0.0;
      first_valid = i + 1;
    }
  }
  F[0] = 0.0;  // u(0) = 0 forces D u^2 -> 0
  if (truncation != nullptr) *truncation = first_valid;
  return CoefficientProfile(g, std::move(F));
}

AnchorEstimate estimate_anchors(const CoefficientProfile& h1_raw,
                                const CoefficientProfile& h2_raw, double mu_H,
                                const Calibration& calib, double lambda1, double lambda2,
                                std::size_t window) {
  const Grid1D& g = h1_raw.grid;
  if (!g.matches(h2_raw.grid)) throw structural_error("estimate_anchors: grid mismatch");
  const std::size_t n = g.n_points;
  if (window < 6 || window >= n)
    throw config_error("estimate_anchors: window must have at least 6 nodes and stay inside the grid");
  if (!(calib.D_H > 0.0)) throw config_error("estimate_anchors: D(H) must be positive");
  if (!(mu_H > 0.0)) throw config_error("estimate_anchors: mu_a(H) must be positive");
  const double h = g.h_step;
  const double dl2 = lambda2 * lambda2 - lambda1 * lambda1;
  // shared t^2 basis coefficient: both end expansions carry the unknown slope
  // through -mu_H t + (1/2)(2 mu'_H - mu_H D'_H/D_H) t^2
  const double curv = 2.0 * calib.mu_prime_H - mu_H * calib.D_prime_H / calib.D_H;

  AnchorEstimate est;

  // s = (h2/h1)'(H): two-parameter fit of z = (h2 - h1)(H-t) - (mu_H dl2/2) t^2
  // against {s-basis, t^3}; closed-form 2x2 normal equations.
  {
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (std::size_t j = 1; j <= window; ++j) {
      const std::size_t i = n - 1 - j;
      const double t = static_cast<double>(j) * h;
      const double phi0 = -mu_H * t + 0.5 * t * t * curv;
      const double phi1 = t * t * t;
      const double z = (h2_raw[i] - h1_raw[i]) - 0.5 * mu_H * dl2 * t * t;
      a00 += phi0 * phi0;
      a01 += phi0 * phi1;
      a11 += phi1 * phi1;
      b0 += phi0 * z;
      b1 += phi1 * z;
    }
    const double det = a00 * a11 - a01 * a01;
    est.slope_H = (b0 * a11 - b1 * a01) / det;
  }

  // u_{k1}'(H): three-parameter fit (slope, mu''(H), cubic remainder) of the
  // same expansion applied to h1 alone, with the calibration-known part of
  // h1(H-t) - h1(H) moved into the data side.
  {
    double A[3][3] = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    double B[3] = {0.0, 0.0, 0.0};
    for (std::size_t j = 1; j <= window; ++j) {
      const std::size_t i = n - 1 - j;
      const double t = static_cast<double>(j) * h;
      const double phi[3] = {-mu_H * t + 0.5 * t * t * curv, 0.5 * t * t, t * t * t};
      const double known =
          -calib.mu_prime_H * t + 0.5 * t * t * mu_H * (mu_H / calib.D_H + lambda1 * lambda1);
      const double z = h1_raw[i] - h1_raw[n - 1] - known;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) A[r][c] += phi[r] * phi[c];
        B[r] += phi[r] * z;
      }
    }
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
      int best = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(A[piv[r]][col]) > std::abs(A[piv[best]][col])) best = r;
      std::swap(piv[col], piv[best]);
      for (int r = col + 1; r < 3; ++r) {
        const double f = A[piv[r]][col] / A[piv[col]][col];
        for (int c = col; c < 3; ++c) A[piv[r]][c] -= f * A[piv[col]][c];
        B[piv[r]] -= f * B[piv[col]];
      }
    }
    double x[3] = {0.0, 0.0, 0.0};
    for (int r = 2; r >= 0; --r) {
      double s = B[piv[r]];
      for (int c = r + 1; c < 3; ++c) s -= A[piv[r]][c] * x[c];
      x[r] = s / A[piv[r]][r];
    }
    est.u_prime_H = x[0];
  }

  est.ok = std::isfinite(est.slope_H) && std::isfinite(est.u_prime_H) && est.slope_H > 0.0;
  return est;
}

RatioData anchored_ratio(const RatioData& ratio, double slope_H, std::size_t reach) {
  const Grid1D& g = ratio.h.grid;
  const std::size_t n = g.n_points;
  if (!std::isfinite(slope_H) || slope_H <= 0.0)
    throw config_error("anchored_ratio: end slope must be positive and finite");
  if (reach < 2 || reach + 6 > n)
    throw config_error("anchored_ratio: reach must leave 4 interior nodes below the zone edge");
  const double h = g.h_step;
  const std::size_t edge = n - 1 - reach;  // last node kept as measured
  const double t_edge = static_cast<double>(reach) * h;
  const double val = ratio.h_prime[edge];
  // d(h')/dt at the edge (t = H - y grows toward the interior), from a
  // backward difference over sound-zone nodes
  const double dpdt = (ratio.h_prime[edge - 4] - ratio.h_prime[edge]) / (4.0 * h);
  // p(t) = slope_H + b t + c t^2 with p(t_edge) = val, p'(t_edge) = dpdt
  const double c = (slope_H + dpdt * t_edge - val) / (t_edge * t_edge);
  const double b = dpdt - 2.0 * c * t_edge;
  RatioData out = ratio;
  for (std::size_t i = edge + 1; i < n; ++i) {
    const double t = static_cast<double>(n - 1 - i) * h;
    out.h_prime.values[i] = slope_H + b * t + c * t * t;
  }
  return out;
}

OpticalReconstruction reconstruct_coefficients(const CoefficientProfile& F,
                                               const InternalDatum& h1, double lambda1,
                                               const Calibration& calib,
                                               const CoefficientProfile& envelope_lo_sq,
                                               const AdmissibleBounds* box,
                                               const double* u_prime_H_override) {
  const Grid1D& g = F.grid;
  if (!g.matches(h1.h.grid)) throw structural_error("reconstruct_coefficients: grid mismatch");
  if (!(calib.D_H > 0.0)) throw config_error("reconstruct_coefficients: D(H) must be positive");
  const std::size_t n = g.n_points;
  const double h = g.h_step;
  const double lam2 = lambda1 * lambda1;

  // v = 1/u solves (F v')' = -lam1^2 F v - h1 backward from y = H with
  // v(H) = 1, v'(H) = -u'(H), u'(H) = (F'(H) - D'(H)) / (2 D(H)) unless the
  // caller supplies a better end slope (estimate_anchors on noisy data).
  double u_prime_H;
  if (u_prime_H_override != nullptr) {
    u_prime_H = *u_prime_H_override;
  } else {
    const auto Fp = derivative(F.values, h);
    u_prime_H = (Fp[n - 1] - calib.D_prime_H) / (2.0 * calib.D_H);
  }

  // first-order system in (v, w) with w = F v': v' = w/F, w' = -lam1^2 F v - h1;
  // Heun (explicit trapezoid) steps of size -h, second order.
  std::vector<double> v(n, 0.0), w(n, 0.0);
  v[n - 1] = 1.0;
  w[n - 1] = F[n - 1] * (-u_prime_H);

  auto rhs = [&](std::size_t i, double vi, double wi, double& dv, double& dw) {
    dv = wi / F[i];
    dw = -lam2 * F[i] * vi - h1.h[i];
  };

  std::size_t trunc = 0;  // nodes below this index were not reached by the march
  for (std::size_t i = n - 1; i >= 1; --i) {
    double dv1, dw1, dv2, dw2;
    rhs(i, v[i], w[i], dv1, dw1);
    const double vp = v[i] - h * dv1;  // predictor at node i-1
    const double wp = w[i] - h * dw1;
    if (F[i - 1] == 0.0) {  // Dirichlet end: v is infinite there in the continuum
      trunc = i;
      break;
    }
    rhs(i - 1, vp, wp, dv2, dw2);
    v[i - 1] = v[i] - 0.5 * h * (dv1 + dv2);
    w[i - 1] = w[i] - 0.5 * h * (dw1 + dw2);
    if (!std::isfinite(v[i - 1]) || v[i - 1] <= 0.0) {
      trunc = i;  // last valid node
      break;
    }
  }

  OpticalReconstruction rec;
  rec.F = F;
  rec.calib = calib;
  rec.truncation_index = trunc;
  rec.trusted.assign(n, 0);

  // Node 0 is the Dirichlet end: u(0) = 0 exactly, so v = 1/u has no value
  // there; all node-0 outputs stay pinned at zero and untrusted.
  std::vector<double> u_rec(n, 0.0), D_rec(n, 0.0), mu_rec(n, 0.0);
  const double trust_cap = 1.0 / std::sqrt(std::numeric_limits<double>::epsilon());
  for (std::size_t i = std::max<std::size_t>(trunc, 1); i < n; ++i) {
    u_rec[i] = 1.0 / v[i];
    D_rec[i] = F[i] * v[i] * v[i];
    mu_rec[i] = h1.h[i] * v[i];
    // 0 < u <= 1 holds exactly (u increases to its boundary value 1), so
    // v = 1/u >= 1; a march output below that is already diverged.
    bool ok = v[i] <= trust_cap && v[i] >= 1.0 - 1e-9;
    if (ok && box != nullptr) {
      ok = D_rec[i] >= box->d0 / kBoxSlack && D_rec[i] <= kBoxSlack * box->m_cap &&
           mu_rec[i] >= box->mu0 / kBoxSlack && mu_rec[i] <= kBoxSlack * box->m_cap;
    }
    rec.trusted[i] = ok ? 1 : 0;
  }
  // Trust is contiguous from the calibrated end: the march integrates from
  // y = H, so a corrupted node poisons everything below it.
  for (std::size_t i = n - 1; i-- > 0;)
    if (!rec.trusted[i + 1]) rec.trusted[i] = 0;
  rec.u_rec = CoefficientProfile(g, std::move(u_rec));
  rec.D_rec = CoefficientProfile(g, std::move(D_rec));
  rec.mu_rec = CoefficientProfile(g, std::move(mu_rec));
  if (!envelope_lo_sq.values.empty()) {
    if (!g.matches(envelope_lo_sq.grid))
      throw structural_error("reconstruct_coefficients: weight grid mismatch");
    rec.weight = envelope_lo_sq;
  }
  return rec;
}

StabilityDiagnostics stability_diagnostics(const OpticalReconstruction& rec,
                                           const OpticalReconstruction& rec_tilde,
                                           const InternalDatum& h1, const InternalDatum& h2,
                                           const InternalDatum& h1_tilde,
                                           const InternalDatum& h2_tilde) {
  const Grid1D& g = rec.F.grid;
  if (!g.matches(rec_tilde.F.grid)) throw structural_error("stability_diagnostics: grid mismatch");
  const std::size_t n = g.n_points;
  const double h = g.h_step;

  StabilityDiagnostics d;
  {
    std::vector<double> d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      d1[i] = h1.h[i] - h1_tilde.h[i];
      d2[i] = h2.h[i] - h2_tilde.h[i];
    }
    d.data_c1_misfit = c1_norm(d1, h) + c1_norm(d2, h);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!(rec.trusted[i] && rec_tilde.trusted[i])) continue;
    const double u = rec.u_rec[i], ut = rec_tilde.u_rec[i];
    const double umin = std::min(u, ut);
    d.f_gap = std::max(d.f_gap, std::abs(rec.F[i] - rec_tilde.F[i]));
    d.u_weighted_gap = std::max(d.u_weighted_gap, umin * std::abs(u - ut));
    d.d_weighted_gap =
        std::max(d.d_weighted_gap, umin * umin * std::abs(rec.D_rec[i] - rec_tilde.D_rec[i]));
    d.mu_weighted_gap =
        std::max(d.mu_weighted_gap, umin * umin * std::abs(rec.mu_rec[i] - rec_tilde.mu_rec[i]));
  }
  if (d.data_c1_misfit > 0.0) {
    d.ratio_f = d.f_gap / d.data_c1_misfit;
    d.ratio_u = d.u_weighted_gap / d.data_c1_misfit;
    d.ratio_d = d.d_weighted_gap / d.data_c1_misfit;
    d.ratio_mu = d.mu_weighted_gap / d.data_c1_misfit;
  }
  return d;
}

}  // namespace patl
