#include "patl/optical.hpp"

#include <algorithm>
#include <cmath>

#include "patl/numerics.hpp"

namespace patl {

ModalSolution solve_modal_bvp(const LayeredMedium& medium, long k) {
  medium.validate();
  const Grid1D& g = medium.grid();
  const std::size_t n = g.n_points;
  const double h = g.h_step;
  const double lambda = wavenumber(k, medium.width_L);
  const auto& D = medium.diffusion.values;
  const auto& mu = medium.absorption.values;

  // harmonic-mean face diffusion keeps the flux form conservative
  auto face = [&](std::size_t i) {  // D_{i+1/2}
    return 2.0 * D[i] * D[i + 1] / (D[i] + D[i + 1]);
  };

  std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0), rhs(n, 0.0);
  di[0] = 1.0;             // u(0) = 0
  di[n - 1] = 1.0;         // u(H) = 1
  rhs[n - 1] = 1.0;
  const double invh2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dm = face(i - 1), dp = face(i);
    const double react = mu[i] + lambda * lambda * D[i];
    if (!(react > 0.0))
      throw config_error("solve_modal_bvp: reaction term not positive at node " + std::to_string(i));
    lo[i] = -dm * invh2;
    up[i] = -dp * invh2;
    di[i] = (dm + dp) * invh2 + react;
  }

  ModalSolution sol;
  sol.k = k;
  sol.lambda = lambda;
  sol.u = CoefficientProfile(g, solve_tridiagonal(lo, di, up, rhs));
  for (double v : sol.u.values)
    if (!std::isfinite(v)) throw numerical_error("solve_modal_bvp: non-finite solution");
  sol.u_prime = derivative(sol.u);
  return sol;
}

Envelopes compute_envelopes(const LayeredMedium& medium, long k) {
  medium.validate();
  const Grid1D& g = medium.grid();
  const double lambda = wavenumber(k, medium.width_L);
  const auto& D = medium.diffusion.values;
  const auto& mu = medium.absorption.values;

  std::vector<double> sqrtD(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i) sqrtD[i] = std::sqrt(D[i]);
  const std::vector<double> sqrtD_dd = second_derivative(sqrtD, g.h_step);

  Envelopes env;
  env.k = k;
  std::vector<double> kap(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i)
    kap[i] = sqrtD_dd[i] / sqrtD[i] + mu[i] / D[i] + lambda * lambda;
  env.kappa = CoefficientProfile(g, kap);
  env.kappa_min = *std::min_element(kap.begin(), kap.end());
  env.kappa_max = *std::max_element(kap.begin(), kap.end());
  env.k_large_enough = env.kappa_min > 0.0;
  if (!env.k_large_enough) return env;  // envelopes stay empty

  const double H = g.y_max();
  const double sm = std::sqrt(env.kappa_min), sM = std::sqrt(env.kappa_max);
  const double DH = D[g.n_points - 1];
  // Comparison principle: a constant-kappa profile with kappa_c >= kappa(y)
  // everywhere lies BELOW u (larger kappa damps harder), so kappa_max builds
  // the lower envelope and kappa_min the upper one.  Empirically verified:
  // swapping the roles makes the h' floor exceed the exact slope.
  std::vector<double> lo(g.n_points), hi(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i) {
    const double pref = std::sqrt(DH / D[i]);
    lo[i] = pref * sinh_ratio(sM, g.y(i), H);
    hi[i] = pref * sinh_ratio(sm, g.y(i), H);
  }
  env.envelope_lo = CoefficientProfile(g, std::move(lo));
  env.envelope_hi = CoefficientProfile(g, std::move(hi));
  return env;
}

DerivativeBound derivative_lower_bound(const LayeredMedium& medium, const ModalSolution& sol,
                                       const Envelopes& env) {
  if (sol.k != env.k) throw structural_error("derivative_lower_bound: mode mismatch");
  DerivativeBound out;
  out.k_large_enough = env.k_large_enough;
  out.observed_min = *std::min_element(sol.u_prime.values.begin(), sol.u_prime.values.end());
  if (!env.k_large_enough) return out;

  const Grid1D& g = medium.grid();
  const double H = g.y_max();
  // The valid lower envelope of u carries sqrt(kappa_max) (see compute_envelopes),
  // so every constructive constant below must use it; x/sinh(xH) is decreasing in
  // x, making this bound weaker but sound.
  const double sq = std::sqrt(env.kappa_max);
  const auto& D = medium.diffusion.values;
  const double DH = D[g.n_points - 1];
  const double Dsup = *std::max_element(D.begin(), D.end());
  const double d0 = medium.bounds.d0, mu0 = medium.bounds.mu0;
  const double lam2 = sol.lambda * sol.lambda;
  const double pref = std::sqrt(DH / Dsup);

  // D(y) u'(y) >= pref*sq*d0/sinh(sq H) + (mu0+lam^2 d0)*pref*(cosh(sq y)-1)/(sq sinh(sq H));
  // divide by ||D||_inf for a u' bound.  The flux comparison integrates
  // (mu + lam^2 D) u >= (mu0 + lam^2 d0) * envelope_lo.  cosh(sq y)/sinh(sq H)
  // is evaluated in ratio form to survive large sq*H.
  std::vector<double> rho(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i) {
    const double y = g.y(i);
    // cosh(sq y)-1 over sinh(sq H), overflow-safe:
    //   = [e^{sq(y-H)}(1+e^{-2 sq y}) - 2 e^{-sq H}] / (1 - e^{-2 sq H})
    double coshm1_over_sinh;
    if (sq * H < 20.0) {
      coshm1_over_sinh = (std::cosh(sq * y) - 1.0) / std::sinh(sq * H);
    } else {
      coshm1_over_sinh = (std::exp(sq * (y - H)) * (1.0 + std::exp(-2.0 * sq * y)) -
                          2.0 * std::exp(-sq * H)) /
                         (-std::expm1(-2.0 * sq * H));
    }
    double sinh_ratio0;  // sq / sinh(sq H), overflow-safe
    if (sq * H < 20.0)
      sinh_ratio0 = sq / std::sinh(sq * H);
    else
      sinh_ratio0 = sq * 2.0 * std::exp(-sq * H) / (-std::expm1(-2.0 * sq * H));
    const double flux = pref * d0 * sinh_ratio0 +
                        (mu0 + lam2 * d0) * pref * coshm1_over_sinh / sq;
    rho[i] = flux / Dsup;
  }
  out.rho = CoefficientProfile(g, std::move(rho));
  out.rho_min = *std::min_element(out.rho.values.begin(), out.rho.values.end());
  if (sq * H < 20.0)
    out.u_prime0_bound = pref * sq / std::sinh(sq * H);
  else
    out.u_prime0_bound = pref * sq * 2.0 * std::exp(-sq * H) / (-std::expm1(-2.0 * sq * H));
  out.observed_respects_bound = out.observed_min >= out.rho_min && out.rho_min > 0.0;
  return out;
}

InternalDatum make_internal_data(const LayeredMedium& medium, const ModalSolution& sol) {
  if (!medium.grid().matches(sol.u.grid))
    throw structural_error("make_internal_data: grid mismatch");
  InternalDatum d;
  d.k = sol.k;
  std::vector<double> h(medium.grid().n_points);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = medium.absorption[i] * sol.u[i];
  d.h = CoefficientProfile(medium.grid(), std::move(h));
  d.h_prime = derivative(d.h);
  return d;
}

}  // namespace patl
