#include "patl/acoustic.hpp"

#include <algorithm>
#include <cmath>

#include "patl/numerics.hpp"

namespace patl {

namespace {

double max_speed(const LayeredMedium& m) {
  return *std::max_element(m.speed.values.begin(), m.speed.values.end());
}

}  // namespace

SimulationResult simulate_modal_wave(const LayeredMedium& medium, const ModalInitialData& init,
                                     const SimulationOptions& opt) {
  medium.validate();
  const Grid1D& g = medium.grid();
  if (!g.matches(init.f0.grid) || !g.matches(init.f1.grid))
    throw structural_error("simulate_modal_wave: initial data grid mismatch");
  if (!(opt.T > 0.0)) throw config_error("simulate_modal_wave: T must be positive");
  if (opt.beta < 0.0) throw config_error("simulate_modal_wave: beta must be >= 0");
  if (std::abs(init.f0.front()) > 1e-12 * std::max(1.0, sup_norm(init.f0.values)))
    throw config_error("simulate_modal_wave: f0(0) must vanish (Dirichlet end)");

  const std::size_t n = g.n_points;
  const double h = g.h_step;
  const double lambda = wavenumber(init.k, medium.width_L);
  const double cmax = max_speed(medium);
  // stability limit including the zeroth-order lambda^2 term
  const double dt_max = h / (cmax * std::sqrt(1.0 + 0.25 * lambda * lambda * h * h));
  double dt = opt.dt;
  if (dt <= 0.0) {
    dt = 0.9 * dt_max;
  } else if (dt > dt_max) {
    throw numerical_error("simulate_modal_wave: dt " + std::to_string(dt) +
                          " violates the CFL limit; need dt <= " + std::to_string(dt_max));
  }
  const auto n_steps = static_cast<std::size_t>(std::floor(opt.T / dt + 1e-12));

  const auto& c = medium.speed.values;
  const auto& f0 = init.f0.values;
  const auto& f1 = init.f1.values;
  const std::size_t B = n - 1;

  std::vector<double> e(n), q(n);  // e = (c dt / h)^2, q = (c dt lambda)^2
  for (std::size_t i = 0; i < n; ++i) {
    const double cdt = c[i] * dt;
    e[i] = (cdt / h) * (cdt / h);
    q[i] = cdt * cdt * lambda * lambda;
  }
  const double gamma = opt.beta * c[B] * c[B] * dt / h;

  std::vector<double> prev = f0, cur(n, 0.0), next(n, 0.0);
  prev[0] = 0.0;

  // Taylor start: p^1 = f0 + dt f1 + dt^2/2 c^2 (f0_yy - lambda^2 f0), with
  // the t=0 ghost from the boundary condition f0_y(H) + beta f1(H) = 0.
  for (std::size_t i = 1; i < B; ++i)
    cur[i] = (1.0 - e[i] - 0.5 * q[i]) * f0[i] + 0.5 * e[i] * (f0[i + 1] + f0[i - 1]) +
             dt * f1[i];
  cur[B] = (1.0 - e[B] - 0.5 * q[B]) * f0[B] + e[B] * f0[B - 1] + dt * (1.0 - gamma) * f1[B];
  cur[0] = 0.0;

  SimulationResult res;
  res.beta = opt.beta;
  res.dt_used = dt;
  BoundaryTrace& tr = res.trace;
  tr.k = init.k;
  tr.dt = dt;
  tr.times.resize(n_steps + 1);
  tr.samples_p.resize(n_steps + 1);
  tr.samples_pt.resize(n_steps + 1);
  for (std::size_t m = 0; m <= n_steps; ++m) tr.times[m] = static_cast<double>(m) * dt;
  tr.samples_p[0] = f0[B];
  tr.samples_pt[0] = f1[B];
  if (n_steps >= 1) tr.samples_p[1] = cur[B];

  const bool energy_on = opt.record_energy;
  EnergyLedger& led = res.energy;
  if (energy_on) {
    led.times = tr.times;
    led.energy.assign(n_steps + 1, 0.0);
    led.boundary_dissipation.assign(n_steps + 1, 0.0);
    led.energy[0] = compute_energy(medium, f0, f1, lambda);
  }

  std::vector<double> vel(n);  // centered velocity slice for the ledger

  // March one step past the last sample so every recorded p_t and ledger
  // entry uses the centered difference (p^{n+1} - p^{n-1}) / (2 dt).
  for (std::size_t step = 1; step <= n_steps; ++step) {
    for (std::size_t i = 1; i < B; ++i)
      next[i] = (2.0 - 2.0 * e[i] - q[i]) * cur[i] + e[i] * (cur[i + 1] + cur[i - 1]) - prev[i];
    next[B] = ((2.0 - 2.0 * e[B] - q[B]) * cur[B] + 2.0 * e[B] * cur[B - 1] -
               (1.0 - gamma) * prev[B]) /
              (1.0 + gamma);
    next[0] = 0.0;

    if (!std::isfinite(next[B]))
      throw numerical_error("simulate_modal_wave: non-finite boundary value at step " +
                            std::to_string(step));

    // "cur" is p^step; with p^{step+1} in hand, record the centered data at t_step.
    if (step < n_steps) tr.samples_p[step + 1] = next[B];
    tr.samples_pt[step] = (next[B] - prev[B]) / (2.0 * dt);
    if (energy_on && step <= n_steps) {
      for (std::size_t i = 0; i < n; ++i) vel[i] = (next[i] - prev[i]) / (2.0 * dt);
      led.energy[step] = compute_energy(medium, cur, vel, lambda);
    }

    std::swap(prev, cur);
    std::swap(cur, next);
  }

  // Cumulative boundary dissipation 2*beta * int |p_t(H,s)|^2 ds (trapezoid).
  // The factor 2 is what the energy E = int c^-2|p_t|^2 + |p_y|^2 + lambda^2|p|^2
  // actually loses through the impedance face: dE/dt = 2 p_y(H) p_t(H) = -2 beta |p_t(H)|^2.
  if (energy_on) {
    std::vector<double> sq(n_steps + 1);
    for (std::size_t m = 0; m <= n_steps; ++m) sq[m] = tr.samples_pt[m] * tr.samples_pt[m];
    auto cumul = cumulative_trapezoid(sq, dt);
    for (std::size_t m = 0; m <= n_steps; ++m)
      led.boundary_dissipation[m] = 2.0 * opt.beta * cumul[m];
  }
  return res;
}

double compute_energy(const LayeredMedium& medium, std::span<const double> state,
                      std::span<const double> velocity, double lambda) {
  const Grid1D& g = medium.grid();
  if (state.size() != g.n_points || velocity.size() != g.n_points)
    throw structural_error("compute_energy: slice size mismatch");
  const auto grad = derivative(state, g.h_step);
  std::vector<double> density(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i) {
    const double cinv2 = 1.0 / (medium.speed[i] * medium.speed[i]);
    density[i] = cinv2 * velocity[i] * velocity[i] + grad[i] * grad[i] +
                 lambda * lambda * state[i] * state[i];
  }
  return trapezoid(density, g.h_step);
}

ObservabilityConstants observability_constants(const LayeredMedium& medium, double beta) {
  medium.validate();
  if (!(medium.bounds.c_m > 0.0))
    throw config_error("observability_constants: bounds.c_m must be positive");
  const Grid1D& g = medium.grid();
  const double H = g.y_max();
  const std::size_t n = g.n_points;

  std::vector<double> c2inv(n);
  for (std::size_t i = 0; i < n; ++i) c2inv[i] = 1.0 / (medium.speed[i] * medium.speed[i]);
  const auto dc2inv = derivative(c2inv, g.h_step);

  std::vector<double> integrand(n);
  for (std::size_t i = 0; i < n; ++i)
    integrand[i] = medium.speed[i] * medium.speed[i] * std::abs(dc2inv[i]);

  ObservabilityConstants k;
  k.grad_exponent = trapezoid(integrand, g.h_step);
  const double c2inv_H = c2inv[n - 1];
  const double c2inv_sup = *std::max_element(c2inv.begin(), c2inv.end());
  const double w1inf = c2inv_sup + sup_norm(dc2inv);  // sum convention

  k.theta = std::sqrt(c2inv_sup);
  k.c_M = H * std::exp(k.grad_exponent) * (c2inv_H + beta * beta);
  const double denom = 1.0 / (1.0 + H * c2inv_H);
  k.c_m1 = denom * (1.0 + (1.0 + H / medium.bounds.c_m) * w1inf);
  k.c_m2 = H * denom;
  k.c_m3 = denom * (1.0 + 2.0 * H * std::sqrt(c2inv_sup));
  k.t_min = 2.0 * k.theta * H;
  return k;
}

ContinuityCertificate verify_continuity_bound(const LayeredMedium& medium,
                                              const ModalInitialData& init,
                                              const BoundaryTrace& trace, double beta) {
  if (trace.k != init.k) throw structural_error("verify_continuity_bound: mode mismatch");
  const double lambda = wavenumber(init.k, medium.width_L);
  const double T = trace.t_final();
  if (!(T > 0.0)) throw config_error("verify_continuity_bound: empty trace");

  const auto konst = observability_constants(medium, beta);
  const double e0 = compute_energy(medium, init.f0.values, init.f1.values, lambda);

  std::vector<double> sq(trace.samples_pt.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = trace.samples_pt[i] * trace.samples_pt[i];
  const double pt_int = trapezoid(sq, trace.dt);

  ContinuityCertificate cert;
  cert.vacuous = beta == 0.0;
  cert.lhs = beta * beta * pt_int;
  cert.rhs = ((konst.c_m1 + konst.c_m2 * lambda) * T + konst.c_m3) * e0;
  cert.margin = cert.rhs - cert.lhs;
  return cert;
}

}  // namespace patl
