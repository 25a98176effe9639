#include "patl/inversion_acoustic.hpp"

#include <algorithm>
#include <cmath>

#include "patl/numerics.hpp"

namespace patl {

namespace {

// Scheme coefficients -- must mirror simulate_modal_wave exactly; the adjoint
// consistency test pins the two together.
struct SchemeCoeffs {
  std::vector<double> e, q;  // (c dt/h)^2, (c dt lambda)^2
  double gamma = 0.0;        // beta c_B^2 dt / h
  std::size_t n = 0, B = 0;
};

SchemeCoeffs make_coeffs(const LayeredMedium& medium, long k, double beta, double dt) {
  const Grid1D& g = medium.grid();
  const double lambda = wavenumber(k, medium.width_L);
  SchemeCoeffs s;
  s.n = g.n_points;
  s.B = s.n - 1;
  s.e.resize(s.n);
  s.q.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double cdt = medium.speed[i] * dt;
    s.e[i] = (cdt / g.h_step) * (cdt / g.h_step);
    s.q[i] = cdt * cdt * lambda * lambda;
  }
  s.gamma = beta * medium.speed[s.B] * medium.speed[s.B] * dt / g.h_step;
  return s;
}

}  // namespace

std::vector<double> apply_trace_forward(const LayeredMedium& medium, long k, double beta,
                                        double dt, std::size_t n_samples,
                                        std::span<const double> f0, std::span<const double> f1) {
  if (n_samples == 0) throw config_error("apply_trace_forward: need at least one sample");
  ModalInitialData init;
  init.k = k;
  init.f0 = CoefficientProfile(medium.grid(), std::vector<double>(f0.begin(), f0.end()));
  init.f1 = CoefficientProfile(medium.grid(), std::vector<double>(f1.begin(), f1.end()));
  SimulationOptions opt;
  opt.T = static_cast<double>(n_samples - 1) * dt;
  if (opt.T == 0.0) {  // single sample: no march
    return {init.f0.back()};
  }
  opt.beta = beta;
  opt.dt = dt;
  opt.record_energy = false;
  return simulate_modal_wave(medium, init, opt).trace.samples_p;
}

void apply_trace_adjoint(const LayeredMedium& medium, long k, double beta, double dt,
                         std::span<const double> residual, std::vector<double>& g0,
                         std::vector<double>& g1) {
  const SchemeCoeffs s = make_coeffs(medium, k, beta, dt);
  const std::size_t n = s.n, B = s.B;
  g0.assign(n, 0.0);
  g1.assign(n, 0.0);
  if (residual.empty()) return;
  const std::size_t M = residual.size() - 1;  // samples are y_0..y_M
  if (M == 0) {                               // forward is just y_0 = f0_B
    g0[B] = residual[0];
    return;
  }

  // Reverse sweep.  (au, av) hold the adjoints of the two live state slices
  // (p^{m-1}, p^m); each backward step applies the transposed update
  //   av' = au + L_v^T av + r_m e_B,   au' = L_u^T av,
  // the exact mirror of w = L(v, u); (u, v) <- (v, w); y_{m+1} = w_B.
  std::vector<double> au(n, 0.0), av(n, 0.0), w(n, 0.0), nav(n, 0.0);
  av[B] = residual[M];

  for (std::size_t m = M - 1; m >= 1; --m) {
    std::copy(av.begin(), av.end(), w.begin());
    std::copy(au.begin(), au.end(), nav.begin());
    for (std::size_t i = 1; i < B; ++i) {
      const double wi = w[i];
      nav[i] += (2.0 - 2.0 * s.e[i] - s.q[i]) * wi;
      nav[i + 1] += s.e[i] * wi;
      nav[i - 1] += s.e[i] * wi;
    }
    const double wB = w[B] / (1.0 + s.gamma);
    nav[B] += (2.0 - 2.0 * s.e[B] - s.q[B]) * wB;
    nav[B - 1] += 2.0 * s.e[B] * wB;
    nav[B] += residual[m];
    for (std::size_t i = 1; i < B; ++i) au[i] = -w[i];
    au[B] = -(1.0 - s.gamma) * wB;
    au[0] = 0.0;
    nav[0] = 0.0;
    std::swap(av, nav);
  }

  // position m = 1: av = adjoint of p^1, au = adjoint of p^0; y_0 reads p^0_B.
  au[B] += residual[0];

  // transpose of the Taylor start p^1 = Init1(f0, f1)
  for (std::size_t i = 1; i < B; ++i) {
    const double vi = av[i];
    g0[i] += (1.0 - s.e[i] - 0.5 * s.q[i]) * vi;
    g0[i + 1] += 0.5 * s.e[i] * vi;
    g0[i - 1] += 0.5 * s.e[i] * vi;
    g1[i] += dt * vi;
  }
  {
    const double vB = av[B];
    g0[B] += (1.0 - s.e[B] - 0.5 * s.q[B]) * vB;
    g0[B - 1] += s.e[B] * vB;
    g1[B] += dt * (1.0 - s.gamma) * vB;
  }
  // transpose of p^0 = f0
  for (std::size_t i = 0; i < n; ++i) g0[i] += au[i];
  g0[0] = 0.0;  // Dirichlet dof pinned
  g1[0] = 0.0;
}

namespace {

// trapezoid weight vectors
std::vector<double> trapezoid_weights(std::size_t n, double step) {
  std::vector<double> w(n, step);
  w.front() = 0.5 * step;
  w.back() = 0.5 * step;
  return w;
}

struct ModelVec {
  std::vector<double> f0, f1;
};

double dot_v(const ModelVec& a, const ModelVec& b, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * (a.f0[i] * b.f0[i] + a.f1[i] * b.f1[i]);
  return s;
}

}  // namespace

RecoveryResult recover_modal_initial_data(const LayeredMedium& medium, const BoundaryTrace& trace,
                                          double beta, const RecoveryOptions& opt) {
  medium.validate();
  if (trace.samples_p.size() < 2)
    throw config_error("recover_modal_initial_data: trace too short");
  if (!(trace.dt > 0.0)) throw config_error("recover_modal_initial_data: trace.dt must be positive");
  const Grid1D& g = medium.grid();
  const std::size_t n = g.n_points;
  const std::size_t n_samples = trace.samples_p.size();
  const double dt = trace.dt;
  const long k = trace.k;

  RecoveryResult out;
  {
    const auto konst = observability_constants(medium, beta);
    out.t_below_uniqueness = trace.t_final() <= konst.t_min;
  }

  const auto wt = trapezoid_weights(n_samples, dt);  // data space
  const auto wy = trapezoid_weights(n, g.h_step);    // model space (per block)

  const auto& d = trace.samples_p;

  auto apply_A = [&](const ModelVec& x) {
    return apply_trace_forward(medium, k, beta, dt, n_samples, x.f0, x.f1);
  };
  auto apply_At = [&](std::span<const double> r, ModelVec& out_vec) {
    apply_trace_adjoint(medium, k, beta, dt, r, out_vec.f0, out_vec.f1);
  };
  // K x = V^-1 A^T W A x + eps x  (self-adjoint, positive in <.,.>_V);
  // y_p keeps the un-weighted forward map of the argument so the main loop
  // can track the data residual without extra solves.
  std::vector<double> y_p(n_samples, 0.0);
  auto apply_K = [&](const ModelVec& x, ModelVec& kx) {
    auto y = apply_A(x);
    y_p = y;
    for (std::size_t m = 0; m < n_samples; ++m) y[m] *= wt[m];
    apply_At(y, kx);
    for (std::size_t i = 0; i < n; ++i) {
      kx.f0[i] = kx.f0[i] / wy[i] + opt.tikhonov_eps * x.f0[i];
      kx.f1[i] = kx.f1[i] / wy[i] + opt.tikhonov_eps * x.f1[i];
    }
    kx.f0[0] = 0.0;
    kx.f1[0] = 0.0;
  };

  // b = V^-1 A^T W d
  ModelVec b{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  {
    std::vector<double> wd(n_samples);
    for (std::size_t m = 0; m < n_samples; ++m) wd[m] = wt[m] * d[m];
    apply_At(wd, b);
    for (std::size_t i = 0; i < n; ++i) {
      b.f0[i] /= wy[i];
      b.f1[i] /= wy[i];
    }
    b.f0[0] = 0.0;
    b.f1[0] = 0.0;
  }

  ModelVec x{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  ModelVec r = b, p = b, kp{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  const double bnorm = std::sqrt(dot_v(b, b, wy));
  double rr = dot_v(r, r, wy);
  std::vector<double> s = d;  // data residual d - A x, tracked via y_p
  auto data_misfit = [&] {
    double sum = 0.0;
    for (std::size_t m = 0; m < n_samples; ++m) sum += wt[m] * s[m] * s[m];
    return std::sqrt(sum);
  };
  std::size_t it = 0;
  bool converged = bnorm == 0.0 ||
                   (opt.discrepancy > 0.0 && data_misfit() <= opt.discrepancy);
  while (!converged && it < opt.max_iterations) {
    apply_K(p, kp);
    const double pkp = dot_v(p, kp, wy);
    if (!(pkp > 0.0)) throw numerical_error("recover_modal_initial_data: CG curvature not positive");
    const double alpha = rr / pkp;
    for (std::size_t i = 0; i < n; ++i) {
      x.f0[i] += alpha * p.f0[i];
      x.f1[i] += alpha * p.f1[i];
      r.f0[i] -= alpha * kp.f0[i];
      r.f1[i] -= alpha * kp.f1[i];
    }
    for (std::size_t m = 0; m < n_samples; ++m) s[m] -= alpha * y_p[m];
    const double rr_new = dot_v(r, r, wy);
    ++it;
    if (opt.discrepancy > 0.0 && data_misfit() <= opt.discrepancy) {
      rr = rr_new;
      converged = true;
      break;
    }
    if (std::sqrt(rr_new) <= opt.tolerance * bnorm) {
      rr = rr_new;
      converged = true;
      break;
    }
    const double gamma = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) {
      p.f0[i] = r.f0[i] + gamma * p.f0[i];
      p.f1[i] = r.f1[i] + gamma * p.f1[i];
    }
  }

  out.iterations = it;
  out.converged = converged;
  out.f0_rec = CoefficientProfile(g, x.f0);
  out.f1_rec = CoefficientProfile(g, x.f1);

  // relative data misfit of the re-simulated trace, in the W norm
  const auto y = apply_A(x);
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < n_samples; ++m) {
    num += wt[m] * (y[m] - d[m]) * (y[m] - d[m]);
    den += wt[m] * d[m] * d[m];
  }
  out.residual_norm = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return out;
}

namespace {

double trace_square_integral(std::span<const double> samples, double dt) {
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = samples[i] * samples[i];
  return trapezoid(sq, dt);
}

}  // namespace

ObservabilityCertificate certify_observability(const LayeredMedium& medium,
                                               const ModalInitialData& init,
                                               const BoundaryTrace& trace, double beta) {
  if (init.k != trace.k) throw structural_error("certify_observability: mode mismatch");
  const auto konst = observability_constants(medium, beta);
  const double T = trace.t_final();
  if (!(T > konst.t_min))
    throw config_error("certify_observability: need T > 2 theta H = " +
                       std::to_string(konst.t_min) + ", got T = " + std::to_string(T));

  const Grid1D& g = medium.grid();
  const double lambda = wavenumber(init.k, medium.width_L);

  ObservabilityCertificate cert;
  cert.k = init.k;
  cert.lambda = lambda;
  cert.t_effective = T;

  {
    std::vector<double> sq(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) sq[i] = init.f0[i] * init.f0[i];
    cert.lhs_f0 = lambda * lambda * trapezoid(sq, g.h_step);
    const auto f0p = derivative(init.f0.values, g.h_step);
    for (std::size_t i = 0; i < g.n_points; ++i) {
      const double cinv2 = 1.0 / (medium.speed[i] * medium.speed[i]);
      sq[i] = cinv2 * init.f1[i] * init.f1[i] + f0p[i] * f0p[i];
    }
    cert.lhs_grad = trapezoid(sq, g.h_step);
  }

  const double pt_int = trace_square_integral(trace.samples_pt, trace.dt);
  const double p_int = trace_square_integral(trace.samples_p, trace.dt);
  cert.rhs = (konst.c_M / (T - konst.t_min) + beta) * pt_int + lambda * lambda * p_int;
  cert.margin = cert.rhs - std::max(cert.lhs_f0, cert.lhs_grad);
  return cert;
}

AggregateCertificate certify_finite_fourier(const LayeredMedium& medium,
                                            const std::vector<ModalInitialData>& inits,
                                            const std::vector<BoundaryTrace>& traces,
                                            double beta) {
  if (inits.size() != traces.size() || inits.empty())
    throw structural_error("certify_finite_fourier: need matching non-empty mode lists");
  const double T0 = traces.front().t_final();
  const double dt0 = traces.front().dt;
  for (const auto& t : traces) {
    if (std::abs(t.t_final() - T0) > 1e-12 * std::max(1.0, T0) ||
        std::abs(t.dt - dt0) > 1e-12 * dt0)
      throw structural_error("certify_finite_fourier: traces disagree on T or dt");
  }

  AggregateCertificate agg;
  const Grid1D& g = medium.grid();
  for (std::size_t j = 0; j < inits.size(); ++j) {
    auto cert = certify_observability(medium, inits[j], traces[j], beta);
    // aggregate LHS: |grad f0|^2 needs int |f0_k'|^2 + lambda^2 int |f0_k|^2
    std::vector<double> sq(g.n_points);
    const auto f0p = derivative(inits[j].f0.values, g.h_step);
    for (std::size_t i = 0; i < g.n_points; ++i) sq[i] = f0p[i] * f0p[i];
    agg.lhs_grad += trapezoid(sq, g.h_step) + cert.lhs_f0;
    for (std::size_t i = 0; i < g.n_points; ++i) {
      const double cinv2 = 1.0 / (medium.speed[i] * medium.speed[i]);
      sq[i] = cinv2 * inits[j].f1[i] * inits[j].f1[i];
    }
    agg.lhs_vel += trapezoid(sq, g.h_step);
    agg.rhs += cert.rhs;
    agg.per_mode.push_back(std::move(cert));
  }
  agg.margin_grad = agg.rhs - agg.lhs_grad;
  agg.margin_vel = agg.rhs - agg.lhs_vel;
  return agg;
}

TailMinimum minimize_tail(double a, double b) {
  if (a < 0.0 || b < 0.0) throw config_error("minimize_tail: coefficients must be >= 0");
  TailMinimum m;
  if (a == 0.0 || b == 0.0) {
    m.degenerate = true;
    m.lambda_star = 0.0;
    m.value = 0.0;  // infimum (not attained when exactly one vanishes)
    return m;
  }
  m.lambda_star = std::cbrt(2.0 * b / a);
  m.value = a * m.lambda_star + b / (m.lambda_star * m.lambda_star);
  return m;
}

HolderBound holder_one_side_bound(const LayeredMedium& medium,
                                  const std::vector<BoundaryTrace>& traces, double beta,
                                  double m_tilde, long n_cap) {
  if (traces.empty()) throw structural_error("holder_one_side_bound: no traces");
  if (m_tilde < 0.0) throw config_error("holder_one_side_bound: M~ must be >= 0");
  const auto konst = observability_constants(medium, beta);
  const double T = traces.front().t_final();
  const double dt = traces.front().dt;
  for (const auto& t : traces)
    if (std::abs(t.t_final() - T) > 1e-12 * std::max(1.0, T) || std::abs(t.dt - dt) > 1e-12 * dt)
      throw structural_error("holder_one_side_bound: traces disagree on T or dt");
  if (!(T > konst.t_min))
    throw config_error("holder_one_side_bound: need T > 2 theta H");

  HolderBound hb;
  hb.m_tilde = m_tilde;

  double pt_sum = 0.0;
  const std::size_t n_samples = traces.front().samples_p.size();
  std::vector<double> h12(n_samples, 0.0);  // sum_k (1+lambda_k^2)^(1/2) |p_k(H,t)|^2
  for (const auto& t : traces) {
    pt_sum += trace_square_integral(t.samples_pt, dt);
    const double lam = wavenumber(t.k, medium.width_L);
    const double wgt = std::sqrt(1.0 + lam * lam);
    for (std::size_t m = 0; m < n_samples; ++m) h12[m] += wgt * t.samples_p[m] * t.samples_p[m];
  }
  hb.velocity_term = (konst.c_M / (T - konst.t_min) + beta) * pt_sum;
  hb.trace_h12 = trapezoid(h12, dt);

  const double a = hb.trace_h12, b = m_tilde * m_tilde;
  const auto tail = minimize_tail(a, b);
  hb.degenerate = tail.degenerate;
  hb.lambda_star = tail.lambda_star;
  hb.continuous_min = tail.value;
  hb.bound_continuous = hb.velocity_term + hb.continuous_min;
  hb.bound_closed_form =
      hb.velocity_term + 2.0 * std::pow(m_tilde, 2.0 / 3.0) * std::pow(a, 2.0 / 3.0);

  // best discrete lambda_N = 2 pi N / L, N = 1..n_cap
  hb.n_star = 0;
  hb.discrete_min = 0.0;
  if (!tail.degenerate) {
    double best = 0.0;
    for (long N = 1; N <= n_cap; ++N) {
      const double lam = wavenumber(N, medium.width_L);
      const double val = a * lam + b / (lam * lam);
      if (hb.n_star == 0 || val < best) {
        best = val;
        hb.n_star = N;
      }
    }
    hb.discrete_min = best;
    hb.bound_discrete = hb.velocity_term + best;
  } else {
    hb.bound_discrete = hb.velocity_term;
  }
  return hb;
}

}  // namespace patl
