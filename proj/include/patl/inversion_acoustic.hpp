#pragma once

// Recovery of modal initial data from the one-sided boundary trace, and the
// numerical certificates of the observability estimates.
//
// The forward map A : (f0, f1) -> (p(H, t_n))_n is the leapfrog simulator
// itself; the adjoint below is its exact discrete transpose (verified by the
// <A x, y> = <x, A^T y> test to 1e-10 relative).  The recovery solves the
// Tikhonov-regularized normal equations with conjugate gradients in the
// trapezoid-weighted inner products (CGNE).

#include <cstddef>
#include <vector>

#include "patl/acoustic.hpp"
#include "patl/medium.hpp"

namespace patl {

// Exact transpose of the (f0, f1) -> samples_p map realized by
// simulate_modal_wave at fixed dt with n_samples = residual.size() samples.
// Plain (unweighted) transpose; node-0 components are pinned to zero.
void apply_trace_adjoint(const LayeredMedium& medium, long k, double beta, double dt,
                         std::span<const double> residual, std::vector<double>& g0,
                         std::vector<double>& g1);

// Convenience forward wrapper: samples_p of the simulator for given data.
std::vector<double> apply_trace_forward(const LayeredMedium& medium, long k, double beta,
                                        double dt, std::size_t n_samples,
                                        std::span<const double> f0, std::span<const double> f1);

struct RecoveryOptions {
  double tikhonov_eps = 1e-10;
  double tolerance = 1e-8;  // relative normal-equation residual
  std::size_t max_iterations = 500;
  // Absolute L2(0,T) noise level of the pressure trace (0 = off).  When set,
  // iteration stops as soon as the data misfit ||A x - d|| drops to this
  // level: continuing past it only reproduces noise (semiconvergence), so
  // stopping there is the right convergence notion for noisy data.
  double discrepancy = 0.0;
};

struct RecoveryResult {
  CoefficientProfile f0_rec;
  CoefficientProfile f1_rec;
  std::size_t iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;      // relative data misfit of the re-simulated trace
  bool t_below_uniqueness = false; // trace shorter than 2 theta H
};

RecoveryResult recover_modal_initial_data(const LayeredMedium& medium, const BoundaryTrace& trace,
                                          double beta, const RecoveryOptions& opt = {});

// Observability certificate for one mode (requires T > 2 theta H):
//   lhs_f0   = lambda_k^2 int |f0|^2
//   lhs_grad = int c^-2 |f1|^2 + |f0'|^2
//   rhs      = (C_M/(T - 2 theta H) + beta) int |p_t(H,t)|^2 + lambda_k^2 int |p(H,t)|^2
// margin = rhs - max(lhs_f0, lhs_grad); integrals use the recorded trace span.
struct ObservabilityCertificate {
  long k = 0;
  double lambda = 0.0;
  double lhs_f0 = 0.0;
  double lhs_grad = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double t_effective = 0.0;
  bool passed(double rel_tol = 1e-8) const { return margin >= -rel_tol * rhs; }
};
ObservabilityCertificate certify_observability(const LayeredMedium& medium,
                                               const ModalInitialData& init,
                                               const BoundaryTrace& trace, double beta);

// Finite-Fourier aggregate over a set of modes (shared T, dt, beta):
//   int |grad f0|^2           = sum_k (int |f0_k'|^2 + lambda_k^2 int |f0_k|^2)
//   int c^-2 |f1|^2           = sum_k int c^-2 |f1_k|^2
// against the summed per-mode rhs.  Margins for both inequalities.
struct AggregateCertificate {
  double lhs_grad = 0.0;
  double lhs_vel = 0.0;
  double rhs = 0.0;
  double margin_grad = 0.0;
  double margin_vel = 0.0;
  std::vector<ObservabilityCertificate> per_mode;
  bool passed(double rel_tol = 1e-8) const {
    return margin_grad >= -rel_tol * rhs && margin_vel >= -rel_tol * rhs;
  }
};
AggregateCertificate certify_finite_fourier(const LayeredMedium& medium,
                                            const std::vector<ModalInitialData>& inits,
                                            const std::vector<BoundaryTrace>& traces, double beta);

// min over lam > 0 of  a*lam + b/lam^2 :  lam* = (2b/a)^(1/3).
struct TailMinimum {
  double lambda_star = 0.0;
  double value = 0.0;
  bool degenerate = false;  // a == 0 or b == 0: infimum not attained / trivial
};
TailMinimum minimize_tail(double a, double b);

// One-sided Hoelder bound for the spectrally truncated recovery:
//   rhs(lam) = velocity_term + lam * int_0^T ||p(.,t)||^2_{H^1/2} dt + M~^2 / lam^2
// with ||p||^2_{H^1/2} = sum_k (1 + lambda_k^2)^(1/2) |p_k(H,t)|^2, the
// velocity term (C_M/(T-2 theta H) + beta) sum_k int |p_t k(H,t)|^2, and the
// a-priori tail mass M~.  Reports the continuous minimizer, the best discrete
// lambda_N = 2 pi N / L, and the closed-form constant 2 M~^(2/3) a^(2/3).
struct HolderBound {
  double velocity_term = 0.0;
  double trace_h12 = 0.0;      // the coefficient a above
  double m_tilde = 0.0;
  double lambda_star = 0.0;
  double continuous_min = 0.0; // min over lam > 0 of the tail part
  long n_star = 0;             // best discrete mode count
  double discrete_min = 0.0;   // tail part at lambda_{n_star}
  double bound_continuous = 0.0;
  double bound_discrete = 0.0;
  double bound_closed_form = 0.0;  // velocity_term + 2 M~^(2/3) (trace_h12)^(2/3)
  bool degenerate = false;
};
HolderBound holder_one_side_bound(const LayeredMedium& medium,
                                  const std::vector<BoundaryTrace>& traces, double beta,
                                  double m_tilde, long n_cap = 256);

}  // namespace patl
