#pragma once

// Modal acoustic forward solver on (0, H) x (0, T):
//   c^-2(y) p_tt = p_yy - lambda_k^2 p,
//   p(0, t) = 0,
//   p_y(H, t) + beta p_t(H, t) = 0   (damped observation boundary),
//   p(., 0) = f0, p_t(., 0) = f1,
// integrated by leapfrog with a ghost-node elimination of the damped
// boundary (second order), plus the energy ledger
//   E(t) = int_0^H c^-2 |p_t|^2 + |p_y|^2 + lambda_k^2 |p|^2 dy,
// whose exact continuum law is E'(t) = -2 beta |p_t(H, t)|^2 (multiply the
// equation by p_t and integrate by parts; both quadratic boundary terms
// carry the factor 2 because E has no 1/2 prefactor), and the constructive
// observability constants.

#include <cstddef>
#include <span>
#include <vector>

#include "patl/medium.hpp"
#include "patl/types.hpp"

namespace patl {

struct ModalInitialData {
  long k = 0;
  CoefficientProfile f0;  // initial pressure, f0(0) = 0
  CoefficientProfile f1;  // initial velocity
};

struct BoundaryTrace {
  long k = 0;
  double dt = 0.0;
  std::vector<double> times;       // 0, dt, ..., floor(T/dt)*dt
  std::vector<double> samples_p;   // p(H, t_n)
  std::vector<double> samples_pt;  // p_t(H, t_n), centered differences
  double t_final() const { return times.empty() ? 0.0 : times.back(); }
};

struct EnergyLedger {
  std::vector<double> times;
  std::vector<double> energy;                 // E(t_n)
  std::vector<double> boundary_dissipation;   // 2*beta * int_0^{t_n} |p_t(H,s)|^2 ds
  // The scheme conserves E(t) + boundary_dissipation(t) up to discretization error.
};

struct SimulationResult {
  BoundaryTrace trace;
  EnergyLedger energy;
  double beta = 0.0;
  double dt_used = 0.0;
};

struct SimulationOptions {
  double T = 0.0;        // final time, required
  double beta = 0.0;     // boundary damping, >= 0
  double dt = 0.0;       // 0 = auto: 0.9 * h / (max c * sqrt(1 + (lambda h / 2)^2))
  bool record_energy = true;
};

// Leapfrog integration; refuses dt above the stability limit
// h / (max c * sqrt(1 + (lambda h / 2)^2)) with the required dt in the
// message; aborts with the step index if the boundary sample goes
// non-finite.  Trace sequences have floor(T/dt) + 1 entries.
SimulationResult simulate_modal_wave(const LayeredMedium& medium, const ModalInitialData& init,
                                     const SimulationOptions& opt);

// Quadrature of c^-2 |p_t|^2 + |p_y|^2 + lambda^2 |p|^2 for given state and
// velocity slices (used for E(0) with (f0, f1); the simulator builds its
// ledger with centered (p^{n+1} - p^{n-1}) / (2 dt) velocities).
double compute_energy(const LayeredMedium& medium, std::span<const double> state,
                      std::span<const double> velocity, double lambda);

// Constructive constants of the observability/continuity estimates:
//   theta  = sqrt(||c^-2||_inf)
//   C_M    = H * exp(int_0^H c^2 |d/dy c^-2| dy) * (c^-2(H) + beta^2)
//   C_m1   = (1 + H c^-2(H))^-1 (1 + (1 + H/c_m) ||c^-2||_{W^{1,inf}})
//   C_m2   = H (1 + H c^-2(H))^-1
//   C_m3   = (1 + H c^-2(H))^-1 (1 + 2 H ||c^-2||_inf^{1/2})
// with ||f||_{W^{1,inf}} = ||f||_inf + ||f'||_inf and c_m the admissible
// lower bound for c^-2.  T_min = 2 theta H is the uniqueness threshold.
struct ObservabilityConstants {
  double theta = 0.0;
  double c_M = 0.0;
  double c_m1 = 0.0;
  double c_m2 = 0.0;
  double c_m3 = 0.0;
  double t_min = 0.0;
  double grad_exponent = 0.0;  // the quadrature int_0^H c^2 |d/dy c^-2| dy
};
ObservabilityConstants observability_constants(const LayeredMedium& medium, double beta);

// Forward continuity certificate:
//   beta^2 int_0^T |p_t(H,t)|^2 dt <= ((C_m1 + C_m2 lambda_k) T + C_m3) E(0).
// beta = 0 makes the statement vacuous (lhs = 0), flagged instead of refused.
struct ContinuityCertificate {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool vacuous = false; // beta == 0
};
ContinuityCertificate verify_continuity_bound(const LayeredMedium& medium,
                                              const ModalInitialData& init,
                                              const BoundaryTrace& trace, double beta);

}  // namespace patl
