#pragma once

// Modal optical solver on (0, H): for lambda_k = 2*pi*k/L solve
//   -(D u')' + (mu_a + lambda_k^2 D) u = 0,   u(0) = 0, u(H) = 1,
// plus the comparison machinery built on the transformed potential
//   kappa(y) = (sqrt(D))'' / sqrt(D) + mu_a / D + lambda_k^2 :
// sinh envelopes, the constructive lower bound for u', and the internal
// absorbed-energy data h = mu_a * u.

#include <cstddef>
#include <vector>

#include "patl/medium.hpp"
#include "patl/types.hpp"

namespace patl {

struct ModalSolution {
  long k = 0;
  double lambda = 0.0;
  CoefficientProfile u;        // BVP solution, 0 <= u <= 1, u(0)=0, u(H)=1
  CoefficientProfile u_prime;  // discrete derivative of u
};

// Pointwise sandwich for the modal solution u.  A constant-kappa comparison
// profile with kappa_c >= kappa(y) everywhere lies below u, so the LOWER
// envelope carries kappa_max and the UPPER one kappa_min.
struct Envelopes {
  long k = 0;
  double kappa_min = 0.0;  // min over nodes of kappa(y)
  double kappa_max = 0.0;  // max over nodes
  bool k_large_enough = false;  // kappa_min > 0; envelopes empty otherwise
  CoefficientProfile envelope_lo;  // sqrt(D(H)/D(y)) sinh(sqrt(kappa_max) y)/sinh(sqrt(kappa_max) H)
  CoefficientProfile envelope_hi;  // same with kappa_min
  CoefficientProfile kappa;        // the transformed potential itself
};

// Constructive lower bound for u' assembled from the envelope comparison
// (the lower envelope carries sqrt(kappa_max), hence so do these constants):
//   D(y) u'(y) >= sqrt(D(H)/||D||_inf) * sqrt(kappa_max) * d0 / sinh(sqrt(kappa_max) H)
//              + (mu0 + lambda^2 d0) * sqrt(D(H)/||D||_inf)
//                * (cosh(sqrt(kappa_max) y) - 1) / (sqrt(kappa_max) sinh(sqrt(kappa_max) H)),
// divided through by ||D||_inf to bound u' itself.  rho is that profile;
// rho_min its minimum (attained at y=0); u_prime0_bound is the undivided
// u'(0) comparison value sqrt(D(H)/||D||_inf) sqrt(kappa_max)/sinh(...).
struct DerivativeBound {
  bool k_large_enough = false;
  double rho_min = 0.0;
  double u_prime0_bound = 0.0;
  double observed_min = 0.0;  // min over nodes of the discrete u'
  bool observed_respects_bound = false;
  CoefficientProfile rho;
};

// Internal data for one mode: h = mu_a * u and its discrete derivative.
struct InternalDatum {
  long k = 0;
  CoefficientProfile h;
  CoefficientProfile h_prime;
};

// Conservative second-order finite differences with harmonic-mean face
// diffusion; tridiagonal direct solve; boundary rows pinned to u(0)=0,
// u(H)=1.  Throws config_error for k such that the system loses positivity
// (never happens for admissible media: mu_a + lambda^2 D > 0).
ModalSolution solve_modal_bvp(const LayeredMedium& medium, long k);

// Potential, extremes and sinh envelopes; k_large_enough = (kappa_min > 0).
Envelopes compute_envelopes(const LayeredMedium& medium, long k);

// The constructive u' lower bound; requires kappa_min > 0 (flagged otherwise).
DerivativeBound derivative_lower_bound(const LayeredMedium& medium, const ModalSolution& sol,
                                       const Envelopes& env);

InternalDatum make_internal_data(const LayeredMedium& medium, const ModalSolution& sol);

}  // namespace patl
