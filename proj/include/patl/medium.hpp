#pragma once

// Layered medium description: depth-dependent diffusion D, absorption mu_a
// and acoustic speed c on a shared grid over [0, H], plus the a-priori
// admissibility box (lower bounds d0, mu0, a C^3 cap M and a lower bound c_m
// for c^-2) that every constructive constant downstream is built from.

#include <cstddef>
#include <string>
#include <vector>

#include "patl/types.hpp"

namespace patl {

struct AdmissibleBounds {
  double d0 = 0.0;    // 0 < d0 <= D(y)
  double mu0 = 0.0;   // 0 < mu0 <= mu_a(y)
  double m_cap = 0.0; // ||D||_C3, ||mu_a||_C3 <= m_cap
  double c_m = 0.0;   // 0 < c_m <= c^-2(y)
};

struct LayeredMedium {
  CoefficientProfile diffusion;   // D
  CoefficientProfile absorption;  // mu_a
  CoefficientProfile speed;       // c
  double width_L = 0.0;           // lateral period (sets the modal wavenumbers)
  AdmissibleBounds bounds;

  const Grid1D& grid() const { return diffusion.grid; }
  double depth_H() const { return diffusion.grid.y_max(); }
  void validate() const;  // shared grid, positive profiles, positive L
};

// One admissibility constraint: margin >= 0 means satisfied; worst_y locates
// the tightest node.
struct ConstraintCheck {
  std::string name;
  double margin = 0.0;
  double worst_y = 0.0;
  bool passed = false;
};

struct AdmissibilityReport {
  bool passed = false;
  std::vector<ConstraintCheck> checks;
  const ConstraintCheck* find(const std::string& name) const;
};

// Checks membership of (D, mu_a, c) in the admissible box: pointwise lower
// bounds for D, mu_a and c^-2, and discrete C^3 bounds for D and mu_a.
// Derivatives of orders 1..3 are estimated by repeated application of the
// first-derivative stencil (centered interior, one-sided second-order ends);
// the C^3 norm is the max over orders 0..3 of the nodal sup norms.
AdmissibilityReport check_admissibility(const LayeredMedium& medium);

// Modal wavenumber lambda_k = 2*pi*k / L.
double wavenumber(long k, double width_L);

}  // namespace patl
