#include "patl/medium.hpp"

#include <cmath>
#include <numbers>

#include "patl/numerics.hpp"

namespace patl {

void LayeredMedium::validate() const {
  if (!diffusion.grid.matches(absorption.grid) || !diffusion.grid.matches(speed.grid))
    throw structural_error("LayeredMedium: D, mu_a, c must share one grid");
  if (!(width_L > 0.0)) throw config_error("LayeredMedium: width L must be positive");
  for (std::size_t i = 0; i < diffusion.size(); ++i) {
    if (!(diffusion[i] > 0.0)) throw config_error("LayeredMedium: D must be positive everywhere");
    if (!(absorption[i] > 0.0)) throw config_error("LayeredMedium: mu_a must be positive everywhere");
    if (!(speed[i] > 0.0)) throw config_error("LayeredMedium: c must be positive everywhere");
  }
}

const ConstraintCheck* AdmissibilityReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

ConstraintCheck lower_bound_check(const std::string& name, const CoefficientProfile& f,
                                  double bound) {
  ConstraintCheck c;
  c.name = name;
  std::size_t worst = 0;
  double margin = f[0] - bound;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] - bound < margin) {
      margin = f[i] - bound;
      worst = i;
    }
  }
  c.margin = margin;
  c.worst_y = f.grid.y(worst);
  c.passed = margin >= 0.0;
  return c;
}

// C^3 norm estimate: max over derivative orders 0..3 of nodal sup norms,
// derivatives by repeated first-derivative stencils.
ConstraintCheck c3_check(const std::string& name, const CoefficientProfile& f, double m_cap) {
  ConstraintCheck c;
  c.name = name;
  std::vector<double> g = f.values;
  double norm = 0.0;
  std::size_t worst = 0;
  for (int order = 0; order <= 3; ++order) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g[i]) > norm) {
        norm = std::abs(g[i]);
        worst = i;
      }
    }
    if (order < 3) g = derivative(g, f.grid.h_step);
  }
  c.margin = m_cap - norm;
  c.worst_y = f.grid.y(worst);
  c.passed = c.margin >= 0.0;
  return c;
}

}  // namespace

AdmissibilityReport check_admissibility(const LayeredMedium& medium) {
  medium.validate();
  AdmissibilityReport rep;

  rep.checks.push_back(lower_bound_check("D_lower", medium.diffusion, medium.bounds.d0));
  rep.checks.push_back(lower_bound_check("mu_lower", medium.absorption, medium.bounds.mu0));

  CoefficientProfile c2inv = medium.speed;
  for (auto& v : c2inv.values) v = 1.0 / (v * v);
  rep.checks.push_back(lower_bound_check("c2inv_lower", c2inv, medium.bounds.c_m));

  rep.checks.push_back(c3_check("D_c3", medium.diffusion, medium.bounds.m_cap));
  rep.checks.push_back(c3_check("mu_c3", medium.absorption, medium.bounds.m_cap));

  rep.passed = true;
  for (const auto& c : rep.checks) rep.passed = rep.passed && c.passed;
  return rep;
}

double wavenumber(long k, double width_L) {
  if (!(width_L > 0.0)) throw config_error("wavenumber: width L must be positive");
  return static_cast<double>(k) * (2.0 * std::numbers::pi / width_L);
}

}  // namespace patl
