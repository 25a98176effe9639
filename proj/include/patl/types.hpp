#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace patl {

// Thrown for bad user input: malformed files, inconsistent grids, out-of-range
// parameters, inadmissible media.  The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a computation goes numerically wrong at runtime (NaN blow-up,
// singular integrand, CFL refusal with an explicit dt).  CLI exit code 3.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when jointly-supplied inputs disagree structurally (mismatched grids,
// inconsistent T/beta across modes).  CLI exit code 2 as well.
struct structural_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform 1d grid on [0, y_max], y_i = i*h_step, i = 0..n_points-1.
struct Grid1D {
  std::size_t n_points = 0;
  double h_step = 0.0;

  Grid1D() = default;
  Grid1D(std::size_t n, double h) : n_points(n), h_step(h) {
    if (n < 3) throw config_error("Grid1D: need at least 3 points, got " + std::to_string(n));
    if (!(h > 0.0)) throw config_error("Grid1D: step must be positive");
  }
  static Grid1D over_interval(std::size_t n, double y_max) {
    if (n < 3) throw config_error("Grid1D: need at least 3 points, got " + std::to_string(n));
    if (!(y_max > 0.0)) throw config_error("Grid1D: interval length must be positive");
    return Grid1D(n, y_max / static_cast<double>(n - 1));
  }
  double y(std::size_t i) const { return static_cast<double>(i) * h_step; }
  double y_max() const { return static_cast<double>(n_points - 1) * h_step; }
  bool matches(const Grid1D& o, double tol = 1e-12) const {
    return n_points == o.n_points &&
           std::abs(h_step - o.h_step) <= tol * std::max(h_step, o.h_step);
  }
};

// Nodal samples of a scalar coefficient on a Grid1D.
struct CoefficientProfile {
  Grid1D grid;
  std::vector<double> values;

  CoefficientProfile() = default;
  CoefficientProfile(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.n_points)
      throw structural_error("CoefficientProfile: " + std::to_string(values.size()) +
                             " values on a grid of " + std::to_string(grid.n_points) + " points");
  }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double front() const { return values.front(); }
  double back() const { return values.back(); }
};

}  // namespace patl
