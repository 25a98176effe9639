#include "patl/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace patl {

std::vector<double> derivative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw structural_error("derivative: need at least 3 nodes");
  std::vector<double> d(n);
  const double inv2h = 1.0 / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) * inv2h;
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
  return d;
}

CoefficientProfile derivative(const CoefficientProfile& f) {
  return CoefficientProfile(f.grid, derivative(f.values, f.grid.h_step));
}

std::vector<double> second_derivative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw structural_error("second_derivative: need at least 3 nodes");
  std::vector<double> d(n);
  const double invh2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i)
    d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * invh2;
  if (n >= 4) {
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * invh2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * invh2;
  } else {
    d[0] = d[1];
    d[n - 1] = d[n - 2];
  }
  return d;
}

double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

std::vector<double> cumulative_trapezoid(std::span<const double> f, double h) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i)
    out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return out;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw structural_error("solve_tridiagonal: inconsistent band sizes");
  std::vector<double> c(n), d(n), x(n);
  double piv = diag[0];
  if (piv == 0.0) throw numerical_error("solve_tridiagonal: zero pivot at row 0");
  c[0] = upper[0] / piv;
  d[0] = rhs[0] / piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = diag[i] - lower[i] * c[i - 1];
    if (piv == 0.0)
      throw numerical_error("solve_tridiagonal: zero pivot at row " + std::to_string(i));
    c[i] = upper[i] / piv;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

double sinh_ratio(double s, double y, double H) {
  if (!(s >= 0.0)) throw numerical_error("sinh_ratio: negative rate");
  if (s * H < 1e-8) return y / H;  // sinh(x) ~ x
  // exp form is exact and immune to overflow: sinh(sy)/sinh(sH)
  //   = e^{s(y-H)} (1 - e^{-2sy}) / (1 - e^{-2sH})
  return std::exp(s * (y - H)) * (-std::expm1(-2.0 * s * y)) / (-std::expm1(-2.0 * s * H));
}

double sup_norm(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double l2_norm(std::span<const double> f, double h) {
  std::vector<double> sq(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) sq[i] = f[i] * f[i];
  return std::sqrt(trapezoid(sq, h));
}

double c1_norm(std::span<const double> f, double h) {
  return sup_norm(f) + sup_norm(derivative(f, h));
}

double h1_norm(std::span<const double> f, double h) {
  const double a = l2_norm(f, h);
  const double b = l2_norm(derivative(f, h), h);
  return std::sqrt(a * a + b * b);
}

double h3_norm(std::span<const double> f, double h) {
  std::vector<double> g(f.begin(), f.end());
  double sq = l2_norm(g, h);
  double total = sq * sq;
  for (int order = 1; order <= 3; ++order) {
    g = derivative(g, h);
    sq = l2_norm(g, h);
    total += sq * sq;
  }
  return std::sqrt(total);
}

namespace {

// Solve (W + c T^T T) g = W f where W = diag(trapezoid weights) and T is the
// (n-3) x n third-difference stencil [-1 3 -3 1]; heptadiagonal SPD, solved
// by a bandwidth-3 Cholesky factorization.  The third-order penalty matches
// the H^3 a-priori class of the coefficient profiles: for data with bounded
// third derivative the fitted slope error scales like delta^{2/3} instead of
// the delta^{1/2} a curvature penalty delivers.
std::vector<double> penalized_fit(std::span<const double> f, double h, double c) {
  const std::size_t n = f.size();
  std::vector<double> a0(n, 0.0), a1(n, 0.0), a2(n, 0.0), a3(n, 0.0);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    a0[i] = w;
    rhs[i] = w * f[i];
  }
  static constexpr double stencil[4] = {-1.0, 3.0, -3.0, 1.0};
  for (std::size_t r = 0; r + 3 < n; ++r)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = c * stencil[a] * stencil[b];
        switch (a - b) {
          case 0: a0[r + a] += v; break;
          case 1: a1[r + a] += v; break;
          case 2: a2[r + a] += v; break;
          default: a3[r + a] += v; break;
        }
      }

  std::vector<double> l0(n), l1(n, 0.0), l2(n, 0.0), l3(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 3) l3[i] = a3[i] / l0[i - 3];
    if (i >= 2) l2[i] = (a2[i] - (i >= 3 ? l3[i] * l1[i - 2] : 0.0)) / l0[i - 2];
    if (i >= 1)
      l1[i] = (a1[i] - (i >= 3 ? l3[i] * l2[i - 1] : 0.0) -
               (i >= 2 ? l2[i] * l1[i - 1] : 0.0)) / l0[i - 1];
    const double d = a0[i] - l1[i] * l1[i] - l2[i] * l2[i] - l3[i] * l3[i];
    if (!(d > 0.0)) throw numerical_error("penalized_fit: factorization lost positivity");
    l0[i] = std::sqrt(d);
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = (rhs[i] - (i >= 1 ? l1[i] * g[i - 1] : 0.0) - (i >= 2 ? l2[i] * g[i - 2] : 0.0) -
            (i >= 3 ? l3[i] * g[i - 3] : 0.0)) / l0[i];
  for (std::size_t i = n; i-- > 0;) {
    double s = g[i];
    if (i + 1 < n) s -= l1[i + 1] * g[i + 1];
    if (i + 2 < n) s -= l2[i + 2] * g[i + 2];
    if (i + 3 < n) s -= l3[i + 3] * g[i + 3];
    g[i] = s / l0[i];
  }
  return g;
}

}  // namespace

SmoothedData smooth_to_discrepancy(std::span<const double> f, double h, double delta) {
  const std::size_t n = f.size();
  SmoothedData out;
  if (delta <= 0.0 || n < 7) {
    out.values.assign(f.begin(), f.end());
    out.slope = derivative(f, h);
    return out;
  }

  auto residual = [&](const std::vector<double>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
      s += w * (g[i] - f[i]) * (g[i] - f[i]);
    }
    return std::sqrt(s);
  };

  // Bracket the discrepancy crossing in the penalty weight c = alpha / h^5.
  // residual is monotone nondecreasing in c, 0 at c = 0.  A positivity loss
  // while escalating means W has drowned under c T^T T in floating point --
  // the fit is already the maximal (quadratic-limit) smoother, so cap there.
  double hi = 1.0;
  std::vector<double> g = penalized_fit(f, h, hi);
  bool capped = false;
  if (residual(g) < delta) {
    while (residual(g) < delta) {
      hi *= 100.0;
      if (hi > 1e80) { capped = true; break; }  // maximal smoothing stays within delta
      try {
        g = penalized_fit(f, h, hi);
      } catch (const numerical_error&) {
        hi /= 100.0;
        capped = true;
        break;
      }
    }
  }
  if (!capped) {
    double lo = hi;
    std::vector<double> g_lo;
    do {
      lo /= 100.0;
      if (lo < 1e-80) break;
      g_lo = penalized_fit(f, h, lo);
    } while (residual(g_lo) > delta);
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      g = penalized_fit(f, h, mid);
      const double r = residual(g);
      if (std::abs(r - delta) <= 0.05 * delta) { hi = mid; break; }
      (r < delta ? lo : hi) = mid;
    }
  }
  out.penalty_weight = hi;
  out.values = std::move(g);
  out.slope = derivative(out.values, h);
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw structural_error("fit_line: need matching samples, at least 2");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { sx += x[i]; sy += y[i]; }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw numerical_error("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw structural_error("pearson: need matching samples, at least 2");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { sx += x[i]; sy += y[i]; }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

CoefficientProfile resample(const CoefficientProfile& f, std::size_t n_new) {
  if (n_new < 3) throw config_error("resample: need at least 3 points");
  if (n_new == f.grid.n_points) return f;
  const double y_max = f.grid.y_max();
  Grid1D g = Grid1D::over_interval(n_new, y_max);
  std::vector<double> v(n_new);
  const std::size_t n_old = f.grid.n_points;
  for (std::size_t i = 0; i < n_new; ++i) {
    const double y = std::min(g.y(i), y_max);
    double t = y / f.grid.h_step;
    std::size_t j = std::min(static_cast<std::size_t>(t), n_old - 2);
    const double w = t - static_cast<double>(j);
    v[i] = (1.0 - w) * f.values[j] + w * f.values[j + 1];
  }
  // keep endpoints exact regardless of rounding
  v.front() = f.values.front();
  v.back() = f.values.back();
  return CoefficientProfile(g, std::move(v));
}

}  // namespace patl
