#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ksblow::quad {

using Integrand = std::function<double(double)>;

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate reported by the rule
};

/// Double-exponential (tanh-sinh) rule on a finite interval; tolerates
/// integrable endpoint singularities.
Estimate finite(const Integrand& f, double a, double b, double rel_tol = 1e-10);

/// exp-sinh rule on [a, +inf).
Estimate to_infinity(const Integrand& f, double a, double rel_tol = 1e-10);

/// Integrates over [a, b] (b may be +inf) splitting at every breakpoint that
/// falls strictly inside the interval.
Estimate piecewise(const Integrand& f, double a, double b, std::span<const double> breakpoints,
                   double rel_tol = 1e-10);

/// Fixed 10-point Gauss-Legendre on [a, b].
double gauss_legendre(const Integrand& f, double a, double b);

struct Maximum {
  double x = 0.0;
  double value = 0.0;
  bool at_lower_edge = false;
  bool at_upper_edge = false;
};

/// Golden-section search for the maximum of f on [a, b] (unimodal there).
Maximum golden_max(const Integrand& f, double a, double b, double rel_tol = 1e-12);

/// Scans f on a geometric grid over [lo, hi] with `per_decade` points per
/// decade plus `extra` points, then refines the best gridpoint by golden
/// section in log-space between its neighbours.
struct ScanResult {
  Maximum best;
  std::vector<double> x;
  std::vector<double> fx;
};
ScanResult scan_max_geometric(const Integrand& f, double lo, double hi, int per_decade,
                              std::span<const double> extra = {}, bool refine = true);

/// Geometric grid with `per_decade` points per decade, endpoints included.
std::vector<double> geometric_grid(double lo, double hi, int per_decade);

}  // namespace ksblow::quad
