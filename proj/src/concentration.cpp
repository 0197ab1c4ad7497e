#include <cmath>
#include <limits>

#include "ksblow/errors.hpp"
#include "ksblow/quadrature.hpp"
#include "ksblow/radial_core.hpp"

namespace ksblow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// R^{p} * mass without overflowing for large |p|.
double weighted(double mass, double R, double p) {
  if (mass <= 0.0) return 0.0;
  return std::exp(std::log(mass) + p * std::log(R));
}

// Base-2 radical inverse; gives a nested sequence of center positions.
double van_der_corput(unsigned k) {
  double v = 0.0, f = 0.5;
  while (k != 0) {
    if (k & 1U) v += f;
    k >>= 1U;
    f *= 0.5;
  }
  return v;
}

double ball_mass(const RadialProfile& p, const MassProfile& m, double a, double R) {
  if (a == 0.0) return m(R);
  const Dimension d = p.dim();
  double mass = R > a ? m(R - a) : 0.0;
  const double hi = a + R;
  // Cut off a negligible core when the sphere passes through the origin, so
  // singular densities are not sampled at underflowing radii.
  const double lo = std::max(std::abs(a - R), 1e-13 * hi);
  if (const auto* s = std::get_if<profile::ShellAtom>(&p.kind())) {
    if (s->radius > lo && s->radius < hi) mass += s->mass * sphere_fraction_in_ball(d, s->radius, a, R);
    return mass;
  }
  const double dm1 = d.real() - 1.0;
  auto f = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double u = profile_density(p, rho);
    if (u == 0.0) return 0.0;
    return u * std::pow(rho, dm1) * sphere_fraction_in_ball(d, rho, a, R);
  };
  const auto bp = p.breakpoints();
  mass += sigma_d(d) * quad::piecewise(f, lo, hi, bp, 1e-9).value;
  return mass;
}

}  // namespace

ConcentrationValue radial_concentration(const MassProfile& m, FracOrder alpha) {
  const double p = alpha.value() - m.dim().real();
  const double cr = m.characteristic_radius();
  const double lo = 1e-6 * cr, hi = 1e6 * cr;
  auto f = [&](double R) { return weighted(m(R), R, p); };
  const auto scan = quad::scan_max_geometric(f, lo, hi, 64, m.breakpoints());

  ConcentrationValue c;
  c.value = scan.best.value;
  c.attained_radius = scan.best.x;
  const double log_decade = std::log(10.0);
  if (scan.best.at_upper_edge) {
    const double f_hi = f(hi), f_prev = f(hi / 10.0);
    const double slope = f_prev > 0.0 ? std::log(f_hi / f_prev) / log_decade : kInf;
    if (slope > 1e-3) {
      c.infinite = true;
      c.value = kInf;
    }
    c.attained_radius = kInf;
  } else if (scan.best.at_lower_edge) {
    const double f_lo = f(lo), f_next = f(lo * 10.0);
    const double slope = f_next > 0.0 ? std::log(f_next / f_lo) / log_decade : -kInf;
    if (slope < -1e-3) {
      c.infinite = true;
      c.value = kInf;
    } else if (std::abs(f(cr) - c.value) <= 1e-12 * c.value) {
      // Scale-invariant profile: the supremum is attained at every radius.
      c.attained_radius = cr;
    }
  }
  return c;
}

MorreyEstimate morrey_estimate(const RadialProfile& p, FracOrder alpha, int center_samples) {
  if (center_samples < 1) throw DomainError("morrey_estimate needs center_samples >= 1");
  const MassProfile m = mass_from_density(p);
  const double pw = alpha.value() - p.dim().real();
  const double cr = p.characteristic_radius();
  std::vector<double> radii = quad::geometric_grid(1e-3 * cr, 1e3 * cr, 16);
  for (double b : p.breakpoints()) radii.push_back(b);

  // Center 0 uses the full radial scan.
  const ConcentrationValue centered = radial_concentration(m, alpha);
  MorreyEstimate best;
  best.centers_sampled = center_samples;
  best.value = centered.value;
  best.radius = centered.attained_radius;
  if (centered.infinite) return best;
  for (int k = 1; k < center_samples; ++k) {
    const double a = cr * std::pow(10.0, 6.0 * (van_der_corput(static_cast<unsigned>(k)) - 0.5));
    for (double R : radii) {
      const double v = weighted(ball_mass(p, m, a, R), R, pw);
      if (v > best.value) {
        best.value = v;
        best.center = a;
        best.radius = R;
      }
    }
  }
  return best;
}

}  // namespace ksblow
