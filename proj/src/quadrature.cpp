#include "ksblow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ksblow/errors.hpp"

namespace ksblow::quad {

namespace bq = boost::math::quadrature;

namespace {

bq::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local bq::tanh_sinh<double> rule;
  return rule;
}

bq::exp_sinh<double>& exp_sinh_rule() {
  thread_local bq::exp_sinh<double> rule;
  return rule;
}

}  // namespace

Estimate finite(const Integrand& f, double a, double b, double rel_tol) {
  if (!(b > a)) return {};
  Estimate e;
  double l1 = 0.0;
  try {
    e.value = tanh_sinh_rule().integrate([&f](double x) { return f(x); }, a, b, rel_tol, &e.error, &l1);
  } catch (const std::exception& ex) {
    throw NumericalError(std::string("tanh-sinh quadrature failed on [") + std::to_string(a) +
                         ", " + std::to_string(b) + "]: " + ex.what());
  }
  if (!std::isfinite(e.value)) {
    throw NumericalError("tanh-sinh quadrature returned a non-finite value on [" +
                         std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return e;
}

Estimate to_infinity(const Integrand& f, double a, double rel_tol) {
  Estimate e;
  double l1 = 0.0;
  try {
    e.value = exp_sinh_rule().integrate([&f](double x) { return f(x); }, a,
                                        std::numeric_limits<double>::infinity(), rel_tol,
                                        &e.error, &l1);
  } catch (const std::exception& ex) {
    throw NumericalError(std::string("exp-sinh quadrature failed on [") + std::to_string(a) +
                         ", inf): " + ex.what());
  }
  if (!std::isfinite(e.value)) {
    throw DivergenceError("exp-sinh quadrature returned a non-finite value on [" +
                          std::to_string(a) + ", inf)");
  }
  return e;
}

Estimate piecewise(const Integrand& f, double a, double b, std::span<const double> breakpoints,
                   double rel_tol) {
  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(b);

  Estimate total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Estimate part = std::isinf(cuts[i + 1]) ? to_infinity(f, cuts[i], rel_tol)
                                            : finite(f, cuts[i], cuts[i + 1], rel_tol);
    total.value += part.value;
    total.error += part.error;
  }
  return total;
}

double gauss_legendre(const Integrand& f, double a, double b) {
  return bq::gauss<double, 10>::integrate(f, a, b);
}

Maximum golden_max(const Integrand& f, double a, double b, double rel_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = a, hi = b;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (hi - lo) > rel_tol * (std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  Maximum m;
  if (f1 >= f2) {
    m.x = x1;
    m.value = f1;
  } else {
    m.x = x2;
    m.value = f2;
  }
  return m;
}

std::vector<double> geometric_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) {
    throw DomainError("geometric_grid: need 0 < lo < hi and per_decade >= 1");
  }
  const double decades = std::log10(hi / lo);
  const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    g[i] = lo * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(n));
  }
  g.back() = hi;
  return g;
}

ScanResult scan_max_geometric(const Integrand& f, double lo, double hi, int per_decade,
                              std::span<const double> extra, bool refine) {
  ScanResult r;
  r.x = geometric_grid(lo, hi, per_decade);
  for (double e : extra) {
    if (e >= lo && e <= hi) r.x.push_back(e);
  }
  std::sort(r.x.begin(), r.x.end());
  r.x.erase(std::unique(r.x.begin(), r.x.end()), r.x.end());
  r.fx.resize(r.x.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    r.fx[i] = f(r.x[i]);
    if (r.fx[i] > r.fx[best]) best = i;
  }
  r.best = {r.x[best], r.fx[best], best == 0, best + 1 == r.x.size()};
  if (!refine || r.best.at_lower_edge || r.best.at_upper_edge) return r;

  // Golden section in log x between the neighbours of the best gridpoint.
  const double a = std::log(r.x[best - 1]);
  const double b = std::log(r.x[best + 1]);
  Maximum m = golden_max([&](double s) { return f(std::exp(s)); }, a, b, 1e-13);
  if (m.value > r.best.value) {
    r.best.x = std::exp(m.x);
    r.best.value = m.value;
  }
  return r;
}

}  // namespace ksblow::quad
