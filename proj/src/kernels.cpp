#include "ksblow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"
#include "ksblow/parallel.hpp"
#include "ksblow/quadrature.hpp"

namespace ksblow {

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const StableSubordinator> cached_subordinator(double beta, int d) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const StableSubordinator>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{beta, d}];
  if (!slot) slot = std::make_shared<const StableSubordinator>(beta, 0.5 * d);
  return slot;
}

// Least-squares slope and intercept of ln|F| against ln(rho) on rho >= from.
TailFit fit_tail(std::span<const double> rho, std::span<const double> F, double from) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < from * (1.0 - 1e-12)) continue;
    const double v = std::abs(F[i]);
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    const double x = std::log(rho[i]), y = std::log(v);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  TailFit fit;
  if (n < 2) {
    fit.exponent = std::numeric_limits<double>::quiet_NaN();
    fit.coefficient = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.exponent = slope;
  fit.coefficient = std::exp((sy - slope * sx) / n);
  return fit;
}

}  // namespace

double gauss_kernel(Dimension d, double rho) {
  return std::exp(-0.5 * d.real() * std::log(4.0 * kPi) - 0.25 * rho * rho);
}

RadialKernel::RadialKernel(Dimension d, FracOrder alpha) : d_(d), alpha_(alpha) {
  if (alpha.is_classical()) return;
  sub_ = cached_subordinator(0.5 * alpha.value(), d.value());
  const auto lam = sub_->lambdas();
  const auto logw = sub_->log_weights();
  const double half_d = 0.5 * d.real();
  base_.reserve(lam.size());
  inv4l_.reserve(lam.size());
  for (std::size_t j = 0; j < lam.size(); ++j) {
    if (!std::isfinite(logw[j])) continue;
    base_.push_back(logw[j] - half_d * std::log(4.0 * kPi * lam[j]));
    inv4l_.push_back(0.25 / lam[j]);
  }
  // Large-rho expansion coefficients (log magnitude without the sine, kept in
  // base-free form: c_n = sign_n * exp(logc_n)).
  const double a = alpha.value();
  for (int n = 1; n <= 120; ++n) {
    const double sn = std::sin(n * kPi * a / 2.0);
    const double logmag = -(half_d + 1.0) * std::log(kPi) - std::lgamma(n + 1.0) +
                          std::lgamma(n * a / 2.0 + 1.0) + std::lgamma((n * a + d.real()) / 2.0) +
                          n * a * std::log(2.0);
    tail_.push_back((n % 2 == 1 ? 1.0 : -1.0) * sn * std::exp(logmag));
    tail_log_.push_back(logmag);
  }
}

double RadialKernel::R0() const {
  const double a = alpha_.value(), dd = d_.real();
  return std::exp(std::log(2.0) + std::lgamma(dd / a) - std::log(a) - 0.5 * dd * std::log(4.0 * kPi) -
                  std::lgamma(dd / 2.0));
}

std::optional<KernelValues> RadialKernel::tail_expansion(double rho) const {
  if (tail_.empty() || !(rho > 0.0)) return std::nullopt;
  const double a = alpha_.value(), dd = d_.real();
  const double lr = std::log(rho);
  KernelValues v;
  double prev_mag = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tail_.size(); ++i) {
    const double p = (static_cast<double>(i) + 1.0) * a + dd;
    const double mag = std::exp(tail_log_[i] - p * lr);
    if (mag > prev_mag) return std::nullopt;  // asymptotic series started to grow
    prev_mag = mag;
    const double c = tail_[i] * std::exp(-p * lr);
    v.R += c;
    v.Rp += -p * c / rho;
    v.Rpp += p * (p + 1.0) * c / (rho * rho);
    if (mag * p * (p + 1.0) < 1e-17 * std::abs(v.R)) return v;
  }
  return std::nullopt;
}

KernelValues RadialKernel::subordinated(double rho) const {
  const double r2 = rho * rho;
  KernelValues v;
  // inv4l_ is decreasing; skip nodes whose Gaussian factor underflows.
  const auto first = std::partition_point(inv4l_.begin(), inv4l_.end(),
                                          [&](double c) { return r2 * c > 745.0; });
  for (auto j = static_cast<std::size_t>(first - inv4l_.begin()); j < inv4l_.size(); ++j) {
    const double c = inv4l_[j];
    const double term = std::exp(base_[j] - r2 * c);
    v.R += term;
    v.Rp += term * (-2.0 * rho * c);
    v.Rpp += term * (4.0 * r2 * c * c - 2.0 * c);
  }
  return v;
}

KernelValues RadialKernel::at(double rho) const {
  rho = std::abs(rho);
  if (alpha_.is_classical()) {
    const double g = gauss_kernel(d_, rho);
    return {g, -0.5 * rho * g, (0.25 * rho * rho - 0.5) * g};
  }
  if (rho > series_switch_) {
    if (auto v = tail_expansion(rho)) return *v;
  }
  return subordinated(rho);
}

double RadialKernel::full(double t, double r) const {
  const double a = alpha_.value();
  return std::exp(-d_.real() / a * std::log(t)) * R(r * std::exp(-std::log(t) / a));
}

KernelTable kernel_R(Dimension d, FracOrder alpha, const KernelGrid& grid, int threads) {
  if (!(grid.rho_min > 0.0) || !(grid.rho_max > grid.rho_min * 10.0) || grid.per_decade < 4) {
    throw_domain("kernel grid needs 0 < rho_min, rho_max >= 10 rho_min and at least 4 points per decade");
  }
  KernelTable t;
  t.d = d;
  t.alpha = alpha;
  t.kernel = std::make_shared<const RadialKernel>(d, alpha);
  t.rho = quad::geometric_grid(grid.rho_min, grid.rho_max, grid.per_decade);
  const std::size_t n = t.rho.size();
  t.R.resize(n);
  t.Rp.resize(n);
  t.Rpp.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto v = t.kernel->at(t.rho[i]);
    t.R[i] = v.R;
    t.Rp[i] = v.Rp;
    t.Rpp[i] = v.Rpp;
  });
  t.R0 = t.kernel->R0();
  const double from = grid.rho_max / 10.0;
  t.tail_R = fit_tail(t.rho, t.R, from);
  t.tail_Rp = fit_tail(t.rho, t.Rp, from);
  t.tail_Rpp = fit_tail(t.rho, t.Rpp, from);
  if (alpha.is_classical()) t.tail_R.algebraic = t.tail_Rp.algebraic = t.tail_Rpp.algebraic = false;

  const double ls = log_sigma_d(d);
  const double dd = d.real();
  const double mass = table_integral(t, [&](double rho, const KernelValues& v) {
    return v.R > 0.0 ? std::exp(ls + std::log(v.R) + (dd - 1.0) * std::log(rho)) : 0.0;
  });
  const double deriv = table_integral(t, [&](double rho, const KernelValues& v) {
    return v.Rp < 0.0 ? std::exp(ls - std::log(dd) + std::log(-v.Rp) + dd * std::log(rho)) : 0.0;
  });
  if (std::abs(mass - 1.0) > 1e-6 || std::abs(deriv - 1.0) > 1e-6) {
    throw NumericalError("kernel table rejected for d=" + std::to_string(d.value()) +
                         ", alpha=" + fmt(alpha.value()) + ": mass residual " + fmt(mass - 1.0) +
                         ", derivative residual " + fmt(deriv - 1.0) + " (tolerance 1e-6)");
  }
  return t;
}

namespace detail {

double table_integral_impl(const KernelTable& table,
                           const std::function<double(double, const KernelValues&)>& f) {
  const auto& rho = table.rho;
  const std::size_t n = rho.size();
  if (n < 2) throw_domain("kernel table has fewer than two gridpoints");
  const double h = std::log(rho[1] / rho[0]);
  auto g = [&](std::size_t i) { return rho[i] * f(rho[i], {table.R[i], table.Rp[i], table.Rpp[i]}); };

  double acc = 0.0;
  const double g0 = g(0), g1 = g(1);
  acc += 0.5 * h * g0;
  for (std::size_t i = 1; i < n; ++i) acc += h * g(i);

  // Head: integrand ~ rho^k below rho_min.
  if (g0 != 0.0) {
    const double slope = (g1 > 0.0 && g0 > 0.0) || (g1 < 0.0 && g0 < 0.0)
                             ? std::log(g1 / g0) / h
                             : std::numeric_limits<double>::quiet_NaN();
    if (!(slope > 0.0)) {
      throw NumericalError("integrand is not integrable at rho -> 0 over the kernel table");
    }
    acc += g0 / slope;
  }

  // Tail: continue on the same log-grid with the large-rho expansion until
  // the power-law remainder is negligible.
  const auto& kernel = *table.kernel;
  double r = rho.back();
  double g_prev = g(n - 1);
  acc -= 0.5 * h * g_prev;
  double tail_acc = 0.5 * h * g_prev;
  for (int step = 0; step < 20000; ++step) {
    r *= std::exp(h);
    const double gi = r * f(r, kernel.at(r));
    if (!std::isfinite(gi)) throw NumericalError("non-finite integrand in kernel tail");
    tail_acc += h * gi;
    if (gi == 0.0) break;
    const double slope = std::log(std::abs(gi / g_prev)) / h;
    if (slope < 0.0) {
      const double remainder = std::abs(gi / slope);
      if (remainder < 1e-14 * std::abs(acc + tail_acc)) {
        tail_acc += gi / (-slope) - 0.5 * h * gi;
        break;
      }
    }
    g_prev = gi;
    if (r > 1e250) throw DivergenceError("kernel-table integral does not converge at rho -> inf");
  }
  return acc + tail_acc;
}

}  // namespace detail

KernelValidation validate_kernel(const KernelTable& table) {
  KernelValidation out;
  const Dimension d = table.d;
  const double dd = d.real(), a = table.alpha.value();
  const double ls = log_sigma_d(d);
  const double mass = table_integral(table, [&](double rho, const KernelValues& v) {
    return v.R > 0.0 ? std::exp(ls + std::log(v.R) + (dd - 1.0) * std::log(rho)) : 0.0;
  });
  const double deriv = table_integral(table, [&](double rho, const KernelValues& v) {
    return v.Rp < 0.0 ? std::exp(ls - std::log(dd) + std::log(-v.Rp) + dd * std::log(rho)) : 0.0;
  });
  out.mass_residual = mass - 1.0;
  out.derivative_residual = deriv - 1.0;
  if (std::abs(out.mass_residual) > 1e-6) {
    out.failures.push_back("normalization sigma_d*int R rho^(d-1) off by " + fmt(out.mass_residual));
  }
  if (std::abs(out.derivative_residual) > 1e-6) {
    out.failures.push_back("normalization (sigma_d/d)*int |R'| rho^d off by " +
                           fmt(out.derivative_residual));
  }

  if (table.alpha.is_classical()) {
    out.tail_checked = false;
  } else {
    auto check = [&](const TailFit& fit, double expected, double& err, const char* name) {
      err = std::abs(fit.exponent - expected) / std::abs(expected);
      if (!(err <= 0.02)) {
        out.failures.push_back(std::string("tail exponent of ") + name + " is " + fmt(fit.exponent) +
                               ", expected " + fmt(expected));
      }
    };
    check(table.tail_R, -dd - a, out.tail_exponent_error_R, "R");
    check(table.tail_Rp, -dd - 1.0 - a, out.tail_exponent_error_Rp, "R'");
    check(table.tail_Rpp, -dd - 2.0 - a, out.tail_exponent_error_Rpp, "R''");
  }

  double prev_q = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.rho.size(); ++i) {
    const double rho = table.rho[i];
    if (!(table.R[i] > 0.0) || table.Rp[i] == 0.0) {
      ++out.underflow_points;
      continue;
    }
    if (!(table.Rp[i] < 0.0) && out.derivative_negative) {
      out.derivative_negative = false;
      out.failures.push_back("R' >= 0 at rho=" + fmt(rho));
    }
    const double conv = rho * table.Rpp[i] - table.Rp[i];
    const double scale = std::abs(rho * table.Rpp[i]) + std::abs(table.Rp[i]);
    if (conv < -1e-10 * scale && out.convexity_ok) {
      out.convexity_ok = false;
      out.failures.push_back("rho R'' - R' < 0 at rho=" + fmt(rho));
    }
    const double q = std::exp((1.0 - dd) * std::log(rho) + std::log(std::abs(table.Rp[i])));
    if (!(q < prev_q * (1.0 + 1e-13)) && out.weighted_monotone) {
      out.weighted_monotone = false;
      out.failures.push_back("rho^(1-d)|R'| not decreasing at rho=" + fmt(rho));
    }
    prev_q = q;
  }
  return out;
}

void require_integrable(const MassProfile& datum, FracOrder alpha) {
  if (!datum.infinite_mass()) return;
  const double cr = datum.characteristic_radius();
  const double m1 = datum(1e5 * cr), m2 = datum(1e6 * cr);
  const double bound = datum.dim().real() + alpha.value();
  if (!std::isfinite(m2) || (m1 > 0.0 && std::log10(m2 / m1) >= bound - 1e-6)) {
    throw DivergenceError("datum fails the integrability condition int u0 (1+|x|)^(-d-alpha) < inf "
                          "(mass grows like r^" + fmt(m1 > 0.0 ? std::log10(m2 / m1) : INFINITY) +
                          ", need exponent < " + fmt(bound) + ")");
  }
}

double semigroup_at_origin(const RadialKernel& kernel, double t, const MassProfile& datum) {
  if (!(t > 0.0) || !std::isfinite(t)) throw_domain("semigroup time must be positive and finite");
  if (datum.dim().value() != kernel.dim().value()) {
    throw_domain("datum and kernel dimensions differ");
  }
  if (datum.form() == "zero") return 0.0;
  require_integrable(datum, kernel.alpha());
  const double a = kernel.alpha().value();
  const double scale = std::exp(std::log(t) / a);  // t^{1/alpha}
  // The kernel varies on the unit scale in rho.
  std::vector<double> bps{1.0};
  for (double b : datum.breakpoints()) {
    if (b > 0.0 && std::isfinite(b)) bps.push_back(b / scale);
  }
  std::sort(bps.begin(), bps.end());
  auto integrand = [&](double rho) {
    const double rp = kernel.Rp(rho);
    if (rp == 0.0) return 0.0;
    const double m = datum(scale * rho);
    if (m == 0.0) return 0.0;
    return m * std::abs(rp);
  };
  const auto est = quad::piecewise(integrand, 0.0, std::numeric_limits<double>::infinity(), bps, 1e-11);
  const double value = std::exp(-kernel.dim().real() / a * std::log(t)) * est.value;
  if (!std::isfinite(value)) throw DivergenceError("semigroup integral diverges");
  return value;
}

}  // namespace ksblow
