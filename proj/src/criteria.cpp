#include "ksblow/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"
#include "ksblow/parallel.hpp"
#include "ksblow/quadrature.hpp"

namespace ksblow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool stationary_exists(Dimension d, FracOrder a) {
  return a.is_classical() ? d.value() >= 3 : 2.0 * a.value() < d.real();
}

// sup_r r^alpha u0(r) over a geometric grid plus breakpoints.
double singular_ratio_sup(const RadialProfile& p, FracOrder alpha) {
  if (p.is_measure()) return kInf;
  const double a = alpha.value();
  if (const auto* c = std::get_if<profile::Chandrasekhar>(&p.kind())) {
    if (p.alpha() == alpha) return c->eta * s_alpha_d(p.dim(), alpha);
  }
  const double cr = p.characteristic_radius();
  std::vector<double> extra;
  for (double b : p.breakpoints()) {
    if (b > 0.0 && std::isfinite(b)) extra.push_back(b);
  }
  auto f = [&](double r) {
    const double u = profile_density(p, r);
    return u == 0.0 ? 0.0 : std::exp(a * std::log(r) + std::log(u));
  };
  const auto scan = quad::scan_max_geometric(f, 1e-6 * cr, 1e6 * cr, 64, extra);
  // Untruncated Chandrasekhar profiles of another order grow without bound.
  if (scan.best.at_upper_edge || scan.best.at_lower_edge) {
    const double lo = scan.best.at_lower_edge ? 1e-6 * cr : 1e5 * cr;
    const double hi = scan.best.at_lower_edge ? 1e-5 * cr : 1e6 * cr;
    const double slope = std::log(f(hi) / f(lo)) / std::log(10.0);
    if ((scan.best.at_upper_edge && slope > 1e-3) || (scan.best.at_lower_edge && slope < -1e-3)) return kInf;
  }
  return scan.best.value;
}

}  // namespace

double constant_C(Dimension d) {
  const double dd = d.real();
  const double log_pref = std::log(16.0) - std::lgamma(dd / 2.0);
  auto f = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double lr = std::log(rho);
    const double log_den = d.value() == 2 ? std::log(4.0) + 2.0 * lr : std::log(2.0 * (dd - 2.0) + 4.0 * rho * rho);
    return std::exp(log_pref + (dd + 1.0) * lr - rho * rho - log_den);
  };
  const double peak = std::sqrt((dd + 1.0) / 2.0);
  const double a = quad::finite(f, 0.0, peak, 1e-14).value;
  const double b = quad::to_infinity(f, peak, 1e-14).value;
  return a + b;
}

double constant_C_alpha(const KernelTable& table) {
  const double dd = table.d.real();
  for (std::size_t i = 0; i < table.rho.size(); ++i) {
    const double den = table.rho[i] * table.Rpp[i] - table.Rp[i] + (dd - 2.0) * std::abs(table.Rp[i]);
    if (!(den > 0.0) && table.Rp[i] != 0.0) {
      throw NumericalError("kernel table invalid for C_alpha: d/drho(rho^(1-d) R') <= 0 at rho=" +
                           fmt(table.rho[i]));
    }
  }
  const double ls = log_sigma_d(table.d);
  return table_integral(table, [&](double rho, const KernelValues& v) {
    const double den = rho * v.Rpp - v.Rp + (dd - 2.0) * std::abs(v.Rp);
    if (v.Rp == 0.0 || !(den > 0.0)) return 0.0;
    return 2.0 * std::exp(ls + 2.0 * std::log(std::abs(v.Rp)) + dd * std::log(rho) - std::log(den));
  });
}

KValue constant_K(Dimension d, FracOrder alpha) {
  if (!stationary_exists(d, alpha)) {
    throw DivergenceError("K diverges: the singular stationary solution needs " +
                          std::string(alpha.is_classical() ? "d >= 3" : "2 alpha < d") + " (d=" +
                          std::to_string(d.value()) + ", alpha=" + fmt(alpha.value()) + ")");
  }
  KValue k;
  const double a = alpha.value(), dd = d.real();
  if (alpha.is_classical()) {
    k.value = k.closed_form = 1.0;
    return k;
  }
  const double s = s_alpha_d(d, alpha);
  k.closed_form = s * std::exp(-a * std::log(2.0) + std::lgamma((dd - a) / 2.0) - std::lgamma(dd / 2.0) -
                               std::lgamma(1.0 + a / 2.0));
  const auto table = shared_kernel_table(d, alpha);
  const double ls = log_sigma_d(d);
  k.value = s * table_integral(*table, [&](double rho, const KernelValues& v) {
              return v.R > 0.0 ? std::exp(ls + std::log(v.R) + (dd - 1.0 - a) * std::log(rho)) : 0.0;
            });
  k.residual = k.value / k.closed_form - 1.0;
  return k;
}

double constant_L(Dimension d, FracOrder alpha) {
  const double dd = d.real();
  if (alpha.is_classical()) {
    if (d.value() == 2) return 1.0 / (4.0 * kPi);
    const double h = (dd - 2.0) / 2.0;
    return std::exp(std::log(0.25) - 0.5 * dd * std::log(kPi) + (dd / 2.0 - 1.0) * std::log(h) + 1.0 - dd / 2.0);
  }
  const auto table = shared_kernel_table(d, alpha);
  const double p = dd - alpha.value();
  std::size_t best = 0;
  double best_v = -kInf;
  for (std::size_t i = 0; i < table->rho.size(); ++i) {
    if (!(table->R[i] > 0.0)) continue;
    const double v = p * std::log(table->rho[i]) + std::log(table->R[i]);
    if (v > best_v) best_v = v, best = i;
  }
  if (best == 0 || best + 1 >= table->rho.size()) {
    throw NumericalError("maximizer of rho^(d-alpha) R lies at the kernel grid boundary; extend the rho-range");
  }
  const auto& kernel = *table->kernel;
  auto g = [&](double x) {
    const double rho = std::exp(x);
    return p * x + std::log(kernel.R(rho));
  };
  const auto m = quad::golden_max(g, std::log(table->rho[best - 1]), std::log(table->rho[best + 1]));
  return std::exp(std::max(m.value, best_v));
}

double threshold_N(Dimension d, FracOrder alpha) {
  return criterion_constants(d, alpha).N_threshold;
}

std::shared_ptr<const KernelTable> shared_kernel_table(Dimension d, FracOrder alpha, int threads) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::shared_ptr<const KernelTable>> cache;
  const auto key = std::make_pair(d.value(), alpha.value());
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<const KernelTable>(kernel_R(d, alpha, {}, threads));
  std::lock_guard lock(mutex);
  return cache.emplace(key, table).first->second;
}

CriterionConstants criterion_constants(Dimension d, FracOrder alpha, int threads) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, CriterionConstants> cache;
  const auto key = std::make_pair(d.value(), alpha.value());
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  CriterionConstants c;
  c.d = d;
  c.alpha = alpha;
  if (alpha.is_classical()) {
    c.C = constant_C(d);
  } else {
    const auto table = shared_kernel_table(d, alpha, threads);
    c.kernel_check = validate_kernel(*table);
    c.C = constant_C_alpha(*table);
    if (d.value() > 2) c.upper_bound = 2.0 * d.real() / (d.real() - 2.0);
  }
  if (stationary_exists(d, alpha)) c.K = constant_K(d, alpha);
  c.L = constant_L(d, alpha);
  c.N_threshold = c.C / c.L;
  std::lock_guard lock(mutex);
  return cache.emplace(key, c).first->second;
}

CriterionCurve criterion_curve(const MassProfile& datum, FracOrder alpha, double T_lo, double T_hi,
                               int per_decade, int threads) {
  if (!(T_lo > 0.0) || !(T_hi > T_lo)) throw_domain("criterion curve needs 0 < T_lo < T_hi");
  std::shared_ptr<const RadialKernel> kernel =
      alpha.is_classical() ? std::make_shared<const RadialKernel>(datum.dim(), alpha)
                           : shared_kernel_table(datum.dim(), alpha, threads)->kernel;
  require_integrable(datum, alpha);
  const auto Ts = quad::geometric_grid(T_lo, T_hi, per_decade);
  CriterionCurve curve;
  curve.samples.resize(Ts.size());
  parallel_for(Ts.size(), threads, [&](std::size_t i) {
    curve.samples[i] = {Ts[i], Ts[i] * semigroup_at_origin(*kernel, Ts[i], datum)};
  });
  std::size_t best = 0;
  int local_maxima = 0;
  for (std::size_t i = 0; i < Ts.size(); ++i) {
    const double v = curve.samples[i].value;
    if (v > curve.samples[best].value) best = i;
    if (i > 0 && i + 1 < Ts.size()) {
      const double tol = 1e-9 * std::abs(v);
      if (v > curve.samples[i - 1].value + tol && v > curve.samples[i + 1].value + tol) ++local_maxima;
    }
  }
  curve.unimodal = local_maxima <= 1;
  curve.sup = curve.samples[best].value;
  curve.argsup = curve.samples[best].T;
  if (best > 0 && best + 1 < Ts.size()) {
    auto g = [&](double x) {
      const double T = std::exp(x);
      return T * semigroup_at_origin(*kernel, T, datum);
    };
    const auto m = quad::golden_max(g, std::log(Ts[best - 1]), std::log(Ts[best + 1]), 1e-10);
    if (m.value > curve.sup) {
      curve.sup = m.value;
      curve.argsup = std::exp(m.x);
    }
  }
  return curve;
}

std::string verdict_name(const Verdict& v) {
  return std::visit(overloaded{[](const verdict::BlowupBy&) { return std::string("BlowupBy"); },
                               [](const verdict::GlobalBelowSingular&) {
                                 return std::string("GlobalBelowSingular");
                               },
                               [](const verdict::Indeterminate&) { return std::string("Indeterminate"); }},
                    v);
}

namespace {

// Least scanned T with value above C, refined by bisection in ln T.
double first_crossing(const CriterionCurve& curve, double C, const RadialKernel& kernel,
                      const MassProfile& datum) {
  const auto& s = curve.samples;
  std::size_t i = 0;
  while (i < s.size() && !(s[i].value > C)) ++i;
  if (i == s.size()) return curve.argsup;  // only the refined supremum exceeds C
  if (i == 0) return s[0].T;
  double lo = std::log(s[i - 1].T), hi = std::log(s[i].T);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double T = std::exp(mid);
    (T * semigroup_at_origin(kernel, T, datum) > C ? hi : lo) = mid;
  }
  return std::exp(hi);
}

}  // namespace

CriterionReport classify(const RadialProfile& datum, FracOrder alpha, const ClassifyOptions& opts) {
  const Dimension d = datum.dim();
  CriterionReport rep{criterion_constants(d, alpha, opts.threads), {}, {}, verdict::Indeterminate{}, {}};
  if (d.value() > Dimension::kPrecisionWarning) {
    rep.warnings.push_back("d > " + std::to_string(Dimension::kPrecisionWarning) +
                           ": Gamma-laden constants lose relative precision");
  }
  if (rep.constants.kernel_check && !rep.constants.kernel_check->passed()) {
    for (const auto& f : rep.constants.kernel_check->failures) rep.warnings.push_back("kernel check: " + f);
  }
  const MassProfile M = mass_from_density(datum);
  rep.datum.profile = datum.describe();
  rep.datum.concentration = radial_concentration(M, alpha);
  if (!M.infinite_mass()) rep.datum.total_mass = M.total_mass();
  if (stationary_exists(d, alpha)) {
    rep.datum.epsilon = singular_ratio_sup(datum, alpha) / s_alpha_d(d, alpha);
  }

  const double cr = M.characteristic_radius();
  const double scale = std::exp(alpha.value() * std::log(cr));
  double T_lo = opts.T_lo_factor * scale, T_hi = opts.T_hi_factor * scale;
  const double C = rep.constants.C;
  std::shared_ptr<const RadialKernel> kernel =
      alpha.is_classical() ? std::make_shared<const RadialKernel>(d, alpha)
                           : shared_kernel_table(d, alpha, opts.threads)->kernel;
  rep.curve = criterion_curve(M, alpha, T_lo, T_hi, opts.per_decade, opts.threads);
  if (!rep.curve.unimodal) rep.warnings.push_back("criterion curve has several local maxima on the T-grid");

  const bool two_dim_rule = d.value() == 2 && alpha.is_classical();
  if (two_dim_rule) {
    // Blowup iff the total mass exceeds 8 pi; the curve tends to M/(4 pi) as
    // T -> inf, so it eventually crosses C(2) = 2 exactly in that case.
    const double mass = rep.datum.total_mass.value_or(kInf);
    const double critical = 8.0 * kPi;
    if (mass > critical) {
      for (int ext = 0; ext < 8 && !(rep.curve.sup > C); ++ext) {
        T_hi *= 100.0;
        rep.curve = criterion_curve(M, alpha, T_lo, T_hi, opts.per_decade, opts.threads);
      }
      if (rep.curve.sup > C) {
        rep.verdict = verdict::BlowupBy{first_crossing(rep.curve, C, *kernel, M), rep.curve.sup - C};
      } else {
        rep.warnings.push_back("total mass exceeds 8 pi but the criterion curve did not cross C(2) within T <= " +
                               fmt(T_hi));
        rep.verdict = verdict::BlowupBy{kInf, rep.curve.sup - C};
      }
    } else if (mass < critical) {
      rep.verdict = verdict::GlobalBelowSingular{mass / critical};
    } else {
      rep.verdict = verdict::Indeterminate{C - rep.curve.sup, 0.0, "total mass equals 8 pi"};
    }
    return rep;
  }

  const bool blowup = rep.curve.sup > C;
  const bool global = rep.datum.epsilon && *rep.datum.epsilon < 1.0;
  if (blowup && global) {
    throw NumericalError("internal consistency: datum below the singular solution (epsilon=" +
                         fmt(*rep.datum.epsilon) + ") but criterion sup " + fmt(rep.curve.sup) + " > C=" + fmt(C));
  }
  if (blowup) {
    rep.verdict = verdict::BlowupBy{first_crossing(rep.curve, C, *kernel, M), rep.curve.sup - C};
    if (rep.curve.samples.front().value > C) {
      rep.warnings.push_back("criterion exceeds C already at the first scanned T; T* is an upper bound");
    }
  } else if (global) {
    rep.verdict = verdict::GlobalBelowSingular{*rep.datum.epsilon};
  } else {
    const double gap = rep.datum.epsilon ? *rep.datum.epsilon - 1.0 : kInf;
    std::string why = rep.datum.epsilon ? "criterion sup below C and datum not below the singular solution"
                                        : "criterion sup below C and no singular stationary solution for (d, alpha)";
    rep.verdict = verdict::Indeterminate{C - rep.curve.sup, gap, why};
  }
  if (rep.curve.samples.back().value >= rep.curve.sup * (1.0 - 1e-12) &&
      rep.curve.samples.back().value > rep.curve.samples[rep.curve.samples.size() - 2].value * (1.0 + 1e-9)) {
    rep.warnings.push_back("criterion curve still rising at the end of the T-range");
  }
  return rep;
}

double blowup_rate_bound(double W0, double C, double t) {
  if (!(W0 > 0.0) || !(C > 0.0) || !(t >= 0.0)) throw_domain("blowup_rate_bound needs W0 > 0, C > 0, t >= 0");
  const double inv = 1.0 / W0 - t / C;
  if (!(inv > 0.0)) {
    throw DomainError("t=" + fmt(t) + " is at or beyond the pole C/W0=" + fmt(C / W0) + " of the envelope");
  }
  return 1.0 / inv;
}

}  // namespace ksblow
