#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"
#include "ksblow/quadrature.hpp"
#include "ksblow/radial_core.hpp"

namespace ksblow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be a positive finite number (got " + fmt(v) + ")");
  }
}

void validate(Dimension d, const ProfileKind& kind, FracOrder alpha) {
  std::visit(
      overloaded{
          [&](const profile::Chandrasekhar& c) {
            require_positive(c.eta, "chandrasekhar eta");
            require_stationary_solution(d, alpha);
          },
          [&](const profile::TruncatedChandrasekhar& c) {
            require_positive(c.eta, "trunc_chandrasekhar eta");
            require_stationary_solution(d, alpha);
            if (!(c.r_in >= 0.0) || !(c.r_out > c.r_in)) {
              throw DomainError("trunc_chandrasekhar needs 0 <= rin < rout");
            }
          },
          [&](const profile::Gaussian& g) {
            require_positive(g.mass, "gauss mass");
            require_positive(g.width, "gauss width");
          },
          [&](const profile::ShellAtom& s) {
            require_positive(s.mass, "shell N");
            require_positive(s.radius, "shell R");
          },
          [&](const profile::ExactSolutionDatum& e) {
            require_positive(e.T, "exact_datum T");
            if (d.value() < 3) throw DomainError("exact_datum needs d >= 3");
            if (!alpha.is_classical()) throw DomainError("exact_datum is defined for alpha = 2 only");
          },
          [&](const profile::Tabulated& t) {
            if (t.r.size() != t.u.size() || t.r.size() < 2) {
              throw DomainError("table profile needs >= 2 rows of (r, u)");
            }
            if (!(t.r.front() > 0.0)) throw DomainError("table profile must start at r > 0");
            for (std::size_t i = 0; i < t.r.size(); ++i) {
              if (i > 0 && !(t.r[i] > t.r[i - 1])) {
                throw DomainError("table profile radii must be strictly increasing");
              }
              if (!(t.u[i] >= 0.0) || !std::isfinite(t.u[i])) {
                throw DomainError("table profile densities must be finite and >= 0");
              }
            }
          },
      },
      kind);
}

double chandrasekhar_coefficient(const RadialProfile& p) { return s_alpha_d(p.dim(), p.alpha()); }

double tabulated_density(const profile::Tabulated& t, double r) {
  if (r <= t.r.front()) return t.u.front();
  if (r > t.r.back()) return 0.0;
  const auto it = std::upper_bound(t.r.begin(), t.r.end(), r);
  const auto j = static_cast<std::size_t>(it - t.r.begin());
  if (j >= t.r.size()) return t.u.back();
  const double w = (r - t.r[j - 1]) / (t.r[j] - t.r[j - 1]);
  return (1.0 - w) * t.u[j - 1] + w * t.u[j];
}

// Cumulative mass on a mesh for bounded densities. Between mesh nodes the
// partial cell is integrated on demand so evaluation carries no
// interpolation error.
struct CumulativeMass {
  Dimension d;
  std::function<double(double)> density;
  std::vector<double> nodes;  // nodes[0] > 0
  std::vector<double> cum;    // mass inside nodes[i]
  double support_end;
  double total;

  double integrand(double rho) const {
    if (rho <= 0.0) return 0.0;
    return density(rho) * std::pow(rho, d.real() - 1.0);
  }

  double operator()(double r) const {
    const double sd = sigma_d(d);
    if (r >= support_end) return total;
    auto f = [this](double x) { return integrand(x); };
    if (r <= nodes.front()) return sd * quad::gauss_legendre(f, 0.0, r);
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    const auto j = static_cast<std::size_t>(it - nodes.begin()) - 1;
    return cum[j] + sd * quad::gauss_legendre(f, nodes[j], r);
  }
};

std::vector<double> refine_mesh(std::vector<double> pts, double max_ratio) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> out{pts.front()};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double a = out.back(), b = pts[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::log(b / a) / std::log(max_ratio))));
    for (int k = 1; k <= pieces; ++k) {
      out.push_back(a * std::pow(b / a, static_cast<double>(k) / pieces));
    }
    out.back() = b;
  }
  return out;
}

std::shared_ptr<CumulativeMass> build_cumulative(Dimension d, std::function<double(double)> density,
                                                 std::vector<double> mesh, double support_end) {
  auto c = std::make_shared<CumulativeMass>(
      CumulativeMass{d, std::move(density), refine_mesh(std::move(mesh), 1.05), {}, support_end, 0.0});
  const double sd = sigma_d(d);
  auto f = [&c](double x) { return c->integrand(x); };
  c->cum.resize(c->nodes.size());
  c->cum[0] = sd * quad::gauss_legendre(f, 0.0, c->nodes[0]);
  for (std::size_t i = 1; i < c->nodes.size(); ++i) {
    c->cum[i] = c->cum[i - 1] + sd * quad::gauss_legendre(f, c->nodes[i - 1], c->nodes[i]);
  }
  c->total = c->cum.back();
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

RadialProfile::RadialProfile(Dimension d, ProfileKind kind, FracOrder alpha)
    : d_(d), alpha_(alpha), kind_(std::make_shared<const ProfileKind>(std::move(kind))) {
  validate(d_, *kind_, alpha_);
}

bool RadialProfile::is_measure() const { return std::holds_alternative<profile::ShellAtom>(*kind_); }

bool RadialProfile::has_finite_mass() const {
  return std::visit(overloaded{
                        [](const profile::Chandrasekhar&) { return false; },
                        [](const profile::TruncatedChandrasekhar& c) { return std::isfinite(c.r_out); },
                        [](const profile::ExactSolutionDatum&) { return false; },
                        [](const auto&) { return true; },
                    },
                    *kind_);
}

bool RadialProfile::singular_at_origin() const {
  return std::visit(overloaded{
                        [](const profile::Chandrasekhar&) { return true; },
                        [](const profile::TruncatedChandrasekhar& c) { return c.r_in == 0.0; },
                        [](const auto&) { return false; },
                    },
                    *kind_);
}

double RadialProfile::characteristic_radius() const {
  return std::visit(
      overloaded{
          [](const profile::Chandrasekhar&) { return 1.0; },
          [](const profile::TruncatedChandrasekhar& c) {
            if (c.r_in > 0.0) return c.r_in;
            return std::isfinite(c.r_out) ? c.r_out : 1.0;
          },
          [](const profile::Gaussian& g) { return g.width; },
          [](const profile::ShellAtom& s) { return s.radius; },
          [this](const profile::ExactSolutionDatum& e) { return std::sqrt(2.0 * (d_.real() - 2.0) * e.T); },
          [](const profile::Tabulated& t) { return std::sqrt(t.r.front() * t.r.back()); },
      },
      *kind_);
}

std::vector<double> RadialProfile::breakpoints() const {
  return std::visit(overloaded{
                        [](const profile::TruncatedChandrasekhar& c) {
                          std::vector<double> b;
                          if (c.r_in > 0.0) b.push_back(c.r_in);
                          if (std::isfinite(c.r_out)) b.push_back(c.r_out);
                          return b;
                        },
                        [](const profile::ShellAtom& s) { return std::vector<double>{s.radius}; },
                        [](const profile::Tabulated& t) { return t.r; },
                        [](const auto&) { return std::vector<double>{}; },
                    },
                    *kind_);
}

double RadialProfile::support_end() const {
  return std::visit(overloaded{
                        [](const profile::TruncatedChandrasekhar& c) { return c.r_out; },
                        [](const profile::ShellAtom& s) { return s.radius; },
                        [](const profile::Tabulated& t) { return t.r.back(); },
                        [](const auto&) { return kInf; },
                    },
                    *kind_);
}

std::string RadialProfile::describe() const {
  return std::visit(
      overloaded{
          [](const profile::Chandrasekhar& c) { return "chandrasekhar(eta=" + fmt(c.eta) + ")"; },
          [](const profile::TruncatedChandrasekhar& c) {
            return "trunc_chandrasekhar(eta=" + fmt(c.eta) + ",rin=" + fmt(c.r_in) +
                   ",rout=" + fmt(c.r_out) + ")";
          },
          [](const profile::Gaussian& g) {
            return "gauss(mass=" + fmt(g.mass) + ",width=" + fmt(g.width) + ")";
          },
          [](const profile::ShellAtom& s) { return "shell(N=" + fmt(s.mass) + ",R=" + fmt(s.radius) + ")"; },
          [](const profile::ExactSolutionDatum& e) { return "exact_datum(T=" + fmt(e.T) + ")"; },
          [](const profile::Tabulated& t) {
            return "table(n=" + std::to_string(t.r.size()) + ",rmin=" + fmt(t.r.front()) +
                   ",rmax=" + fmt(t.r.back()) + ")";
          },
      },
      *kind_);
}

RadialProfile make_chandrasekhar(Dimension d, double eta, FracOrder alpha) {
  return RadialProfile(d, profile::Chandrasekhar{eta}, alpha);
}
RadialProfile make_truncated_chandrasekhar(Dimension d, double eta, double r_in, double r_out,
                                           FracOrder alpha) {
  return RadialProfile(d, profile::TruncatedChandrasekhar{eta, r_in, r_out}, alpha);
}
RadialProfile make_gaussian(Dimension d, double mass, double width) {
  return RadialProfile(d, profile::Gaussian{mass, width});
}
RadialProfile make_shell(Dimension d, double mass, double radius) {
  return RadialProfile(d, profile::ShellAtom{mass, radius});
}
RadialProfile make_exact_datum(Dimension d, double T) {
  return RadialProfile(d, profile::ExactSolutionDatum{T});
}
RadialProfile make_tabulated(Dimension d, std::vector<double> r, std::vector<double> u) {
  return RadialProfile(d, profile::Tabulated{std::move(r), std::move(u)});
}

RadialProfile mollify_shell(const RadialProfile& shell, double width) {
  const auto* s = std::get_if<profile::ShellAtom>(&shell.kind());
  if (s == nullptr) throw DomainError("mollify_shell expects a shell profile");
  require_positive(width, "mollification width");
  if (!(width < 2.0 * s->radius)) throw DomainError("mollification width must be < 2R");
  constexpr int n = 65;
  std::vector<double> r(n), u(n);
  const double lo = s->radius - 0.5 * width;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / (n - 1);
    r[i] = lo + width * x;
    const double c = std::sin(std::numbers::pi * x);
    u[i] = c * c;
  }
  if (r.front() <= 0.0) r.front() = 1e-3 * width;
  u.front() = 0.0;
  u.back() = 0.0;
  RadialProfile unit = make_tabulated(shell.dim(), r, u);
  const double m = mass_from_density(unit).total_mass();
  for (double& v : u) v *= s->mass / m;
  return make_tabulated(shell.dim(), std::move(r), std::move(u));
}

RadialProfile rescaled(const RadialProfile& p, double lambda, FracOrder alpha) {
  require_positive(lambda, "scaling factor lambda");
  const Dimension d = p.dim();
  const double a = alpha.value();
  ProfileKind k = std::visit(
      overloaded{
          [&](const profile::Chandrasekhar& c) -> ProfileKind {
            return profile::Chandrasekhar{c.eta * std::pow(lambda, a - p.alpha().value())};
          },
          [&](const profile::TruncatedChandrasekhar& c) -> ProfileKind {
            return profile::TruncatedChandrasekhar{c.eta * std::pow(lambda, a - p.alpha().value()),
                                                   c.r_in / lambda, c.r_out / lambda};
          },
          [&](const profile::Gaussian& g) -> ProfileKind {
            return profile::Gaussian{g.mass * std::pow(lambda, a - d.real()), g.width / lambda};
          },
          [&](const profile::ShellAtom& s) -> ProfileKind {
            return profile::ShellAtom{s.mass * std::pow(lambda, a - d.real()), s.radius / lambda};
          },
          [&](const profile::ExactSolutionDatum& e) -> ProfileKind {
            if (!alpha.is_classical()) {
              throw DomainError("exact_datum can only be rescaled with alpha = 2");
            }
            return profile::ExactSolutionDatum{e.T / (lambda * lambda)};
          },
          [&](const profile::Tabulated& t) -> ProfileKind {
            profile::Tabulated out = t;
            const double f = std::pow(lambda, a);
            for (double& r : out.r) r /= lambda;
            for (double& u : out.u) u *= f;
            return out;
          },
      },
      p.kind());
  return RadialProfile(d, std::move(k), p.alpha());
}

double profile_density(const RadialProfile& p, double r) {
  if (!(r >= 0.0)) throw DomainError("profile_density: r must be >= 0");
  const Dimension d = p.dim();
  return std::visit(
      overloaded{
          [&](const profile::Chandrasekhar& c) {
            if (r == 0.0) throw DomainError("chandrasekhar profile is singular at r = 0");
            return c.eta * chandrasekhar_coefficient(p) * std::pow(r, -p.alpha().value());
          },
          [&](const profile::TruncatedChandrasekhar& c) {
            if (r < c.r_in || r > c.r_out) return 0.0;
            if (r == 0.0) throw DomainError("trunc_chandrasekhar with rin = 0 is singular at r = 0");
            return c.eta * chandrasekhar_coefficient(p) * std::pow(r, -p.alpha().value());
          },
          [&](const profile::Gaussian& g) {
            const double x = r / g.width;
            return std::exp(std::log(g.mass) - 0.5 * d.real() * std::log(std::numbers::pi) -
                            d.real() * std::log(g.width) - x * x);
          },
          [&](const profile::ShellAtom&) -> double {
            throw DomainError("shell atoms are measures without a pointwise density; mollify first");
          },
          [&](const profile::ExactSolutionDatum& e) {
            // Derivative of the closed-form mass 4 sigma r^d / (r^2 + 2(d-2)T).
            const double dm2 = d.real() - 2.0;
            const double den = r * r + 2.0 * dm2 * e.T;
            return 4.0 * dm2 * (r * r + 2.0 * d.real() * e.T) / (den * den);
          },
          [&](const profile::Tabulated& t) { return tabulated_density(t, r); },
      },
      p.kind());
}

// ---------------------------------------------------------------------------

MassProfile::MassProfile(Dimension d, Fn m, std::optional<double> total_mass,
                         double characteristic_radius, std::vector<double> breakpoints,
                         std::string form)
    : d_(d),
      m_(std::make_shared<const Fn>(std::move(m))),
      total_(total_mass),
      char_radius_(characteristic_radius),
      breakpoints_(std::move(breakpoints)),
      form_(std::move(form)) {}

MassProfile MassProfile::zero(Dimension d) {
  return MassProfile(d, [](double) { return 0.0; }, 0.0, 1.0, {}, "zero");
}

double MassProfile::total_mass() const {
  if (!total_) throw DomainError("operation requires a finite-mass datum (" + form_ + " has infinite mass)");
  return *total_;
}

MassProfile MassProfile::scaled(double c) const {
  if (!(c >= 0.0)) throw DomainError("MassProfile::scaled needs c >= 0");
  auto inner = m_;
  std::optional<double> t;
  if (total_) t = c * *total_;
  return MassProfile(
      d_, [inner, c](double r) { return c * (*inner)(r); }, t, char_radius_, breakpoints_, form_);
}

MassProfile mass_from_density(const RadialProfile& p) {
  const Dimension d = p.dim();
  const double sd = sigma_d(d);
  const double cr = p.characteristic_radius();
  return std::visit(
      overloaded{
          [&](const profile::Chandrasekhar& c) {
            const double a = p.alpha().value();
            if (a >= d.real()) throw DivergenceError("r^-alpha is not integrable at 0 when alpha >= d");
            const double k = c.eta * chandrasekhar_coefficient(p) * sd / (d.real() - a);
            const double pw = d.real() - a;
            return MassProfile(
                d, [k, pw](double r) { return k * std::pow(r, pw); }, std::nullopt, cr, {},
                "chandrasekhar");
          },
          [&](const profile::TruncatedChandrasekhar& c) {
            const double a = p.alpha().value();
            if (c.r_in == 0.0 && a >= d.real()) {
              throw DivergenceError("r^-alpha is not integrable at 0 when alpha >= d");
            }
            const double k = c.eta * chandrasekhar_coefficient(p) * sd / (d.real() - a);
            const double pw = d.real() - a;
            const double rin = c.r_in, rout = c.r_out;
            const double base = k * std::pow(rin, pw);
            auto m = [k, pw, rin, rout, base](double r) {
              if (r <= rin) return 0.0;
              return k * std::pow(std::min(r, rout), pw) - base;
            };
            std::optional<double> total;
            if (std::isfinite(rout)) total = m(rout);
            return MassProfile(d, m, total, cr, p.breakpoints(), "trunc_chandrasekhar");
          },
          [&](const profile::Gaussian& g) {
            const double hi = g.width * (std::sqrt(0.5 * d.real()) + 12.0);
            auto cum = build_cumulative(
                d, [p](double r) { return profile_density(p, r); }, {1e-3 * g.width, hi}, hi);
            return MassProfile(
                d, [cum](double r) { return (*cum)(r); }, g.mass, cr, {}, "quadrature");
          },
          [&](const profile::ShellAtom& s) {
            const double n = s.mass, r0 = s.radius;
            return MassProfile(
                d, [n, r0](double r) { return r >= r0 ? n : 0.0; }, n, cr, {r0}, "shell");
          },
          [&](const profile::ExactSolutionDatum& e) {
            const double c = 2.0 * (d.real() - 2.0) * e.T;
            const int dd = d.value();
            return MassProfile(
                d, [sd, c, dd](double r) { return 4.0 * sd * std::pow(r, dd) / (r * r + c); },
                std::nullopt, cr, {}, "exact_datum");
          },
          [&](const profile::Tabulated& t) {
            auto cum = build_cumulative(
                d, [p](double r) { return profile_density(p, r); }, t.r, t.r.back());
            const double total = cum->total;
            return MassProfile(
                d, [cum](double r) { return (*cum)(r); }, total, cr, t.r, "table");
          },
      },
      p.kind());
}

}  // namespace ksblow
