#pragma once

// Radial geometry on R^d: dimension and diffusion-order types, unit-sphere
// area, the singular stationary densities, radial initial-data profiles and
// their mass distribution functions, concentration functionals, and the
// potential-gradient identity for radial densities.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ksblow {

/// Space dimension d >= 2 (d = 1 is not covered by the radial theory).
class Dimension {
 public:
  static constexpr int kMax = 200;
  static constexpr int kPrecisionWarning = 60;

  explicit Dimension(int d);
  [[nodiscard]] int value() const { return d_; }
  [[nodiscard]] double real() const { return static_cast<double>(d_); }
  friend bool operator==(Dimension, Dimension) = default;

 private:
  int d_;
};

/// Order of the diffusion operator (-Laplacian)^{alpha/2}, 0 < alpha <= 2.
class FracOrder {
 public:
  explicit FracOrder(double alpha);
  static FracOrder classical() { return FracOrder(2.0); }
  [[nodiscard]] double value() const { return alpha_; }
  [[nodiscard]] bool is_classical() const { return alpha_ == 2.0; }
  friend bool operator==(FracOrder, FracOrder) = default;

 private:
  double alpha_;
};

/// Area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double sigma_d(Dimension d);
double log_sigma_d(Dimension d);

/// Coefficient of the singular stationary solution s(alpha,d)/|x|^alpha.
/// Requires 2 alpha < d for alpha < 2; alpha = 2 is admitted for d >= 3 and
/// gives 2(d-2).
double s_alpha_d(Dimension d, FracOrder alpha);

/// Throws DomainError unless the stationary singular solution exists for (d, alpha).
void require_stationary_solution(Dimension d, FracOrder alpha);

// ---------------------------------------------------------------------------
// Profiles

namespace profile {

/// eta * s(alpha,d) / r^alpha on all of R^d (infinite mass, singular at 0).
struct Chandrasekhar {
  double eta;
};
/// eta * s(alpha,d) / r^alpha restricted to r_in <= r <= r_out (r_out may be inf).
struct TruncatedChandrasekhar {
  double eta;
  double r_in;
  double r_out;
};
/// mass / (pi^{d/2} width^d) * exp(-r^2/width^2).
struct Gaussian {
  double mass;
  double width;
};
/// Uniform measure of total mass `mass` on the sphere of radius `radius`.
struct ShellAtom {
  double mass;
  double radius;
};
/// Initial density of the explicit self-similar blowing-up solution with
/// blowup time T (classical diffusion, d >= 3).
struct ExactSolutionDatum {
  double T;
};
/// Piecewise-linear density through (r_i, u_i); constant u_0 on [0, r_0],
/// zero beyond the last node.
struct Tabulated {
  std::vector<double> r;
  std::vector<double> u;
};

}  // namespace profile

using ProfileKind = std::variant<profile::Chandrasekhar, profile::TruncatedChandrasekhar,
                                 profile::Gaussian, profile::ShellAtom,
                                 profile::ExactSolutionDatum, profile::Tabulated>;

/// A nonnegative radial initial datum in dimension d. The diffusion order is
/// attached because the Chandrasekhar kinds depend on it.
class RadialProfile {
 public:
  RadialProfile(Dimension d, ProfileKind kind, FracOrder alpha = FracOrder::classical());

  [[nodiscard]] Dimension dim() const { return d_; }
  [[nodiscard]] FracOrder alpha() const { return alpha_; }
  [[nodiscard]] const ProfileKind& kind() const { return *kind_; }

  /// True for shell atoms: no pointwise density exists.
  [[nodiscard]] bool is_measure() const;
  [[nodiscard]] bool has_finite_mass() const;
  /// Density unbounded at the origin.
  [[nodiscard]] bool singular_at_origin() const;
  /// Natural length scale used to place radius and time grids.
  [[nodiscard]] double characteristic_radius() const;
  /// Radii where the density or its mass function is not smooth.
  [[nodiscard]] std::vector<double> breakpoints() const;
  /// Outer edge of the support (inf for unbounded support).
  [[nodiscard]] double support_end() const;
  /// Canonical profile-grammar rendering, e.g. "shell(N=30,R=1)".
  [[nodiscard]] std::string describe() const;

 private:
  Dimension d_;
  FracOrder alpha_;
  std::shared_ptr<const ProfileKind> kind_;
};

RadialProfile make_chandrasekhar(Dimension d, double eta, FracOrder alpha = FracOrder::classical());
RadialProfile make_truncated_chandrasekhar(Dimension d, double eta, double r_in, double r_out,
                                           FracOrder alpha = FracOrder::classical());
RadialProfile make_gaussian(Dimension d, double mass, double width);
RadialProfile make_shell(Dimension d, double mass, double radius);
RadialProfile make_exact_datum(Dimension d, double T);
RadialProfile make_tabulated(Dimension d, std::vector<double> r, std::vector<double> u);

/// Smooths a shell atom into a bounded bump of the given radial width
/// carrying the same mass.
RadialProfile mollify_shell(const RadialProfile& shell, double width);

/// The datum u_lambda(r) = lambda^alpha u(lambda r), which the system maps to
/// the solution rescaled in the same way.
RadialProfile rescaled(const RadialProfile& p, double lambda, FracOrder alpha);

/// Pointwise density. Throws DomainError for shell atoms and for the
/// untruncated Chandrasekhar profile at r = 0.
double profile_density(const RadialProfile& p, double r);

// ---------------------------------------------------------------------------
// Mass distribution M(R) = mass of the ball of radius R.

class MassProfile {
 public:
  using Fn = std::function<double(double)>;

  /// `total_mass` empty means infinite mass.
  MassProfile(Dimension d, Fn m, std::optional<double> total_mass, double characteristic_radius,
              std::vector<double> breakpoints, std::string form);

  static MassProfile zero(Dimension d);

  double operator()(double r) const { return r <= 0.0 ? 0.0 : (*m_)(r); }

  [[nodiscard]] Dimension dim() const { return d_; }
  [[nodiscard]] bool infinite_mass() const { return !total_.has_value(); }
  /// Total mass; throws DomainError for infinite-mass profiles.
  [[nodiscard]] double total_mass() const;
  [[nodiscard]] double characteristic_radius() const { return char_radius_; }
  [[nodiscard]] std::span<const double> breakpoints() const { return breakpoints_; }
  /// Closed-form tag or "quadrature" / "table".
  [[nodiscard]] const std::string& form() const { return form_; }

  /// c * M.
  [[nodiscard]] MassProfile scaled(double c) const;

 private:
  Dimension d_;
  std::shared_ptr<const Fn> m_;
  std::optional<double> total_;
  double char_radius_;
  std::vector<double> breakpoints_;
  std::string form_;
};

/// M(r) = sigma_d \int_0^r u(rho) rho^{d-1} d rho. Closed forms for the
/// Chandrasekhar kinds, shells and the exact-solution datum; composite
/// Gauss-Legendre on a geometric mesh otherwise. Throws DivergenceError for a
/// non-integrable singularity (alpha >= d).
MassProfile mass_from_density(const RadialProfile& p);

// ---------------------------------------------------------------------------
// Concentrations

struct ConcentrationValue {
  double value = 0.0;
  /// Radius achieving the supremum; +inf when it is approached as R -> inf.
  double attained_radius = 0.0;
  /// The supremum is +inf (datum not in the critical Morrey class).
  bool infinite = false;
};

/// sup_{R>0} R^{alpha-d} M(R).
ConcentrationValue radial_concentration(const MassProfile& m, FracOrder alpha);

struct MorreyEstimate {
  double value = 0.0;
  double center = 0.0;  // distance of the maximizing ball center from the origin
  double radius = 0.0;
  int centers_sampled = 0;
};

/// Lower estimate of the Morrey norm sup_{x,R} R^{alpha-d} \int_{|y-x|<R} u:
/// maximum over `center_samples` nested centers on a ray (the first is the
/// origin) and a geometric radius grid.
MorreyEstimate morrey_estimate(const RadialProfile& p, FracOrder alpha, int center_samples);

/// Fraction of the sphere |y| = rho lying inside the ball |y - x| < R with |x| = a.
double sphere_fraction_in_ball(Dimension d, double rho, double a, double R);

/// grad v(x) . x = -sigma_d^{-1} r^{2-d} M(r) for the Newtonian potential of a
/// radial density.
double potential_gradient_radial(const MassProfile& m, double r);

}  // namespace ksblow
