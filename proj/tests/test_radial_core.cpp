#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "ksblow/errors.hpp"
#include "ksblow/radial_core.hpp"

using namespace ksblow;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<RadialProfile> sample_profiles(Dimension d) {
  std::vector<RadialProfile> ps;
  ps.push_back(make_chandrasekhar(d, 1.3));
  ps.push_back(make_truncated_chandrasekhar(d, 0.9, 0.5, 20.0));
  ps.push_back(make_gaussian(d, 7.0, 1.5));
  ps.push_back(make_shell(d, 3.0, 2.0));
  if (d.value() >= 3) ps.push_back(make_exact_datum(d, 0.7));
  ps.push_back(make_tabulated(d, {0.5, 1.0, 2.0, 4.0}, {3.0, 2.0, 1.0, 0.0}));
  return ps;
}
}  // namespace

TEST_CASE("unit sphere area") {
  CHECK(sigma_d(Dimension(2)) == Approx(2 * kPi).epsilon(1e-14));
  CHECK(sigma_d(Dimension(3)) == Approx(4 * kPi).epsilon(1e-14));
  CHECK(sigma_d(Dimension(4)) == Approx(2 * kPi * kPi).epsilon(1e-14));
  for (int d = 2; d <= 30; ++d) {
    const double direct = 2 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
    CHECK(rel(sigma_d(Dimension(d)), direct) < 1e-12);
  }
}

TEST_CASE("dimension and order validation") {
  CHECK_THROWS_AS(Dimension(1), DomainError);
  CHECK_THROWS_AS(Dimension(201), DomainError);
  CHECK_THROWS_AS(FracOrder(0.0), DomainError);
  CHECK_THROWS_AS(FracOrder(2.1), DomainError);
  CHECK_NOTHROW(FracOrder(2.0));
}

TEST_CASE("stationary coefficient") {
  CHECK(s_alpha_d(Dimension(3), FracOrder(2.0)) == Approx(2.0).epsilon(1e-13));
  CHECK(s_alpha_d(Dimension(7), FracOrder(2.0)) == Approx(10.0).epsilon(1e-13));
  CHECK(s_alpha_d(Dimension(3), FracOrder(1.0)) == Approx(4.0 / kPi).epsilon(1e-13));
  // Continuity of the Gamma form into the classical value.
  CHECK(rel(s_alpha_d(Dimension(5), FracOrder(1.999999)), 6.0) < 1e-5);
  const Dimension d10(10);
  // Large-d behaviour 2^{alpha/2} Gamma(alpha)/Gamma(alpha/2) d^{alpha/2}.
  const double asym = std::sqrt(2.0) / std::sqrt(kPi) * std::sqrt(10.0);
  CHECK(rel(s_alpha_d(d10, FracOrder(1.0)), asym) < 0.25);
  CHECK_THROWS_AS(s_alpha_d(Dimension(3), FracOrder(1.5)), DomainError);
  CHECK_THROWS_AS(s_alpha_d(Dimension(2), FracOrder(2.0)), DomainError);
}

TEST_CASE("densities") {
  const Dimension d3(3);
  CHECK(profile_density(make_chandrasekhar(d3, 1.0), 1.0) == Approx(2.0));
  // 2d / ((d-2) T) at the origin, the derivative of the closed-form mass.
  CHECK(profile_density(make_exact_datum(d3, 1.0), 0.0) == Approx(6.0));
  CHECK(profile_density(make_gaussian(d3, 1.0, 1.0), 40.0) == 0.0);
  CHECK_THROWS_AS(profile_density(make_shell(d3, 1.0, 1.0), 1.0), DomainError);
  CHECK_THROWS_AS(profile_density(make_chandrasekhar(d3, 1.0), 0.0), DomainError);
  const auto frac = make_chandrasekhar(Dimension(5), 1.0, FracOrder(1.0));
  CHECK(profile_density(frac, 2.0) == Approx(s_alpha_d(Dimension(5), FracOrder(1.0)) / 2.0));
}

TEST_CASE("mass functions against closed forms and oracles") {
  for (int di : {2, 3, 5, 10}) {
    const Dimension d(di);
    const double sig = sigma_d(d);
    if (di >= 3) {
      const auto mc = mass_from_density(make_chandrasekhar(d, 1.0));
      for (double r : {0.1, 1.0, 7.0}) CHECK(rel(mc(r), 2 * sig * std::pow(r, di - 2)) < 1e-13);
      const auto me = mass_from_density(make_exact_datum(d, 1.0));
      for (double r : {0.1, 1.0, 7.0}) {
        CHECK(rel(me(r), 4 * sig * std::pow(r, di) / (r * r + 2 * (di - 2))) < 1e-12);
      }
    }
    // Gaussian: regularized incomplete gamma oracle.
    const auto mg = mass_from_density(make_gaussian(d, 5.0, 1.3));
    for (double r : {0.05, 0.7, 1.3, 3.0, 9.0}) {
      const double oracle = 5.0 * boost::math::gamma_p(di / 2.0, r * r / (1.3 * 1.3));
      CHECK(rel(mg(r), oracle) < 1e-10);
    }
    CHECK(mg.total_mass() == Approx(5.0));
    const auto ms = mass_from_density(make_shell(d, 4.0, 1.0));
    CHECK(ms(0.999) == 0.0);
    CHECK(ms(1.0) == 4.0);
    CHECK(ms(5.0) == 4.0);
  }
  // Tabulated: piecewise-linear density integrated by hand for d = 2.
  const auto mt = mass_from_density(make_tabulated(Dimension(2), {1.0, 2.0}, {1.0, 0.0}));
  // u = 1 on [0,1], 2 - r on [1,2]: 2 pi (1/2 + [r^2 - r^3/3]_1^2) = 2 pi (1/2 + 2/3)
  CHECK(rel(mt.total_mass(), 2 * kPi * (0.5 + 2.0 / 3.0)) < 1e-12);
  CHECK(mass_from_density(make_chandrasekhar(Dimension(3), 1.0)).infinite_mass());
  CHECK_THROWS_AS((void)mass_from_density(make_chandrasekhar(Dimension(3), 1.0)).total_mass(), DomainError);
}

TEST_CASE("density recovered from the mass function") {
  const Dimension d(4);
  for (const auto& p : {make_gaussian(d, 3.0, 2.0), make_exact_datum(d, 0.5),
                        make_truncated_chandrasekhar(d, 1.0, 0.01, 100.0)}) {
    const auto m = mass_from_density(p);
    for (double r = 0.1; r <= 10.0; r *= 1.37) {
      const double h = 1e-3 * r;
      const double deriv = (8 * (m(r + h) - m(r - h)) - (m(r + 2 * h) - m(r - 2 * h))) / (12 * h);
      const double u = deriv / (sigma_d(d) * std::pow(r, 3));
      CHECK(rel(u, profile_density(p, r)) < 1e-6);
    }
  }
}

TEST_CASE("radial concentration") {
  for (int di : {3, 4, 8}) {
    const Dimension d(di);
    const auto c = radial_concentration(mass_from_density(make_chandrasekhar(d, 1.0)), FracOrder(2.0));
    CHECK(rel(c.value, 2 * sigma_d(d)) < 1e-12);
    CHECK_FALSE(c.infinite);
    const auto e = radial_concentration(mass_from_density(make_exact_datum(d, 1.0)), FracOrder(2.0));
    CHECK(rel(e.value, 4 * sigma_d(d)) < 1e-4);
    CHECK(std::isinf(e.attained_radius));
    const auto s = radial_concentration(mass_from_density(make_shell(d, 2.5, 1.0)), FracOrder(2.0));
    CHECK(s.value == Approx(2.5).epsilon(1e-12));
    CHECK(s.attained_radius == Approx(1.0).epsilon(1e-9));
  }
  // Mass beyond the critical growth: R^{alpha-d} M(R) unbounded.
  const auto big = radial_concentration(mass_from_density(make_chandrasekhar(Dimension(3), 1.0, FracOrder(1.0))),
                                        FracOrder(2.0));
  CHECK(big.infinite);
}

TEST_CASE("concentration is invariant under critical rescaling") {
  std::mt19937_64 rng(20241017);
  std::uniform_real_distribution<double> loglam(-3.0, 3.0);
  for (int di : {3, 5}) {
    const Dimension d(di);
    for (const auto& p : sample_profiles(d)) {
      const auto c0 = radial_concentration(mass_from_density(p), FracOrder(2.0));
      for (int k = 0; k < 4; ++k) {
        const double lam = std::pow(10.0, loglam(rng));
        const auto q = rescaled(p, lam, FracOrder(2.0));
        const auto c1 = radial_concentration(mass_from_density(q), FracOrder(2.0));
        INFO(p.describe(), " lambda=", lam);
        CHECK(c1.infinite == c0.infinite);
        if (!c0.infinite) CHECK(rel(c1.value, c0.value) < 1e-9);
      }
    }
  }
}

TEST_CASE("morrey estimate dominates the centered concentration") {
  const Dimension d(3);
  for (const auto& p : sample_profiles(d)) {
    const auto c = radial_concentration(mass_from_density(p), FracOrder(2.0));
    const auto m = morrey_estimate(p, FracOrder(2.0), 6);
    INFO(p.describe());
    CHECK(m.value >= c.value);
  }
  const auto g = make_gaussian(d, 2.0, 1.0);
  double prev = 0.0;
  for (int n : {1, 2, 4, 8, 16}) {
    const double v = morrey_estimate(g, FracOrder(2.0), n).value;
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(morrey_estimate(make_shell(d, 3.0, 1.0), FracOrder(2.0), 3).value >= 3.0);
}

TEST_CASE("sphere fraction in a ball") {
  const Dimension d(3);
  CHECK(sphere_fraction_in_ball(d, 1.0, 0.0, 2.0) == 1.0);
  CHECK(sphere_fraction_in_ball(d, 3.0, 0.0, 2.0) == 0.0);
  // d = 3: the cap fraction is (R^2 - (rho - a)^2) / (4 a rho) (Archimedes).
  const double rho = 1.0, a = 1.0, R = 1.0;
  CHECK(sphere_fraction_in_ball(d, rho, a, R) == Approx((R * R - 0.0) / (4 * a * rho)).epsilon(1e-12));
}

TEST_CASE("potential gradient") {
  const Dimension d(3);
  const auto mc = mass_from_density(make_chandrasekhar(d, 1.0));
  for (double r : {0.1, 1.0, 10.0}) CHECK(potential_gradient_radial(mc, r) == Approx(-2.0).epsilon(1e-12));
  const auto ms = mass_from_density(make_shell(d, 5.0, 1.0));
  CHECK(potential_gradient_radial(ms, 0.5) == 0.0);
  CHECK(potential_gradient_radial(ms, 2.0) == Approx(-5.0 / (2.0 * sigma_d(d))).epsilon(1e-12));
  const auto mg = mass_from_density(make_gaussian(d, 1.0, 1.0));
  const auto mg2 = mass_from_density(make_gaussian(d, 2.0, 1.0));
  for (double r = 0.01; r < 100; r *= 2) {
    CHECK(potential_gradient_radial(mg, r) <= 0.0);
    CHECK(potential_gradient_radial(mg2, r) <= potential_gradient_radial(mg, r));
  }
}
