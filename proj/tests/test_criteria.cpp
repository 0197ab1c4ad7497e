#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ksblow/criteria.hpp"
#include "ksblow/errors.hpp"

using namespace ksblow;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Brute-force midpoint rule for C(d) on [0, 50].
double C_midpoint(int d, int n) {
  const double h = 50.0 / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    acc += std::pow(r, d + 1) / (2.0 * (d - 2) + 4.0 * r * r) * std::exp(-r * r);
  }
  return 16.0 / std::tgamma(d / 2.0) * acc * h;
}
}  // namespace

TEST_CASE("blowup constant C(d)") {
  CHECK(std::abs(constant_C(Dimension(2)) - 2.0) < 1e-10);
  for (int d = 3; d <= 30; ++d) {
    const double c = constant_C(Dimension(d));
    CHECK(c >= 1.0);
    CHECK(c < 2.0);
  }
  const double c3 = constant_C(Dimension(3));
  CHECK(std::abs(c3 - C_midpoint(3, 1000000)) < 1e-8);
  CHECK(std::abs(c3 - 1.3113590848375969) < 1e-12);
  CHECK(std::abs(constant_C(Dimension(10)) - 1.0585045417765689) < 1e-12);
  for (int d = 3; d < 30; ++d) CHECK(constant_C(Dimension(d + 1)) < constant_C(Dimension(d)));
}

TEST_CASE("C_alpha over a Gaussian table reproduces C(d)") {
  for (int d : {3, 5, 8}) {
    const auto t = kernel_R(Dimension(d), FracOrder(2.0));
    CHECK(rel(constant_C_alpha(t), constant_C(Dimension(d))) < 1e-9);
  }
}

TEST_CASE("fractional constants are ordered") {
  for (double a : {0.5, 1.0, 1.5}) {
    for (int d : {4, 6, 10}) {
      const auto c = criterion_constants(Dimension(d), FracOrder(a));
      INFO("alpha=", a, " d=", d);
      REQUIRE(c.K.has_value());
      REQUIRE(c.upper_bound.has_value());
      CHECK(c.K->value <= c.C);
      CHECK(c.C <= *c.upper_bound);
      CHECK(std::abs(c.K->residual) < 1e-6);
      CHECK(c.kernel_check->passed());
    }
  }
  const double c195 = criterion_constants(Dimension(5), FracOrder(1.95)).C;
  CHECK(rel(c195, constant_C(Dimension(5))) < 0.15);
}

TEST_CASE("semigroup constant K") {
  CHECK(constant_K(Dimension(3), FracOrder(2.0)).value == 1.0);
  const auto k = constant_K(Dimension(3), FracOrder(1.0));
  CHECK(std::abs(k.value - k.closed_form) < 1e-6 * k.closed_form);
  CHECK(k.closed_form == Approx(8.0 / (kPi * kPi)).epsilon(1e-13));
  CHECK_THROWS_AS(constant_K(Dimension(3), FracOrder(1.5)), DivergenceError);
  CHECK_THROWS_AS(constant_K(Dimension(2), FracOrder(2.0)), DivergenceError);
  // |x|^{-2} alone: t e^{t Laplacian} |x|^{-2} (0) = 1/(2(d-2)).
  for (int d : {3, 6}) {
    const Dimension dd(d);
    const auto m = mass_from_density(make_chandrasekhar(dd, 1.0 / (2.0 * (d - 2))));
    const RadialKernel g(dd, FracOrder(2.0));
    CHECK(0.7 * semigroup_at_origin(g, 0.7, m) == Approx(1.0 / (2.0 * (d - 2))).epsilon(1e-10));
  }
}

TEST_CASE("shell constant L") {
  const double l3 = 0.25 * std::pow(kPi, -1.5) * std::sqrt(0.5) * std::exp(-0.5);
  CHECK(constant_L(Dimension(3), FracOrder(2.0)) == Approx(l3).epsilon(1e-13));
  const Dimension d100(100);
  CHECK(std::abs(constant_L(d100, FracOrder(2.0)) * 2 * sigma_d(d100) * std::sqrt(98 * kPi) - 1.0) < 0.05);
  // The shell criterion curve peaks at L with maximizer 1/(2(d-2)).
  for (int d : {3, 5}) {
    const Dimension dd(d);
    const auto shell = mass_from_density(make_shell(dd, 1.0, 1.0));
    const auto curve = criterion_curve(shell, FracOrder(2.0), 1e-4, 1e4);
    CHECK(rel(curve.sup, constant_L(dd, FracOrder(2.0))) < 1e-9);
    CHECK(rel(curve.argsup, 1.0 / (2.0 * (d - 2))) < 1e-4);
  }
  // Fractional: table maximization against the semigroup route.
  for (double a : {1.0, 1.5}) {
    const Dimension d(5);
    const auto shell = mass_from_density(make_shell(d, 1.0, 1.0));
    const auto curve = criterion_curve(shell, FracOrder(a), 1e-3, 1e3);
    CHECK(rel(curve.sup, constant_L(d, FracOrder(a))) < 1e-6);
  }
}

TEST_CASE("large-d orders") {
  double prev = 10.0;
  for (int d : {20, 50, 100}) {
    const Dimension dd(d);
    const double ratio = threshold_N(dd, FracOrder(2.0)) / (4 * sigma_d(dd) * std::sqrt(kPi * (d - 2)));
    CHECK(ratio <= 1.1);
    CHECK(ratio < prev);
    prev = ratio;
  }
  // alpha = 1.5: L sigma_d d^{alpha/2} and N / (sigma_d d^{alpha/2}) stay in a bounded band.
  std::vector<double> lband, nband;
  for (int d : {6, 10, 20}) {
    const Dimension dd(d);
    const double scale = sigma_d(dd) * std::pow(d, 0.75);
    lband.push_back(constant_L(dd, FracOrder(1.5)) * scale);
    nband.push_back(threshold_N(dd, FracOrder(1.5)) / scale);
  }
  for (const auto* band : {&lband, &nband}) {
    const auto [lo, hi] = std::minmax_element(band->begin(), band->end());
    CHECK(*hi / *lo < 3.0);
  }
}

TEST_CASE("criterion curve") {
  const Dimension d(3);
  const auto uc = mass_from_density(make_chandrasekhar(d, 1.7));
  const auto curve = criterion_curve(uc, FracOrder(2.0), 1e-2, 1e2, 8);
  for (const auto& s : curve.samples) CHECK(s.value == Approx(1.7).epsilon(1e-9));
  const auto zero = criterion_curve(MassProfile::zero(d), FracOrder(2.0), 1e-2, 1e2, 8);
  for (const auto& s : zero.samples) CHECK(s.value == 0.0);
}

TEST_CASE("classifier examples") {
  const Dimension d3(3);
  const auto r1 = classify(make_chandrasekhar(d3, 2.5), FracOrder(2.0));
  CHECK(std::holds_alternative<verdict::BlowupBy>(r1.verdict));
  const auto r2 = classify(make_chandrasekhar(d3, 0.9), FracOrder(2.0));
  REQUIRE(std::holds_alternative<verdict::GlobalBelowSingular>(r2.verdict));
  CHECK(std::get<verdict::GlobalBelowSingular>(r2.verdict).epsilon == Approx(0.9).epsilon(1e-12));
  const auto r3 = classify(make_chandrasekhar(d3, 1.2), FracOrder(2.0));
  CHECK(std::holds_alternative<verdict::Indeterminate>(r3.verdict));

  const Dimension d2(2);
  const auto above = classify(make_gaussian(d2, 8 * kPi * 1.01, 1.0), FracOrder(2.0));
  REQUIRE(std::holds_alternative<verdict::BlowupBy>(above.verdict));
  CHECK(std::isfinite(std::get<verdict::BlowupBy>(above.verdict).T_star));
  const auto below = classify(make_gaussian(d2, 8 * kPi * 0.99, 1.0), FracOrder(2.0));
  CHECK_FALSE(std::holds_alternative<verdict::BlowupBy>(below.verdict));

  // Fractional: eta u_C blows up iff eta K > C.
  const Dimension d6(6);
  const auto c = criterion_constants(d6, FracOrder(1.0));
  const double eta_crit = c.C / c.K->value;
  CHECK(std::holds_alternative<verdict::BlowupBy>(
      classify(make_chandrasekhar(d6, 1.05 * eta_crit, FracOrder(1.0)), FracOrder(1.0)).verdict));
  CHECK(std::holds_alternative<verdict::GlobalBelowSingular>(
      classify(make_chandrasekhar(d6, 0.8, FracOrder(1.0)), FracOrder(1.0)).verdict));
}

TEST_CASE("verdict scaling covariance") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Dimension d(3);
  const auto base = make_gaussian(d, 150.0, 1.0);
  const auto r0 = classify(base, FracOrder(2.0));
  REQUIRE(std::holds_alternative<verdict::BlowupBy>(r0.verdict));
  const double T0 = std::get<verdict::BlowupBy>(r0.verdict).T_star;
  for (int i = 0; i < 4; ++i) {
    const double lam = std::pow(10.0, u(rng));
    const auto r = classify(rescaled(base, lam, FracOrder(2.0)), FracOrder(2.0));
    REQUIRE(std::holds_alternative<verdict::BlowupBy>(r.verdict));
    CHECK(rel(std::get<verdict::BlowupBy>(r.verdict).T_star, T0 / (lam * lam)) < 1e-6);
  }
}

TEST_CASE("criterion is monotone in the datum") {
  const Dimension d(3);
  const auto r1 = classify(make_gaussian(d, 150.0, 1.0), FracOrder(2.0));
  const auto r2 = classify(make_gaussian(d, 250.0, 1.0), FracOrder(2.0));
  REQUIRE(std::holds_alternative<verdict::BlowupBy>(r1.verdict));
  REQUIRE(std::holds_alternative<verdict::BlowupBy>(r2.verdict));
  CHECK(std::get<verdict::BlowupBy>(r2.verdict).T_star <= std::get<verdict::BlowupBy>(r1.verdict).T_star);
  for (std::size_t i = 0; i < r1.curve.samples.size(); ++i) {
    CHECK(r1.curve.samples[i].value <= r2.curve.samples[i].value);
  }
}

TEST_CASE("classification is deterministic") {
  const auto p = make_shell(Dimension(4), 300.0, 2.0);
  const auto a = classify(p, FracOrder(2.0), {.threads = 1});
  const auto b = classify(p, FracOrder(2.0), {.threads = 3});
  REQUIRE(a.curve.samples.size() == b.curve.samples.size());
  for (std::size_t i = 0; i < a.curve.samples.size(); ++i) CHECK(a.curve.samples[i].value == b.curve.samples[i].value);
}

TEST_CASE("blowup rate envelope") {
  const double C = 1.5, T = 2.0;
  CHECK(blowup_rate_bound(C / T, C, 0.5) == Approx(C / (T - 0.5)).epsilon(1e-14));
  CHECK(blowup_rate_bound(3.0, C, 0.0) == Approx(3.0));
  CHECK(blowup_rate_bound(2 * C / T, C, T / 4) == Approx(4 * C / T).epsilon(1e-14));
  CHECK_THROWS_AS(blowup_rate_bound(C / T, C, T), DomainError);
}
