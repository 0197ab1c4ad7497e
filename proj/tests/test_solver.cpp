#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ksblow/criteria.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/solver.hpp"

using namespace ksblow;

namespace {
constexpr double kPi = std::numbers::pi;

// Closed-form mass of the self-similar blowing-up solution.
double exact_M(int d, double r, double s) {
  const double sig = sigma_d(Dimension(d));
  return 4.0 * sig * std::pow(r, d) / (r * r + 2.0 * (d - 2) * s);
}
double exact_Mt(int d, double r, double s) {
  const double sig = sigma_d(Dimension(d));
  const double q = r * r + 2.0 * (d - 2) * s;
  return 8.0 * (d - 2) * sig * std::pow(r, d) / (q * q);
}

std::shared_ptr<const SolverGrid> grid_for(const MassProfile& m, int n, double r_max = 0.0) {
  GridSpec s;
  s.n = n;
  s.r_max = r_max > 0.0 ? r_max : default_r_max(m);
  return std::make_shared<const SolverGrid>(make_grid(m.dim(), s, m.breakpoints()));
}

SimState with_values(std::shared_ptr<const SolverGrid> g, std::vector<double> M, double t) {
  SimState s;
  s.grid = std::move(g);
  s.M = std::move(M);
  s.t = t;
  return s;
}

double sup_rel_error(const SolverGrid& g, const std::vector<double>& M, double s, double r_hi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size() && g.r[i] <= r_hi; ++i) {
    const double e = exact_M(3, g.r[i], s);
    if (e > 0.0) worst = std::max(worst, std::abs(M[i] - e) / e);
  }
  return worst;
}

const MassProfile& exact_datum() {
  static const MassProfile m = mass_from_density(make_exact_datum(Dimension(3), 1.0));
  return m;
}
}  // namespace

TEST_CASE("grid construction") {
  const double bps[] = {0.5, 2.0};
  const auto g = make_grid(Dimension(3), {.r_max = 10.0, .n = 200, .inner_fraction = 1e-4}, bps);
  CHECK(g.size() == 200);
  CHECK(g.r.front() == doctest::Approx(1e-3));
  CHECK(g.r_max() == 10.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g.r[i] > g.r[i - 1]);
  CHECK(std::find(g.r.begin(), g.r.end(), 0.5) != g.r.end());
  CHECK(std::find(g.r.begin(), g.r.end(), 2.0) != g.r.end());
  const auto p = make_grid(Dimension(3), {.r_max = 10.0, .n = 100, .inner_fraction = 1e-3, .uniform_patch = 5});
  CHECK(p.r[4] == doctest::Approx(5e-2));
  CHECK(p.r[1] - p.r[0] == doctest::Approx(p.r[0]));
  CHECK_THROWS_AS((void)make_grid(Dimension(3), {.r_max = -1.0}), DomainError);
  CHECK_THROWS_AS((void)make_grid(Dimension(3), {.r_max = 1.0, .n = 5}), DomainError);
}

TEST_CASE("rhs of the zero state vanishes and a step leaves it unchanged") {
  const auto z = MassProfile::zero(Dimension(3));
  auto g = std::make_shared<const SolverGrid>(make_grid(Dimension(3), {.r_max = 10.0, .n = 300}));
  const auto s = initial_state(g, z);
  for (double v : rhs(s)) CHECK(v == 0.0);
  const auto r = step(s, 0.1);
  CHECK(r.admissible);
  for (double v : r.next.M) CHECK(v == 0.0);
  CHECK(moment_W(s, 1.0) == 0.0);
}

TEST_CASE("singular stationary solution is stationary for the stencil") {
  // Residual in units of M / r^2. For d = 3, 5 the mass is a power r^p with
  // p <= 3 and the stencil is exact; for d = 10 it is O(h^2).
  auto residual = [](int d, int n) {
    const auto uc = mass_from_density(make_chandrasekhar(Dimension(d), 1.0));
    auto g = grid_for(uc, n, 100.0);
    const auto s = initial_state(g, uc);
    const auto F = rhs(s);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < g->size(); ++i) {
      worst = std::max(worst, std::abs(F[i]) * g->r[i] * g->r[i] / s.M[i]);
    }
    return worst;
  };
  CHECK(residual(3, 1000) < 1e-9);
  CHECK(residual(5, 1000) < 1e-9);
  const double e1 = residual(10, 1000), e2 = residual(10, 2000), e3 = residual(10, 4000);
  CHECK(std::log2(e1 / e2) > 1.8);
  CHECK(std::log2(e2 / e3) > 1.8);
}

TEST_CASE("rhs matches the time derivative of the exact solution") {
  double prev = 0.0;
  for (int n : {1000, 2000, 4000}) {
    auto g = grid_for(exact_datum(), n);
    std::vector<double> M(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) M[i] = exact_M(3, g->r[i], 1.0);
    const auto F = rhs(with_values(g, M, 0.0));
    double worst = 0.0;
    // Error in units of M / r^2, the natural scale of each term.
    for (std::size_t i = 0; i + 1 < g->size() && g->r[i] < 10.0; ++i) {
      const double e = exact_Mt(3, g->r[i], 1.0);
      worst = std::max(worst, std::abs(F[i] - e) * g->r[i] * g->r[i] / M[i]);
    }
    if (prev > 0.0) CHECK(std::log2(prev / worst) > 1.8);
    prev = worst;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("stationary datum drifts by at most 1e-4 sigma_d after 100 steps") {
  const auto uc = mass_from_density(make_chandrasekhar(Dimension(3), 1.0));
  auto g = grid_for(uc, 2000);
  auto s = initial_state(g, uc);
  const auto M0 = s.M;
  for (int k = 0; k < 100; ++k) {
    auto r = step(s, 1e-3);
    REQUIRE(r.admissible);
    s = std::move(r.next);
  }
  double drift = 0.0;
  for (std::size_t i = 0; i < M0.size(); ++i) drift = std::max(drift, std::abs(s.M[i] - M0[i]));
  CHECK(drift <= 1e-4 * 2.0 * sigma_d(Dimension(3)));
}

TEST_CASE("exact blowing-up solution: profile, blowup time and moment identity") {
  SolverControls c;
  c.t_end = 2.0;
  c.T_target = 1.0;
  c.output_times = {0.2, 0.4, 0.5, 0.6, 0.7, 0.8};
  const auto res = run(exact_datum(), FracOrder::classical(), GridSpec{.n = 4000}, c);
  REQUIRE(res.snapshots.size() == 6);
  for (const auto& snap : res.snapshots) {
    CHECK(sup_rel_error(*res.grid, snap.M, 1.0 - snap.t, 1e3) <= 0.01);
  }
  REQUIRE(res.event.has_value());
  CHECK(std::abs(res.event->detected_time - 1.0) <= 0.05);
  CHECK(res.infinite_mass);
  CHECK_FALSE(res.warnings.empty());
  const double C3 = constant_C(Dimension(3));
  for (const auto& snap : res.snapshots) {
    if (snap.t != 0.2 && snap.t != 0.5 && snap.t != 0.7) continue;
    const double W = moment_W(with_values(res.grid, snap.M, snap.t), 1.0);
    CHECK(std::abs(W - C3 / (1.0 - snap.t)) <= 0.03 * C3 / (1.0 - snap.t));
  }
  // Moment inequality along the run.
  for (std::size_t k = 1; k < res.snapshots.size(); ++k) {
    const auto& a = res.snapshots[k - 1];
    const auto& b = res.snapshots[k];
    const double Wa = moment_W(with_values(res.grid, a.M, a.t), 1.0);
    const double Wb = moment_W(with_values(res.grid, b.M, b.t), 1.0);
    CHECK((Wb - Wa) / (b.t - a.t) >= Wa * Wb / C3 * 0.95);
  }
  CHECK_THROWS_AS((void)moment_W(with_values(res.grid, res.snapshots[0].M, 1.0), 1.0), DomainError);
}

TEST_CASE("grid refinement converges at second order on the exact solution") {
  std::vector<double> errs;
  for (int n : {500, 1000, 2000}) {
    SolverControls c;
    c.t_end = 0.5;
    c.rtol = 1e-9;
    c.output_times = {0.5};
    const auto res = run(exact_datum(), FracOrder::classical(), GridSpec{.n = n}, c);
    REQUIRE(res.snapshots.size() == 1);
    errs.push_back(sup_rel_error(*res.grid, res.snapshots[0].M, 0.5, 10.0));
  }
  CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
  CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
}

TEST_CASE("detected blowup time is insensitive to the detection thresholds") {
  SolverControls c;
  c.t_end = 2.0;
  const auto base = run(exact_datum(), FracOrder::classical(), GridSpec{.n = 2000}, c);
  REQUIRE(base.event.has_value());
  c.density_cap = 2.0 * base.density_cap;
  c.dt_floor = 0.5 * base.dt_floor;
  const auto tight = run(exact_datum(), FracOrder::classical(), GridSpec{.n = 2000}, c);
  REQUIRE(tight.event.has_value());
  CHECK(std::abs(tight.event->detected_time - base.event->detected_time) < 0.02 * base.event->detected_time);
}

TEST_CASE("blowup time scales as lambda^-2 under datum rescaling") {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> lam(0.5, 3.0);
  const auto u = make_gaussian(Dimension(3), 150.0, 1.0);
  SolverControls c;
  c.t_end = 5.0;
  const auto base = run(mass_from_density(u), FracOrder::classical(), GridSpec{.n = 1500}, c);
  REQUIRE(base.event.has_value());
  for (int k = 0; k < 3; ++k) {
    const double l = lam(rng);
    SolverControls cl = c;
    cl.t_end = c.t_end / (l * l);
    const auto m = mass_from_density(rescaled(u, l, FracOrder::classical()));
    const auto res = run(m, FracOrder::classical(), GridSpec{.n = 1500}, cl);
    REQUIRE(res.event.has_value());
    CHECK(std::abs(res.event->detected_time * l * l / base.event->detected_time - 1.0) < 0.05);
  }
}

TEST_CASE("finite-mass runs conserve mass and keep M monotone and nonnegative") {
  SolverControls c;
  c.t_end = 5.0;
  for (int k = 1; k <= 20; ++k) c.output_times.push_back(0.25 * k);
  const auto m = mass_from_density(make_gaussian(Dimension(3), 150.0, 1.0));
  const auto res = run(m, FracOrder::classical(), GridSpec{.n = 1500}, c);
  CHECK(res.event.has_value());
  CHECK(res.mass_drift <= 1e-6);
  CHECK(res.warnings.empty());
  for (const auto& s : res.snapshots) {
    CHECK(s.M.front() >= 0.0);
    bool mono = true;
    for (std::size_t i = 1; i < s.M.size(); ++i) mono = mono && s.M[i] >= s.M[i - 1];
    CHECK(mono);
    CHECK(std::abs(s.M.back() - 150.0) <= 1e-6 * 150.0);
  }
  for (const auto& row : res.rows) CHECK(row.probes.size() == 6);
}

TEST_CASE("data below the singular solution stay bounded") {
  const auto m = mass_from_density(make_truncated_chandrasekhar(Dimension(3), 0.9, 0.0, 50.0));
  SolverControls c;
  c.t_end = 10.0;
  const auto res = run(m, FracOrder::classical(), GridSpec{.n = 2000}, c);
  CHECK_FALSE(res.event.has_value());
  CHECK(res.final_state.t == doctest::Approx(10.0));
  // Origin density does not grow once the initial transient has passed.
  double prev = INFINITY;
  bool nonincreasing = true;
  for (const auto& row : res.rows) {
    if (row.t < 0.1) continue;
    nonincreasing = nonincreasing && row.origin_density <= prev * (1.0 + 1e-9);
    prev = row.origin_density;
  }
  CHECK(nonincreasing);
}

TEST_CASE("shell above the threshold blows up before the classifier's bound") {
  const Dimension d(3);
  const double N = 1.05 * threshold_N(d, FracOrder::classical());
  const auto shell = make_shell(d, N, 1.0);
  const auto rep = classify(shell, FracOrder::classical());
  const auto* b = std::get_if<verdict::BlowupBy>(&rep.verdict);
  REQUIRE(b != nullptr);
  SolverControls c;
  c.t_end = 1.2 * b->T_star;
  const auto res = run(mass_from_density(shell), FracOrder::classical(), GridSpec{.n = 3000}, c);
  REQUIRE(res.event.has_value());
  CHECK(res.event->detected_time <= 1.2 * b->T_star);
  CHECK(res.rows.front().origin_density == 0.0);
}

TEST_CASE("comparison principle") {
  const Dimension d(3);
  const auto zero = MassProfile::zero(d);
  const auto g = mass_from_density(make_gaussian(d, 50.0, 1.0));
  CHECK(comparison_check(zero, g, 1.0, {}, 10).ordered);
  const auto low = mass_from_density(make_truncated_chandrasekhar(d, 0.5, 0.0, 50.0));
  const auto high = mass_from_density(make_truncated_chandrasekhar(d, 0.9, 0.0, 50.0));
  const auto rep = comparison_check(low, high, 10.0, {.n = 1500}, 50, 2);
  CHECK(rep.ordered);
  CHECK(rep.times_checked == 50);
  const auto s1 = mass_from_density(make_shell(d, 40.0, 1.0));
  const auto s2 = mass_from_density(make_shell(d, 80.0, 1.0));
  const auto sh = comparison_check(s1, s2, 5.0, {.n = 1500}, 50, 2);
  CHECK(sh.ordered);
  CHECK(sh.high_blowup.has_value());
  CHECK(sh.times_checked >= 1);
  CHECK_THROWS_AS((void)comparison_check(s2, s1, 1.0), DomainError);
}

TEST_CASE("blowup time of truncated singular data scales like R^2") {
  const auto ts = truncation_scaling(Dimension(3), 4.0, {0.25, 0.5, 1.0}, {.n = 3000}, 3);
  REQUIRE(ts.conclusive);
  CHECK(ts.exponent >= 1.6);
  CHECK(ts.exponent <= 2.4);
  for (std::size_t i = 1; i < ts.radii.size(); ++i) {
    const double ratio = ts.blowup_times[i] / ts.blowup_times[i - 1];
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
  }
  CHECK_THROWS_AS((void)truncation_scaling(Dimension(3), 4.0, {1.0}), DomainError);
}

TEST_CASE("fractional runs are rejected") {
  const auto m = mass_from_density(make_gaussian(Dimension(3), 10.0, 1.0));
  CHECK_THROWS_AS((void)run(m, FracOrder(1.5), GridSpec{}, SolverControls{}), DomainError);
}

TEST_CASE("explicit and Rosenbrock integrators agree on a coarse grid") {
  const auto m = mass_from_density(make_gaussian(Dimension(3), 20.0, 1.0));
  const GridSpec gs{.r_max = 20.0, .n = 150, .inner_fraction = 1e-3};
  SolverControls c;
  c.t_end = 0.2;
  c.rtol = 1e-8;
  c.output_times = {0.2};
  const auto a = run(m, FracOrder::classical(), gs, c);
  c.integrator = Integrator::ExplicitRK;
  const auto b = run(m, FracOrder::classical(), gs, c);
  REQUIRE(a.snapshots.size() == 1);
  REQUIRE(b.snapshots.size() == 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.snapshots[0].M.size(); ++i) {
    worst = std::max(worst, std::abs(a.snapshots[0].M[i] - b.snapshots[0].M[i]));
  }
  CHECK(worst <= 1e-5 * 20.0);
}
