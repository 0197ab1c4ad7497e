#include "ksblow/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "ksblow/criteria.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"
#include "ksblow/kernels.hpp"
#include "ksblow/solver.hpp"

namespace ksblow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Item = std::function<void(AcceptanceResult&, const AcceptanceOptions&)>;

const FracOrder kTwo = FracOrder::classical();

std::string list(std::initializer_list<double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt(x);
  return s;
}

void ac1(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "constant C";
  r.expected = "C(2)=2; 1<=C(d)<2 for d=3..30";
  r.tolerance = "1e-10";
  const double c2 = constant_C(Dimension(2)) + o.c2_perturbation;
  bool ok = std::abs(c2 - 2.0) <= 1e-10;
  double lo = kInf, hi = -kInf;
  for (int d = 3; d <= 30; ++d) {
    const double c = constant_C(Dimension(d));
    lo = std::min(lo, c), hi = std::max(hi, c);
    ok = ok && c >= 1.0 && c < 2.0;
  }
  r.actual = "C(2)=" + fmt(c2) + "; C(d) in [" + fmt(lo) + "," + fmt(hi) + "]";
  r.passed = ok;
}

void ac2(AcceptanceResult& r, const AcceptanceOptions&) {
  r.title = "singular-solution invariance";
  r.expected = "t e^{t Laplacian} u_C (0) = 1, t in {1e-3,1,1e3}, d in {3,5,10}";
  r.tolerance = "1e-8";
  double worst = 0.0;
  for (int d : {3, 5, 10}) {
    const RadialKernel k{Dimension(d), kTwo};
    const auto uc = mass_from_density(make_chandrasekhar(Dimension(d), 1.0));
    for (double t : {1e-3, 1.0, 1e3}) worst = std::max(worst, std::abs(t * semigroup_at_origin(k, t, uc) - 1.0));
  }
  r.actual = "max deviation " + fmt(worst);
  r.passed = worst <= 1e-8;
}

void ac3(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "Poisson pin and kernel normalization";
  r.expected = "alpha=1,d=3 kernel = (1+rho^2)^-2/pi^2 on [0,10]; both normalizations";
  r.tolerance = "1e-6";
  const RadialKernel k{Dimension(3), FracOrder(1.0)};
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double rho = 10.0 * i / 400;
    const double exact = std::pow(1.0 + rho * rho, -2.0) / (kPi * kPi);
    worst = std::max(worst, std::abs(k.R(rho) - exact) / exact);
  }
  double norm = 0.0;
  for (double a : {0.5, 1.0, 1.5}) {
    for (int d : {3, 5}) {
      const auto v = validate_kernel(*shared_kernel_table(Dimension(d), FracOrder(a), o.threads));
      norm = std::max({norm, std::abs(v.mass_residual), std::abs(v.derivative_residual)});
    }
  }
  r.actual = "Poisson rel err " + fmt(worst) + "; max normalization residual " + fmt(norm);
  r.passed = worst <= 1e-6 && norm <= 1e-6;
}

void ac4(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "kernel structure";
  r.expected = "tail exponents -d-alpha, -d-1-alpha, -d-2-alpha; R'<0; rho R''-R'>=0; rho^{1-d}R' monotone";
  r.tolerance = "2% on exponents";
  double worst = 0.0;
  bool shape = true;
  for (double a : {0.5, 1.0, 1.5}) {
    for (int d : {3, 5}) {
      const auto v = validate_kernel(*shared_kernel_table(Dimension(d), FracOrder(a), o.threads));
      worst = std::max({worst, v.tail_exponent_error_R, v.tail_exponent_error_Rp, v.tail_exponent_error_Rpp});
      const bool s = v.derivative_negative && v.convexity_ok && v.weighted_monotone;
      if (!s) r.detail += "shape check failed for d=" + std::to_string(d) + ", alpha=" + fmt(a) + "; ";
      shape = shape && s;
    }
  }
  r.actual = "max exponent error " + fmt(worst) + "; shape checks " + (shape ? "hold" : "fail");
  r.passed = worst <= 0.02 && shape;
}

void ac5(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "fractional constant sandwich";
  r.expected = "K_alpha(d) <= C_alpha(d) <= 2d/(d-2), alpha in {0.5,1,1.5}, d in {4,6,10}";
  r.tolerance = "1e-6 slack";
  double slack_lo = kInf, slack_hi = kInf;
  for (double a : {0.5, 1.0, 1.5}) {
    for (int d : {4, 6, 10}) {
      if (!(2.0 * a < d)) continue;
      const auto c = criterion_constants(Dimension(d), FracOrder(a), o.threads);
      slack_lo = std::min(slack_lo, c.C - c.K->value);
      slack_hi = std::min(slack_hi, 2.0 * d / (d - 2.0) - c.C);
    }
  }
  r.actual = "min(C-K)=" + fmt(slack_lo) + "; min(2d/(d-2)-C)=" + fmt(slack_hi);
  r.passed = slack_lo >= -1e-6 && slack_hi >= -1e-6;
}

void ac6(AcceptanceResult& r, const AcceptanceOptions&) {
  r.title = "threshold asymptotics";
  r.expected = "N(d)/(4 sigma_d sqrt(pi(d-2))) <= 1.1 and decreasing, d in {20,50,100}";
  r.tolerance = "bound 1.1";
  std::vector<double> q;
  for (int d : {20, 50, 100}) {
    const Dimension dd(d);
    q.push_back(threshold_N(dd, kTwo) / (4.0 * sigma_d(dd) * std::sqrt(kPi * (d - 2.0))));
  }
  r.actual = "ratios " + fmt(q[0]) + "," + fmt(q[1]) + "," + fmt(q[2]);
  r.passed = q[0] <= 1.1 && q[1] <= 1.1 && q[2] <= 1.1 && q[1] < q[0] && q[2] < q[1];
}

void ac7(AcceptanceResult& r, const AcceptanceOptions&) {
  r.title = "exact blowing-up solution";
  r.expected = "profile error <= 1% to t=0.8; blowup time 1 +- 5%; W = C(3)/(1-t) +- 3% at t=0.2,0.5,0.7";
  r.tolerance = "1%, 5%, 3%";
  const Dimension d(3);
  const auto datum = mass_from_density(make_exact_datum(d, 1.0));
  const double sig = sigma_d(d);
  SolverControls c;
  c.t_end = 2.0;
  c.T_target = 1.0;
  c.stride = 1 << 30;
  c.output_times = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const auto res = run(datum, kTwo, GridSpec{.n = 4000}, c);
  double prof = 0.0, werr = 0.0;
  const double C3 = constant_C(d);
  for (const auto& s : res.snapshots) {
    const double tau = 1.0 - s.t;
    for (std::size_t i = 0; i < s.M.size(); ++i) {
      const double rr = res.grid->r[i];
      const double e = 4.0 * sig * rr * rr * rr / (rr * rr + 2.0 * tau);
      if (e > 0.0 && rr <= res.grid->r_max() / 10) prof = std::max(prof, std::abs(s.M[i] - e) / e);
    }
    if (s.t == 0.2 || s.t == 0.5 || s.t == 0.7) {
      SimState st;
      st.grid = res.grid;
      st.M = s.M;
      st.t = s.t;
      werr = std::max(werr, std::abs(moment_W(st, 1.0) * tau / C3 - 1.0));
    }
  }
  const double tb = res.event ? res.event->detected_time : kInf;
  r.actual = "profile err " + fmt(prof) + "; blowup at " + fmt(tb) + "; W err " + fmt(werr);
  r.passed = res.snapshots.size() == 8 && prof <= 0.01 && std::abs(tb - 1.0) <= 0.05 && werr <= 0.03;
}

void ac8(AcceptanceResult& r, const AcceptanceOptions&) {
  r.title = "dichotomy, simulation-backed";
  r.expected = "(a) 0.9 u_C on [0,50] global to t=10; (b) shell 1.05 N(3) blows up by 1.2 T*; (c) d=2 8pi(1+-0.01) split";
  r.tolerance = "1.2 T*";
  const Dimension d(3);
  SolverControls c;
  c.t_end = 10.0;
  c.stride = 1 << 30;
  const auto a = run(mass_from_density(make_truncated_chandrasekhar(d, 0.9, 0.0, 50.0)), kTwo, GridSpec{}, c);
  const bool ok_a = !a.event.has_value();

  const auto shell = make_shell(d, 1.05 * threshold_N(d, kTwo), 1.0);
  const auto rep = classify(shell, kTwo);
  const auto* by = std::get_if<verdict::BlowupBy>(&rep.verdict);
  bool ok_b = false;
  double tb = kInf, Tstar = kInf;
  if (by) {
    Tstar = by->T_star;
    c.t_end = 1.2 * Tstar;
    const auto b = run(mass_from_density(shell), kTwo, GridSpec{.n = 3000}, c);
    if (b.event) tb = b.event->detected_time;
    ok_b = b.event && tb <= 1.2 * Tstar;
  }

  const Dimension d2(2);
  const auto above = classify(make_gaussian(d2, 8 * kPi * 1.01, 1.0), kTwo);
  const auto below = classify(make_gaussian(d2, 8 * kPi * 0.99, 1.0), kTwo);
  const bool ok_c = std::holds_alternative<verdict::BlowupBy>(above.verdict) &&
                    !std::holds_alternative<verdict::BlowupBy>(below.verdict);
  r.actual = std::string("(a) ") + (ok_a ? "no blowup" : "blowup at " + fmt(a.event->detected_time)) +
             "; (b) blowup " + fmt(tb) + " vs 1.2 T* = " + fmt(1.2 * Tstar) + "; (c) " + verdict_name(above.verdict) +
             " / " + verdict_name(below.verdict);
  r.passed = ok_a && ok_b && ok_c;
}

void ac9(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "comparison principle";
  r.expected = "ordered pairs stay ordered to t=5 (3 pairs)";
  r.tolerance = "1e-6 x max M";
  const Dimension d(3);
  struct Pair {
    std::string name;
    MassProfile low, high;
  };
  const std::vector<Pair> pairs{
      {"0.5/0.9 u_C on [0,50]", mass_from_density(make_truncated_chandrasekhar(d, 0.5, 0.0, 50.0)),
       mass_from_density(make_truncated_chandrasekhar(d, 0.9, 0.0, 50.0))},
      {"shell 40/80", mass_from_density(make_shell(d, 40.0, 1.0)), mass_from_density(make_shell(d, 80.0, 1.0))},
      {"gauss 100/200", mass_from_density(make_gaussian(d, 100.0, 1.0)),
       mass_from_density(make_gaussian(d, 200.0, 1.0))},
  };
  bool ok = true;
  for (const auto& p : pairs) {
    const auto rep = comparison_check(p.low, p.high, 5.0, GridSpec{.n = 1500}, 500, o.threads);
    r.actual += p.name + ": " + (rep.ordered ? "ordered" : "violated") + " (" + std::to_string(rep.times_checked) +
                " times to t=" + fmt(rep.checked_until) + "); ";
    if (!rep.ordered) {
      r.detail += p.name + " violation at t=" + fmt(*rep.violation_time) + ", r=" + fmt(*rep.violation_radius) + "; ";
    }
    ok = ok && rep.ordered && rep.times_checked >= 1;
  }
  r.passed = ok;
}

void ac10(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "truncation scaling";
  r.expected = "exponent of T_blowup vs R in [1.6,2.4], eta=4, d=3, R in {0.25,0.5,1}";
  r.tolerance = "[1.6,2.4]";
  const auto ts = truncation_scaling(Dimension(3), 4.0, {0.25, 0.5, 1.0}, GridSpec{.n = 3000}, o.threads);
  if (!ts.conclusive) {
    r.actual = "inconclusive: " + ts.message;
    return;
  }
  r.actual = "exponent " + fmt(ts.exponent) + " (T=" + list({ts.blowup_times[0], ts.blowup_times[1], ts.blowup_times[2]}) + ")";
  r.passed = ts.exponent >= 1.6 && ts.exponent <= 2.4;
}

void ac11(AcceptanceResult& r, const AcceptanceOptions& o) {
  r.title = "scaling covariance";
  r.expected = "verdict invariant and T* x lambda^alpha invariant, 20 random cases";
  r.tolerance = "5% on T*";
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int agree = 0;
  double worst = 0.0;
  ClassifyOptions copts;
  copts.threads = o.threads;
  for (int k = 0; k < 20; ++k) {
    const int d = 3 + static_cast<int>(U(rng) * 3);
    const FracOrder alpha(U(rng) < 0.7 ? 2.0 : 1.0);
    const double lam = std::pow(10.0, 2.0 * U(rng) - 1.0);
    const int kind = static_cast<int>(U(rng) * 3);
    const Dimension dd(d);
    RadialProfile p = make_gaussian(dd, 1.0, 1.0);
    if (kind == 0) p = make_gaussian(dd, 50.0 + 400.0 * U(rng), 0.5 + 1.5 * U(rng));
    if (kind == 1) p = make_shell(dd, 20.0 + 400.0 * U(rng), 0.5 + 1.5 * U(rng));
    if (kind == 2) p = make_truncated_chandrasekhar(dd, 0.5 + 3.0 * U(rng), 0.1 + U(rng), 20.0, alpha);
    const auto base = classify(p, alpha, copts);
    const auto scaled = classify(rescaled(p, lam, alpha), alpha, copts);
    bool ok = verdict_name(base.verdict) == verdict_name(scaled.verdict);
    const auto* b0 = std::get_if<verdict::BlowupBy>(&base.verdict);
    const auto* b1 = std::get_if<verdict::BlowupBy>(&scaled.verdict);
    if (ok && b0 && b1) {
      const double e = std::abs(b1->T_star * std::pow(lam, alpha.value()) / b0->T_star - 1.0);
      worst = std::max(worst, e);
      ok = e <= 0.05;
    }
    if (ok) {
      ++agree;
    } else {
      r.detail += p.describe() + " lambda=" + fmt(lam) + ": " + verdict_name(base.verdict) + " vs " +
                  verdict_name(scaled.verdict) + "; ";
    }
  }
  r.actual = std::to_string(agree) + "/20 covariant; max T* deviation " + fmt(worst);
  r.passed = agree == 20;
}

const std::map<std::string, Item>& items() {
  static const std::map<std::string, Item> m{
      {"AC-1", ac1}, {"AC-2", ac2}, {"AC-3", ac3}, {"AC-4", ac4},   {"AC-5", ac5},   {"AC-6", ac6},
      {"AC-7", ac7}, {"AC-8", ac8}, {"AC-9", ac9}, {"AC-10", ac10}, {"AC-11", ac11},
  };
  return m;
}

}  // namespace

const std::vector<std::string>& acceptance_ids() {
  static const std::vector<std::string> ids{"AC-1", "AC-2", "AC-3", "AC-4",  "AC-5", "AC-6",
                                            "AC-7", "AC-8", "AC-9", "AC-10", "AC-11"};
  return ids;
}

AcceptanceResult run_acceptance_item(const std::string& id, const AcceptanceOptions& opts) {
  const auto it = items().find(id);
  if (it == items().end()) throw DomainError("unknown acceptance item '" + id + "' (expected AC-1..AC-11)");
  AcceptanceResult r;
  r.id = id;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    it->second(r, opts);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail += std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<AcceptanceResult> run_acceptance(const std::vector<std::string>& only, const AcceptanceOptions& opts) {
  for (const auto& id : only) {
    if (!items().count(id)) throw DomainError("unknown acceptance item '" + id + "' (expected AC-1..AC-11)");
  }
  std::vector<AcceptanceResult> out;
  for (const auto& id : acceptance_ids()) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) out.push_back(run_acceptance_item(id, opts));
  }
  return out;
}

std::string format_line(const AcceptanceResult& r) {
  char secs[32];
  std::snprintf(secs, sizeof(secs), "%.1f", r.seconds);
  std::string s = r.id + (r.id.size() < 5 ? "  " : " ") + (r.passed ? " PASS  " : " FAIL  ") + r.title +
                  "  actual: " + r.actual + "  expected: " + r.expected + "  tol: " + r.tolerance + "  [" + secs + " s]";
  if (!r.detail.empty()) s += "  note: " + r.detail;
  return s;
}

nlohmann::json to_json(const std::vector<AcceptanceResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back({{"id", r.id},
                   {"title", r.title},
                   {"expected", r.expected},
                   {"actual", r.actual},
                   {"tolerance", r.tolerance},
                   {"status", r.passed ? "pass" : "fail"},
                   {"detail", r.detail}});
  }
  return arr;
}

std::string to_csv(const std::vector<AcceptanceResult>& results) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out = "id,expected,actual,tolerance,status\n";
  for (const auto& r : results) {
    out += r.id + "," + quote(r.expected) + "," + quote(r.actual) + "," + quote(r.tolerance) + "," +
           (r.passed ? "pass" : "fail") + "\n";
  }
  return out;
}

}  // namespace ksblow
