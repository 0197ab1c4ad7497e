#include "ksblow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"
#include "ksblow/parallel.hpp"
#include "ksblow/quadrature.hpp"

namespace ksblow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Tridiag {
  std::vector<double> sub, diag, sup;
  explicit Tridiag(std::size_t n) : sub(n, 0.0), diag(n, 0.0), sup(n, 0.0) {}
};

// F(M) and, when J is given, its tridiagonal Jacobian. The drift b M_r with
// b = -(d-1)/r + M/(sigma r^{d-1}) is differenced centrally while the cell
// Peclet number |b| h / 2 stays below 1 and upwind otherwise.
void assemble(const SolverGrid& g, const std::vector<double>& M, std::vector<double>& F, Tridiag* J) {
  const std::size_t n = g.size();
  const double dd = g.d.real();
  const double ls = log_sigma_d(g.d);
  F.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double r = g.r[i];
    const double rp = g.r[i + 1];
    const double rm = i > 0 ? g.r[i - 1] : r * r / rp;
    // Ghost value below r_1 from the local power law M ~ r^p read off M_1, M_2,
    // with p clamped to [d-2, d] (critical singularity up to bounded density).
    double x = 0.0;
    bool free_ratio = false;
    if (i == 0 && M[1] > 0.0) {
      const double ratio = rm / r;
      x = M[0] / M[1];
      free_ratio = x >= std::pow(ratio, dd) && x <= std::pow(ratio, dd - 2.0);
      x = std::clamp(x, std::pow(ratio, dd), std::pow(ratio, dd - 2.0));
    }
    const double Mm = i > 0 ? M[i - 1] : x * M[0];
    const double hm = r - rm, hp = rp - r;
    const double c2m = 2.0 / (hm * (hm + hp)), c20 = -2.0 / (hm * hp), c2p = 2.0 / (hp * (hm + hp));
    const double w = std::exp(-ls + (1.0 - dd) * std::log(r));
    const double b = -(dd - 1.0) / r + w * M[i];
    double e1m, e10, e1p;
    if (std::abs(b) * std::max(hm, hp) <= 2.0) {
      e1m = -hp / (hm * (hm + hp));
      e10 = (hp - hm) / (hm * hp);
      e1p = hm / (hp * (hm + hp));
    } else if (b > 0.0) {
      e1m = 0.0, e10 = -1.0 / hp, e1p = 1.0 / hp;
    } else {
      e1m = -1.0 / hm, e10 = 1.0 / hm, e1p = 0.0;
    }
    const double D1 = e1m * Mm + e10 * M[i] + e1p * M[i + 1];
    F[i] = c2m * Mm + c20 * M[i] + c2p * M[i + 1] + b * D1;
    if (J) {
      const double dm = c2m + b * e1m;
      J->diag[i] = c20 + b * e10 + w * D1;
      J->sup[i] = c2p + b * e1p;
      if (i > 0) {
        J->sub[i] = dm;
      } else if (free_ratio) {
        J->diag[i] += 2.0 * x * dm;
        J->sup[i] -= x * x * dm;
      } else {
        J->diag[i] += x * dm;
      }
    }
  }
}

// Solves (I - s J) x = rhs in place (Thomas algorithm).
void solve_shifted(const Tridiag& J, double s, std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> cp(n), dp(n);
  auto a = [&](std::size_t i) { return -s * J.sub[i]; };
  auto b = [&](std::size_t i) { return 1.0 - s * J.diag[i]; };
  auto c = [&](std::size_t i) { return -s * J.sup[i]; };
  double denom = b(0);
  cp[0] = c(0) / denom;
  dp[0] = x[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = b(i) - a(i) * cp[i - 1];
    cp[i] = c(i) / denom;
    dp[i] = (x[i] - a(i) * dp[i - 1]) / denom;
  }
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
}

double origin_density(const SolverGrid& g, const std::vector<double>& M) {
  const double r1 = g.r[0];
  if (M[0] <= 0.0) return 0.0;
  return std::exp(std::log(M[0]) + std::log(g.d.real()) - log_sigma_d(g.d) - g.d.real() * std::log(r1));
}

// Nonnegative, nondecreasing and finite up to `tol`; on success the small
// violations are projected away.
bool admit(std::vector<double>& M, double tol) {
  double running = 0.0;
  for (double& m : M) {
    if (!std::isfinite(m) || m < -tol || m < running - tol) return false;
    m = std::max(m, running);
    running = m;
  }
  return true;
}

double error_norm(const std::vector<double>& err, const std::vector<double>& y0, const std::vector<double>& y1,
                  const StepTolerances& tol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double scale = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    if (scale > 0.0) worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

double interpolate(const SolverGrid& g, const std::vector<double>& M, double r, bool infinite_mass) {
  if (r <= g.r[0]) return M[0] * std::pow(r / g.r[0], g.d.real());
  if (r >= g.r_max()) return r == g.r_max() || !infinite_mass ? M.back() : kNaN;
  const auto it = std::upper_bound(g.r.begin(), g.r.end(), r);
  const std::size_t j = static_cast<std::size_t>(it - g.r.begin());
  const double t = (r - g.r[j - 1]) / (g.r[j] - g.r[j - 1]);
  return (1.0 - t) * M[j - 1] + t * M[j];
}

}  // namespace

std::string trigger_name(BlowupTrigger t) {
  return t == BlowupTrigger::OriginDensityCap ? "OriginDensityCap" : "StepFloor";
}

SolverGrid make_grid(Dimension d, const GridSpec& spec, std::span<const double> breakpoints) {
  if (!(spec.r_max > 0.0)) throw_domain("grid r_max must be positive");
  if (spec.n < 10) throw_domain("grid needs at least 10 nodes");
  if (!(spec.inner_fraction > 0.0 && spec.inner_fraction < 0.1)) {
    throw_domain("grid inner_fraction must be in (0, 0.1)");
  }
  if (spec.uniform_patch < 0 || spec.uniform_patch >= spec.n / 2) {
    throw_domain("uniform_patch must be in [0, n/2)");
  }
  SolverGrid g;
  g.d = d;
  const double r1 = spec.inner_fraction * spec.r_max;
  for (int j = 1; j <= spec.uniform_patch; ++j) g.r.push_back(r1 * j);
  const double start = spec.uniform_patch > 0 ? r1 * spec.uniform_patch : r1;
  const int m = spec.n - std::max(spec.uniform_patch, 1);
  if (spec.uniform_patch == 0) g.r.push_back(r1);
  const double ratio = std::log(spec.r_max / start) / m;
  for (int j = 1; j <= m; ++j) g.r.push_back(start * std::exp(ratio * j));
  g.r.back() = spec.r_max;
  for (double b : breakpoints) {
    if (!(b > g.r.front() && b < g.r.back())) continue;
    const auto it = std::lower_bound(g.r.begin(), g.r.end(), b);
    std::size_t j = static_cast<std::size_t>(it - g.r.begin());
    if (j > 0 && b - g.r[j - 1] < g.r[j] - b) --j;
    if (j == 0 || j + 1 == g.r.size()) continue;
    g.r[j] = b;
  }
  return g;
}

double default_r_max(const MassProfile& datum) { return 100.0 * datum.characteristic_radius(); }

SimState initial_state(std::shared_ptr<const SolverGrid> grid, const MassProfile& datum) {
  if (datum.dim() != grid->d) throw_domain("datum and grid dimensions differ");
  SimState s;
  s.grid = grid;
  s.M.resize(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) s.M[i] = datum(grid->r[i]);
  if (!admit(s.M, 0.0)) throw_domain("initial mass function must be nonnegative and nondecreasing");
  s.origin_density = origin_density(*grid, s.M);
  return s;
}

std::vector<double> rhs(const SimState& state) {
  std::vector<double> F;
  assemble(*state.grid, state.M, F, nullptr);
  return F;
}

StepResult step(const SimState& state, double dt, Integrator integrator, const StepTolerances& tol) {
  if (!(dt > 0.0)) throw_domain("step needs dt > 0");
  const auto& g = *state.grid;
  const std::size_t n = g.size();
  const auto& y = state.M;
  StepResult res;
  res.next = state;
  std::vector<double> err(n), y1(n);
  if (integrator == Integrator::Rosenbrock) {
    const double gamma = 1.0 + 1.0 / std::sqrt(2.0);
    Tridiag J(n);
    std::vector<double> k1, k2;
    assemble(g, y, k1, &J);
    solve_shifted(J, gamma * dt, k1);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + dt * k1[i];
    assemble(g, y1, k2, nullptr);
    for (std::size_t i = 0; i < n; ++i) k2[i] -= 2.0 * k1[i];
    solve_shifted(J, gamma * dt, k2);
    for (std::size_t i = 0; i < n; ++i) {
      y1[i] = y[i] + dt * (1.5 * k1[i] + 0.5 * k2[i]);
      err[i] = 0.5 * dt * (k1[i] + k2[i]);
    }
  } else {
    std::vector<double> k1, k2, k3, k4, tmp(n);
    assemble(g, y, k1, nullptr);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    assemble(g, tmp, k2, nullptr);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.75 * dt * k2[i];
    assemble(g, tmp, k3, nullptr);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + dt * (2.0 / 9 * k1[i] + 1.0 / 3 * k2[i] + 4.0 / 9 * k3[i]);
    assemble(g, y1, k4, nullptr);
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = dt * (-5.0 / 72 * k1[i] + 1.0 / 12 * k2[i] + 1.0 / 9 * k3[i] - 1.0 / 8 * k4[i]);
    }
  }
  y1.back() = y.back();
  res.error_norm = error_norm(err, y, y1, tol);
  const double scale = std::max(std::abs(y.back()), std::abs(y1.back()));
  res.admissible = admit(y1, 1e-9 * scale);
  res.next.M = std::move(y1);
  res.next.t = state.t + dt;
  res.next.dt = dt;
  res.next.origin_density = origin_density(g, res.next.M);
  return res;
}

double moment_W(const SimState& state, double T) {
  const double s = T - state.t;
  if (!(s > 0.0)) throw_domain("moment W needs t < T (t=" + fmt(state.t) + ", T=" + fmt(T) + ")");
  const auto& g = *state.grid;
  const double dd = g.d.real();
  const double base = -std::log(2.0 * s) - 0.5 * dd * std::log(4.0 * kPi * s);
  auto f = [&](std::size_t i) {
    const double r = g.r[i], m = state.M[i];
    return m > 0.0 ? std::exp(std::log(m) + std::log(r) + base - r * r / (4.0 * s)) : 0.0;
  };
  double acc = f(0) * g.r[0] / (dd + 2.0);  // M ~ r^d below r_1
  double prev = f(0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double cur = f(i);
    acc += 0.5 * (prev + cur) * (g.r[i] - g.r[i - 1]);
    prev = cur;
  }
  // Beyond r_max with M held at its boundary value.
  const double R = g.r_max();
  if (state.M.back() > 0.0) {
    acc += std::exp(std::log(state.M.back()) - 0.5 * dd * std::log(4.0 * kPi * s) - R * R / (4.0 * s));
  }
  return acc;
}

RunResult run(const MassProfile& datum, FracOrder alpha, const GridSpec& spec, const SolverControls& controls) {
  GridSpec s = spec;
  if (!(s.r_max > 0.0)) s.r_max = default_r_max(datum);
  auto grid = std::make_shared<const SolverGrid>(make_grid(datum.dim(), s, datum.breakpoints()));
  return run(datum, alpha, grid, controls);
}

RunResult run(const MassProfile& datum, FracOrder alpha, std::shared_ptr<const SolverGrid> grid,
              const SolverControls& c) {
  if (!alpha.is_classical()) {
    throw DomainError("unsupported alpha: the solver integrates classical diffusion (alpha = 2) only");
  }
  if (!(c.t_end > 0.0)) throw_domain("t_end must be positive");
  if (c.stride < 1) throw_domain("output stride must be >= 1");
  RunResult out;
  out.grid = grid;
  out.infinite_mass = datum.infinite_mass();
  if (out.infinite_mass) {
    out.warnings.push_back("infinite-mass datum: M(r_max, t) is pinned to its initial value, "
                           "approximating the whole-space problem on [0, " + fmt(grid->r_max()) + "]");
  }
  SimState state = initial_state(grid, datum);
  const double M_end0 = state.M.back();
  out.density_cap = c.density_cap.value_or(state.origin_density > 0.0 ? 1e8 * state.origin_density : 1e8);
  out.dt_floor = c.dt_floor.value_or(1e-12 * c.t_end);
  if (c.probes.empty()) {
    for (double f : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) out.probe_radii.push_back(f * datum.characteristic_radius());
  } else {
    out.probe_radii = c.probes;
  }
  std::vector<double> outputs;
  for (double t : c.output_times) {
    if (t > 0.0 && t <= c.t_end) outputs.push_back(t);
  }
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
  std::size_t next_output = 0;

  StepTolerances tol{c.rtol, 1e-14 * std::max(std::abs(M_end0), 1e-300)};
  double h_min = grid->r[0] * (1.0 - grid->r[0] / grid->r[1]);
  for (std::size_t i = 1; i < grid->size(); ++i) h_min = std::min(h_min, grid->r[i] - grid->r[i - 1]);
  const double dt_max = c.integrator == Integrator::ExplicitRK ? 0.5 * h_min * h_min : c.t_end;

  auto record = [&](const SimState& st, bool blowup) {
    TrajectoryRow row;
    row.t = st.t;
    row.dt = st.dt;
    row.origin_density = st.origin_density;
    row.W = (c.T_target && st.t < *c.T_target) ? moment_W(st, *c.T_target) : kNaN;
    for (double p : out.probe_radii) row.probes.push_back(interpolate(*grid, st.M, p, out.infinite_mass));
    row.blowup = blowup;
    out.rows.push_back(std::move(row));
  };
  record(state, false);

  double dt = std::min(dt_max, 1e-8 * c.t_end);
  double min_density = state.origin_density;
  long since_record = 0;
  int inadmissible_run = 0;
  while (state.t < c.t_end) {
    if (out.accepted + out.rejected >= c.max_steps) {
      throw NumericalError("step budget of " + std::to_string(c.max_steps) + " exhausted at t=" + fmt(state.t));
    }
    double target = c.t_end;
    if (next_output < outputs.size()) target = std::min(target, outputs[next_output]);
    const double dt_try = std::min({dt, dt_max, target - state.t});
    const bool clipped = dt_try < dt;
    auto res = step(state, dt_try, c.integrator, tol);
    if (!res.admissible || !(res.error_norm <= 1.0)) {
      ++out.rejected;
      inadmissible_run = res.admissible ? 0 : inadmissible_run + 1;
      dt = res.admissible && std::isfinite(res.error_norm)
               ? dt_try * std::max(0.2, 0.9 / std::sqrt(res.error_norm))
               : 0.5 * dt_try;
      if (dt < out.dt_floor && state.origin_density >= 2.0 * min_density && state.origin_density > 0.0) {
        out.event = BlowupEvent{state.t, BlowupTrigger::StepFloor, state.origin_density};
        state.event = out.event;
        break;
      }
      // Short initial layers of singular data legitimately need steps below
      // dt_floor; only a collapse far below it is a resolution failure.
      if (dt < 1e-6 * out.dt_floor || inadmissible_run > 60) {
        throw NumericalError("resolution error: time step collapsed to " + fmt(dt) + " at t=" + fmt(state.t) +
                             " without growth of the origin density; refine the grid");
      }
      continue;
    }
    inadmissible_run = 0;
    ++out.accepted;
    state = std::move(res.next);
    if (next_output < outputs.size() && state.t >= outputs[next_output]) {
      state.t = outputs[next_output];
      out.snapshots.push_back({state.t, state.M});
      ++next_output;
    }
    min_density = std::min(min_density, state.origin_density);
    out.mass_drift = std::max(out.mass_drift, M_end0 > 0.0 ? std::abs(state.M.back() - M_end0) / M_end0 : 0.0);
    if (state.origin_density > out.density_cap) {
      out.event = BlowupEvent{state.t, BlowupTrigger::OriginDensityCap, state.origin_density};
      state.event = out.event;
      record(state, true);
      since_record = 0;
      break;
    }
    if (++since_record >= c.stride || state.t >= c.t_end) {
      record(state, false);
      since_record = 0;
    }
    const double grow = res.error_norm > 0.0 ? std::min(5.0, std::max(0.2, 0.9 / std::sqrt(res.error_norm))) : 5.0;
    const double proposal = dt_try * grow;
    dt = clipped ? std::max(dt, proposal) : proposal;
  }
  if (out.event && out.event->trigger == BlowupTrigger::StepFloor) record(state, true);
  out.final_state = std::move(state);
  return out;
}

ComparisonReport comparison_check(const MassProfile& low, const MassProfile& high, double t_end,
                                  const GridSpec& spec, int checks, int threads) {
  if (low.dim() != high.dim()) throw_domain("comparison needs data in the same dimension");
  if (checks < 1) throw_domain("comparison needs at least one check time");
  GridSpec s = spec;
  if (!(s.r_max > 0.0)) s.r_max = std::max(default_r_max(low), default_r_max(high));
  std::vector<double> bps(low.breakpoints().begin(), low.breakpoints().end());
  bps.insert(bps.end(), high.breakpoints().begin(), high.breakpoints().end());
  auto grid = std::make_shared<const SolverGrid>(make_grid(low.dim(), s, bps));

  ComparisonReport rep;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double tol0 = 1e-6 * std::max(high(grid->r.back()), 1e-300);
    if (low(grid->r[i]) > high(grid->r[i]) + tol0) {
      throw DomainError("comparison needs M_low <= M_high initially; violated at r=" + fmt(grid->r[i]));
    }
  }
  SolverControls ctl;
  ctl.t_end = t_end;
  ctl.stride = 1 << 30;
  for (int k = 1; k <= checks; ++k) ctl.output_times.push_back(t_end * k / checks);
  std::vector<RunResult> runs(2);
  parallel_for(2, threads, [&](std::size_t i) {
    runs[i] = run(i == 0 ? low : high, FracOrder::classical(), grid, ctl);
  });
  if (runs[0].event) rep.low_blowup = runs[0].event->detected_time;
  if (runs[1].event) rep.high_blowup = runs[1].event->detected_time;
  const std::size_t common = std::min(runs[0].snapshots.size(), runs[1].snapshots.size());
  for (std::size_t k = 0; k < common; ++k) {
    const auto& a = runs[0].snapshots[k].M;
    const auto& b = runs[1].snapshots[k].M;
    const double scale = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    const double tol = 1e-6 * scale;
    rep.tolerance = std::max(rep.tolerance, tol);
    ++rep.times_checked;
    rep.checked_until = runs[0].snapshots[k].t;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > b[i] + tol) {
        rep.ordered = false;
        rep.violation_time = runs[0].snapshots[k].t;
        rep.violation_radius = grid->r[i];
        rep.violation_amount = a[i] - b[i];
        return rep;
      }
    }
  }
  return rep;
}

TruncationScaling truncation_scaling(Dimension d, double eta, const std::vector<double>& radii,
                                     const GridSpec& spec, int threads) {
  if (radii.size() < 3) throw_domain("truncation scaling fit needs at least 3 radii");
  TruncationScaling out;
  out.radii = radii;
  std::sort(out.radii.begin(), out.radii.end());
  const double R_max = out.radii.back();
  GridSpec s = spec;
  if (!(s.r_max > 0.0)) s.r_max = 100.0 * R_max;
  out.blowup_times.assign(out.radii.size(), kNaN);
  parallel_for(out.radii.size(), threads, [&](std::size_t i) {
    const double R = out.radii[i];
    const auto datum = mass_from_density(make_truncated_chandrasekhar(d, eta, R, std::numeric_limits<double>::infinity()));
    const double bp[] = {R};
    auto grid = std::make_shared<const SolverGrid>(make_grid(d, s, bp));
    SolverControls ctl;
    ctl.t_end = 50.0 * R * R;
    ctl.stride = 1 << 30;
    const auto res = run(datum, FracOrder::classical(), grid, ctl);
    if (res.event) out.blowup_times[i] = res.event->detected_time;
  });
  for (std::size_t i = 0; i < out.radii.size(); ++i) {
    if (!std::isfinite(out.blowup_times[i])) {
      out.message = "no blowup detected for R=" + fmt(out.radii[i]) + " by t=" + fmt(50.0 * out.radii[i] * out.radii[i]);
      return out;
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(out.radii.size());
  for (std::size_t i = 0; i < out.radii.size(); ++i) {
    const double x = std::log(out.radii[i]), y = std::log(out.blowup_times[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  out.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.conclusive = true;
  return out;
}

}  // namespace ksblow
