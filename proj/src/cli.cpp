#include "ksblow/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>

#include "ksblow/acceptance.hpp"
#include "ksblow/config.hpp"
#include "ksblow/criteria.hpp"
#include "ksblow/emit.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"
#include "ksblow/kernels.hpp"
#include "ksblow/profile_grammar.hpp"
#include "ksblow/solver.hpp"

namespace ksblow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Values given on the command line; unset ones leave the config untouched.
struct Flags {
  std::string config;
  std::optional<int> d, n, stride, threads, uniform_patch;
  std::optional<std::string> alpha, d_range, profile, out, format, integrator;
  std::optional<double> T_target, r_max, inner_fraction, t_end, density_cap, dt_floor, rtol;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> only;
  std::vector<double> probes;
  bool no_svg = false;
  double perturb_c2 = 0.0;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw DomainError("expected a comma-separated list of numbers, got '" + s + "'");
    }
  }
  if (out.empty()) throw DomainError("empty number list");
  return out;
}

RunConfig merge(const std::string& sub, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config_file(f.config);
  c.subcommand = sub;
  if (f.d) c.d = *f.d;
  if (f.alpha) {
    const auto v = parse_list(*f.alpha);
    if (sub == "constants") {
      c.alpha_list = v;
    } else {
      if (v.size() != 1) throw DomainError("--alpha takes a single value for " + sub);
      c.alpha = v[0];
    }
  }
  if (f.d_range) parse_d_range(*f.d_range, c.d_min, c.d_max);
  if (f.profile) {
    c.profile = *f.profile;
    c.base_dir = fs::current_path();
  }
  if (f.T_target) c.T_target = f.T_target;
  if (f.r_max) c.grid.r_max = *f.r_max;
  if (f.n) c.grid.n = *f.n;
  if (f.inner_fraction) c.grid.inner_fraction = *f.inner_fraction;
  if (f.uniform_patch) c.grid.uniform_patch = *f.uniform_patch;
  if (f.t_end) c.t_end = *f.t_end;
  if (f.density_cap) c.density_cap = f.density_cap;
  if (f.dt_floor) c.dt_floor = f.dt_floor;
  if (f.rtol) c.rtol = *f.rtol;
  if (f.integrator) c.integrator = *f.integrator;
  if (f.stride) c.stride = *f.stride;
  if (!f.probes.empty()) c.probes = f.probes;
  if (f.no_svg) c.svg = false;
  if (f.out) c.out_dir = *f.out;
  if (f.format) c.format = *f.format;
  if (f.threads) c.threads = *f.threads;
  if (f.seed) c.seed = *f.seed;
  if (!f.only.empty()) {
    c.only.clear();
    for (const auto& o : f.only) {
      std::stringstream ss(o);
      std::string item;
      while (std::getline(ss, item, ',')) c.only.push_back(item);
    }
  }
  if (c.base_dir.empty()) c.base_dir = fs::current_path();
  validate(c);
  return c;
}

void write_table(const RunConfig& c, const std::string& stem, const Table& t) {
  const fs::path dir(c.out_dir);
  if (c.format == "json") {
    write_file(dir / (stem + ".json"), dump(to_json(t)));
  } else {
    write_file(dir / (stem + ".csv"), to_csv(t));
  }
}

std::string table_name(const RunConfig& c, const std::string& stem) {
  return (fs::path(c.out_dir) / (stem + (c.format == "json" ? ".json" : ".csv"))).string();
}

json constants_json(const CriterionConstants& k) {
  json j{{"d", k.d.value()},
         {"alpha", k.alpha.value()},
         {"sigma_d", sigma_d(k.d)},
         {"C", json_number(k.C)},
         {"L", json_number(k.L)},
         {"N_threshold", json_number(k.N_threshold)}};
  j["K"] = k.K ? json_number(k.K->value) : json(nullptr);
  j["K_closed_form"] = k.K ? json_number(k.K->closed_form) : json(nullptr);
  j["upper_bound"] = k.upper_bound ? json_number(*k.upper_bound) : json(nullptr);
  return j;
}

int cmd_constants(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Table t{{"d", "alpha", "sigma_d", "C", "K", "L", "N_threshold", "upper_bound"}, {}};
  for (int d = c.d_min; d <= c.d_max; ++d) {
    for (double a : c.alpha_list) {
      try {
        const auto k = criterion_constants(Dimension(d), FracOrder(a), c.threads);
        t.rows.push_back({static_cast<double>(d), a, sigma_d(Dimension(d)), k.C, k.K ? k.K->value : kNaN, k.L,
                          k.N_threshold, k.upper_bound.value_or(kNaN)});
      } catch (const DomainError& e) {
        err << "skipping d=" << d << ", alpha=" << fmt(a) << ": " << e.what() << "\n";
      }
    }
  }
  write_table(c, "constants", t);
  out << to_csv(t);
  return 0;
}

json verdict_json(const Verdict& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, verdict::BlowupBy>) {
          return {{"name", "BlowupBy"}, {"T_star", json_number(x.T_star)}, {"margin", json_number(x.margin)}};
        } else if constexpr (std::is_same_v<T, verdict::GlobalBelowSingular>) {
          return {{"name", "GlobalBelowSingular"}, {"epsilon", json_number(x.epsilon)}};
        } else {
          return {{"name", "Indeterminate"},
                  {"blowup_gap", json_number(x.blowup_gap)},
                  {"global_gap", json_number(x.global_gap)},
                  {"diagnostics", x.diagnostics}};
        }
      },
      v);
}

int cmd_classify(const RunConfig& c, std::ostream& out) {
  const Dimension d(c.d);
  const FracOrder alpha(c.alpha);
  const auto profile = parse_profile(c.profile, d, alpha, c.base_dir);
  ClassifyOptions o;
  o.threads = c.threads;
  const auto rep = classify(profile, alpha, o);

  Table curve{{"T", "value"}, {}};
  PlotSeries s{"T W0(T)", {}, {}};
  for (const auto& p : rep.curve.samples) {
    curve.rows.push_back({p.T, p.value});
    s.x.push_back(p.T);
    s.y.push_back(p.value);
  }
  write_table(c, "criterion_curve", curve);
  if (c.svg) {
    PlotSpec plot{"criterion curve " + profile.describe(), "T", "T W0(T)", true, false, {s}, {rep.constants.C}};
    write_file(fs::path(c.out_dir) / "criterion_curve.svg", to_svg(plot));
  }
  json j;
  j["profile"] = profile.describe();
  j["d"] = c.d;
  j["alpha"] = c.alpha;
  j["verdict"] = verdict_json(rep.verdict);
  j["constants"] = constants_json(rep.constants);
  j["datum"] = {{"concentration", json_number(rep.datum.concentration.value)},
                {"concentration_radius", json_number(rep.datum.concentration.attained_radius)},
                {"concentration_infinite", rep.datum.concentration.infinite},
                {"total_mass", rep.datum.total_mass ? json_number(*rep.datum.total_mass) : json(nullptr)},
                {"epsilon", rep.datum.epsilon ? json_number(*rep.datum.epsilon) : json(nullptr)}};
  j["curve"] = {{"sup", json_number(rep.curve.sup)},
                {"argsup", json_number(rep.curve.argsup)},
                {"unimodal", rep.curve.unimodal},
                {"path", table_name(c, "criterion_curve")}};
  j["warnings"] = rep.warnings;
  write_file(fs::path(c.out_dir) / "classify.json", dump(j));
  out << profile.describe() << ": " << verdict_name(rep.verdict);
  if (const auto* b = std::get_if<verdict::BlowupBy>(&rep.verdict)) out << " T*=" << fmt(b->T_star);
  out << " (C=" << fmt(rep.constants.C) << ", sup=" << fmt(rep.curve.sup) << ")\n";
  for (const auto& w : rep.warnings) out << "warning: " << w << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const Dimension d(c.d);
  const auto profile = parse_profile(c.profile, d, FracOrder::classical(), c.base_dir);
  const auto datum = mass_from_density(profile);
  SolverControls ctl;
  ctl.t_end = c.t_end;
  ctl.density_cap = c.density_cap;
  ctl.dt_floor = c.dt_floor;
  ctl.rtol = c.rtol;
  ctl.integrator = c.integrator == "explicit" ? Integrator::ExplicitRK : Integrator::Rosenbrock;
  ctl.T_target = c.T_target;
  ctl.probes = c.probes;
  ctl.stride = c.stride;
  const auto res = run(datum, FracOrder::classical(), c.grid, ctl);

  Table t{{"t", "dt", "origin_density", "W"}, {}};
  for (std::size_t k = 1; k <= res.probe_radii.size(); ++k) t.header.push_back("M_probe_" + std::to_string(k));
  t.header.push_back("blowup_flag");
  for (const auto& row : res.rows) {
    std::vector<double> v{row.t, row.dt, row.origin_density, row.W};
    v.insert(v.end(), row.probes.begin(), row.probes.end());
    v.push_back(row.blowup ? 1.0 : 0.0);
    t.rows.push_back(std::move(v));
  }
  write_table(c, "trajectory", t);
  if (c.svg) {
    PlotSeries s{"origin density", {}, {}};
    for (const auto& row : res.rows) {
      s.x.push_back(row.t);
      s.y.push_back(row.origin_density);
    }
    PlotSpec plot{"simulation " + profile.describe(), "t", "u(0,t)", false, true, {s}, {}};
    write_file(fs::path(c.out_dir) / "trajectory.svg", to_svg(plot));
  }
  json j;
  j["profile"] = profile.describe();
  j["d"] = c.d;
  j["grid"] = {{"n", res.grid->size()}, {"r_1", res.grid->r.front()}, {"r_max", res.grid->r_max()}};
  j["probe_radii"] = res.probe_radii;
  j["t_end"] = c.t_end;
  j["final_time"] = res.final_state.t;
  j["density_cap"] = res.density_cap;
  j["dt_floor"] = res.dt_floor;
  j["accepted_steps"] = res.accepted;
  j["rejected_steps"] = res.rejected;
  j["mass_drift"] = res.mass_drift;
  j["infinite_mass"] = res.infinite_mass;
  if (res.event) {
    j["event"] = {{"detected_time", res.event->detected_time},
                  {"trigger", trigger_name(res.event->trigger)},
                  {"origin_density", json_number(res.event->origin_density)}};
  } else {
    j["event"] = nullptr;
  }
  j["trajectory_path"] = table_name(c, "trajectory");
  j["warnings"] = res.warnings;
  write_file(fs::path(c.out_dir) / "summary.json", dump(j));
  out << profile.describe() << ": ";
  if (res.event) {
    out << "blowup detected at t=" << fmt(res.event->detected_time) << " (" << trigger_name(res.event->trigger)
        << ")\n";
  } else {
    out << "no blowup up to t=" << fmt(res.final_state.t) << "\n";
  }
  for (const auto& w : res.warnings) out << "warning: " << w << "\n";
  return 0;
}

int cmd_kernel(const RunConfig& c, std::ostream& out) {
  const Dimension d(c.d);
  const FracOrder alpha(c.alpha);
  const auto table = kernel_R(d, alpha, {}, c.threads);
  const auto v = validate_kernel(table);
  Table t{{"rho", "R", "Rp", "Rpp"}, {}};
  for (std::size_t i = 0; i < table.rho.size(); ++i) t.rows.push_back({table.rho[i], table.R[i], table.Rp[i], table.Rpp[i]});
  write_table(c, "kernel", t);
  auto fit = [](const TailFit& f) {
    return json{{"coefficient", json_number(f.coefficient)}, {"exponent", json_number(f.exponent)}, {"algebraic", f.algebraic}};
  };
  json j{{"d", c.d},
         {"alpha", c.alpha},
         {"R0", table.R0},
         {"mass_residual", v.mass_residual},
         {"derivative_residual", v.derivative_residual},
         {"tail_checked", v.tail_checked},
         {"tail_exponent_error", {{"R", v.tail_exponent_error_R}, {"Rp", v.tail_exponent_error_Rp}, {"Rpp", v.tail_exponent_error_Rpp}}},
         {"tail_fits", {{"R", fit(table.tail_R)}, {"Rp", fit(table.tail_Rp)}, {"Rpp", fit(table.tail_Rpp)}}},
         {"derivative_negative", v.derivative_negative},
         {"convexity_ok", v.convexity_ok},
         {"weighted_monotone", v.weighted_monotone},
         {"underflow_points", v.underflow_points},
         {"failures", v.failures},
         {"table_path", table_name(c, "kernel")}};
  write_file(fs::path(c.out_dir) / "kernel.json", dump(j));
  if (c.svg) {
    PlotSeries s{"R", table.rho, table.R};
    PlotSpec plot{"radial kernel d=" + std::to_string(c.d) + " alpha=" + fmt(c.alpha), "rho", "R(rho)", true, true, {s}, {}};
    write_file(fs::path(c.out_dir) / "kernel.svg", to_svg(plot));
  }
  out << "kernel d=" << c.d << " alpha=" << fmt(c.alpha) << ": " << table.rho.size() << " points, mass residual "
      << fmt(v.mass_residual) << ", derivative residual " << fmt(v.derivative_residual)
      << (v.passed() ? ", checks pass\n" : ", checks FAIL\n");
  for (const auto& f : v.failures) out << "failure: " << f << "\n";
  return v.passed() ? 0 : 2;
}

int cmd_verify(const RunConfig& c, const Flags& f, std::ostream& out) {
  AcceptanceOptions o;
  o.threads = c.threads;
  o.c2_perturbation = f.perturb_c2;
  const auto results = run_acceptance(c.only, o);
  int failed = 0;
  for (const auto& r : results) {
    out << format_line(r) << "\n";
    failed += r.passed ? 0 : 1;
  }
  const fs::path dir(c.out_dir);
  if (c.format == "json") {
    write_file(dir / "verify.json", dump(to_json(results)));
  } else {
    write_file(dir / "verify.csv", to_csv(results));
  }
  out << results.size() - failed << "/" << results.size() << " acceptance items pass\n";
  return failed == 0 ? 0 : 3;
}

void add_common(CLI::App* s, Flags& f) {
  s->add_option("--config", f.config, "JSON config file (flags override it)");
  s->add_option("--threads", f.threads, "worker threads");
  s->add_option("--out", f.out, "output directory");
  s->add_option("--format", f.format, "table format: csv or json");
  s->add_option("--seed", f.seed, "reserved; all computations are deterministic");
  s->add_flag("--no-svg", f.no_svg, "skip SVG plots");
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blowup criteria, kernels and simulations for radial chemotaxis-type aggregation"};
  app.require_subcommand(1);
  Flags f;

  auto* constants = app.add_subcommand("constants", "table of C, K, L and threshold N over d and alpha");
  add_common(constants, f);
  constants->add_option("--d-range", f.d_range, "dimensions a:b");
  constants->add_option("--alpha", f.alpha, "comma-separated alpha list");

  auto* classify_cmd = app.add_subcommand("classify", "blowup / global verdict for a radial datum");
  add_common(classify_cmd, f);
  classify_cmd->add_option("--d", f.d, "space dimension");
  classify_cmd->add_option("--alpha", f.alpha, "diffusion order in (0,2]");
  classify_cmd->add_option("--profile", f.profile, "datum, e.g. chandrasekhar(eta=2.5)");

  auto* simulate = app.add_subcommand("simulate", "integrate the radial mass equation (alpha = 2)");
  add_common(simulate, f);
  simulate->add_option("--d", f.d, "space dimension");
  simulate->add_option("--alpha", f.alpha, "must be 2");
  simulate->add_option("--profile", f.profile, "datum, e.g. exact_datum(T=1)");
  simulate->add_option("--T-target", f.T_target, "target time for the moment W(t)");
  simulate->add_option("--r-max", f.r_max, "outer radius (default 100 x characteristic radius)");
  simulate->add_option("--n", f.n, "node count");
  simulate->add_option("--inner-fraction", f.inner_fraction, "r_1 / r_max");
  simulate->add_option("--uniform-patch", f.uniform_patch, "uniformly spaced inner nodes");
  simulate->add_option("--t-end", f.t_end, "final time");
  simulate->add_option("--density-cap", f.density_cap, "origin density declaring blowup");
  simulate->add_option("--dt-floor", f.dt_floor, "step size floor for StepFloor detection");
  simulate->add_option("--rtol", f.rtol, "relative error tolerance per step");
  simulate->add_option("--integrator", f.integrator, "rosenbrock or explicit");
  simulate->add_option("--stride", f.stride, "record every n-th accepted step");
  simulate->add_option("--probes", f.probes, "probe radii")->delimiter(',');

  auto* kernel = app.add_subcommand("kernel", "tabulate the radial fractional heat kernel");
  add_common(kernel, f);
  kernel->add_option("--d", f.d, "space dimension");
  kernel->add_option("--alpha", f.alpha, "diffusion order in (0,2]");

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  add_common(verify, f);
  verify->add_option("--only", f.only, "criterion ids, e.g. AC-5");
  verify->add_option("--perturb-c2", f.perturb_c2, "offset added to C(2) (harness self-test)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = merge(sub, f);
    write_file(fs::path(cfg.out_dir) / "resolved.json", dump(to_json(cfg)));
    if (sub == "constants") return cmd_constants(cfg, out, err);
    if (sub == "classify") return cmd_classify(cfg, out);
    if (sub == "simulate") return cmd_simulate(cfg, out);
    if (sub == "kernel") return cmd_kernel(cfg, out);
    return cmd_verify(cfg, f, out);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace ksblow
