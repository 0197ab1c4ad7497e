#include "ksblow/config.hpp"

#include <fstream>
#include <set>

#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"

namespace ksblow {

namespace {

using nlohmann::json;

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw DomainError("config " + path + ": expected an object");
  return j;
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw DomainError("config: unknown key '" + (path.empty() ? "" : path + ".") + it.key() + "' (allowed: " +
                        list + ")");
    }
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw DomainError("config " + path + ": expected a number, got " + j.dump());
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw DomainError("config " + path + ": expected an integer, got " + j.dump());
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw DomainError("config " + path + ": expected a string, got " + j.dump());
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw DomainError("config " + path + ": expected a boolean, got " + j.dump());
  return j.get<bool>();
}

std::optional<double> get_optional_number(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  return get_number(j, path);
}

std::vector<double> get_number_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw DomainError("config " + path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void parse_d_range(const std::string& s, int& lo, int& hi) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      lo = hi = std::stoi(s);
    } else {
      lo = std::stoi(s.substr(0, colon));
      hi = std::stoi(s.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw DomainError("d range '" + s + "': expected a:b with integers");
  }
  if (lo > hi) throw DomainError("d range '" + s + "': lower end exceeds upper end");
}

void apply_json(RunConfig& cfg, const json& j) {
  require_object(j, "root");
  check_keys(j, "", {"subcommand", "problem", "initial", "grid", "time", "output", "verify", "threads", "seed"});
  if (j.contains("subcommand")) cfg.subcommand = get_string(j["subcommand"], "subcommand");
  if (j.contains("threads")) cfg.threads = get_int(j["threads"], "threads");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw DomainError("config seed: expected a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("problem")) {
    const json& p = require_object(j["problem"], "problem");
    check_keys(p, "problem", {"d", "alpha", "T_target", "d_range", "alpha_list"});
    if (p.contains("d")) cfg.d = get_int(p["d"], "problem.d");
    if (p.contains("alpha")) cfg.alpha = get_number(p["alpha"], "problem.alpha");
    if (p.contains("T_target")) cfg.T_target = get_optional_number(p["T_target"], "problem.T_target");
    if (p.contains("d_range")) parse_d_range(get_string(p["d_range"], "problem.d_range"), cfg.d_min, cfg.d_max);
    if (p.contains("alpha_list")) cfg.alpha_list = get_number_list(p["alpha_list"], "problem.alpha_list");
  }
  if (j.contains("initial")) {
    const json& p = require_object(j["initial"], "initial");
    check_keys(p, "initial", {"profile"});
    if (p.contains("profile")) cfg.profile = get_string(p["profile"], "initial.profile");
  }
  if (j.contains("grid")) {
    const json& p = require_object(j["grid"], "grid");
    check_keys(p, "grid", {"r_max", "n", "inner_fraction", "uniform_patch"});
    if (p.contains("r_max")) cfg.grid.r_max = get_number(p["r_max"], "grid.r_max");
    if (p.contains("n")) cfg.grid.n = get_int(p["n"], "grid.n");
    if (p.contains("inner_fraction")) cfg.grid.inner_fraction = get_number(p["inner_fraction"], "grid.inner_fraction");
    if (p.contains("uniform_patch")) cfg.grid.uniform_patch = get_int(p["uniform_patch"], "grid.uniform_patch");
  }
  if (j.contains("time")) {
    const json& p = require_object(j["time"], "time");
    check_keys(p, "time", {"t_end", "density_cap", "dt_floor", "rtol", "integrator"});
    if (p.contains("t_end")) cfg.t_end = get_number(p["t_end"], "time.t_end");
    if (p.contains("density_cap")) cfg.density_cap = get_optional_number(p["density_cap"], "time.density_cap");
    if (p.contains("dt_floor")) cfg.dt_floor = get_optional_number(p["dt_floor"], "time.dt_floor");
    if (p.contains("rtol")) cfg.rtol = get_number(p["rtol"], "time.rtol");
    if (p.contains("integrator")) cfg.integrator = get_string(p["integrator"], "time.integrator");
  }
  if (j.contains("output")) {
    const json& p = require_object(j["output"], "output");
    check_keys(p, "output", {"path", "stride", "format", "svg", "probes"});
    if (p.contains("path")) cfg.out_dir = get_string(p["path"], "output.path");
    if (p.contains("stride")) cfg.stride = get_int(p["stride"], "output.stride");
    if (p.contains("format")) cfg.format = get_string(p["format"], "output.format");
    if (p.contains("svg")) cfg.svg = get_bool(p["svg"], "output.svg");
    if (p.contains("probes")) cfg.probes = get_number_list(p["probes"], "output.probes");
  }
  if (j.contains("verify")) {
    const json& p = require_object(j["verify"], "verify");
    check_keys(p, "verify", {"only"});
    if (p.contains("only")) {
      if (!p["only"].is_array()) throw DomainError("config verify.only: expected an array of strings");
      cfg.only.clear();
      for (std::size_t i = 0; i < p["only"].size(); ++i) {
        cfg.only.push_back(get_string(p["only"][i], "verify.only[" + std::to_string(i) + "]"));
      }
    }
  }
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig defaults) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError("config file " + path.string() + ": " + e.what());
  }
  apply_json(defaults, j);
  defaults.base_dir = std::filesystem::absolute(path).parent_path();
  return defaults;
}

json to_json(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["threads"] = c.threads;
  j["seed"] = c.seed;
  j["problem"] = {{"d", c.d},
                  {"alpha", c.alpha},
                  {"T_target", optional_json(c.T_target)},
                  {"d_range", std::to_string(c.d_min) + ":" + std::to_string(c.d_max)},
                  {"alpha_list", c.alpha_list}};
  std::string profile = c.profile;
  // Table paths are written absolute so the resolved file works from anywhere.
  if (!profile.empty() && !c.base_dir.empty() && profile.rfind("table(", 0) == 0) {
    const auto open = profile.find("path=");
    if (open != std::string::npos) {
      const auto close = profile.find_first_of(",)", open);
      std::filesystem::path p = profile.substr(open + 5, close - open - 5);
      if (p.is_relative()) profile.replace(open + 5, close - open - 5, (c.base_dir / p).lexically_normal().string());
    }
  }
  j["initial"] = {{"profile", profile}};
  j["grid"] = {{"r_max", c.grid.r_max},
               {"n", c.grid.n},
               {"inner_fraction", c.grid.inner_fraction},
               {"uniform_patch", c.grid.uniform_patch}};
  j["time"] = {{"t_end", c.t_end},
               {"density_cap", optional_json(c.density_cap)},
               {"dt_floor", optional_json(c.dt_floor)},
               {"rtol", c.rtol},
               {"integrator", c.integrator}};
  j["output"] = {{"path", c.out_dir}, {"stride", c.stride}, {"format", c.format}, {"svg", c.svg}, {"probes", c.probes}};
  j["verify"] = {{"only", c.only}};
  return j;
}

void validate(const RunConfig& c) {
  static const std::set<std::string> subs{"constants", "classify", "simulate", "kernel", "verify"};
  if (!subs.count(c.subcommand)) throw DomainError("unknown subcommand '" + c.subcommand + "'");
  if (c.threads < 1) throw DomainError("threads must be >= 1");
  if (c.format != "csv" && c.format != "json") throw DomainError("format must be csv or json (got " + c.format + ")");
  const auto check_alpha = [](double a) { (void)FracOrder(a); };
  if (c.subcommand == "constants") {
    (void)Dimension(c.d_min);
    (void)Dimension(c.d_max);
    if (c.alpha_list.empty()) throw DomainError("alpha list is empty");
    for (double a : c.alpha_list) check_alpha(a);
    return;
  }
  if (c.subcommand == "verify") return;
  const Dimension d(c.d);
  const FracOrder alpha(c.alpha);
  if (c.subcommand == "classify") {
    if (c.profile.empty()) throw DomainError("classify needs a profile (--profile or initial.profile)");
    if (!alpha.is_classical() && !(2.0 * alpha.value() < d.real())) {
      throw DomainError("fractional classification requires d >= 2 and 2*alpha < d (d=" + std::to_string(c.d) +
                        ", alpha=" + fmt(c.alpha) + ")");
    }
  }
  if (c.subcommand == "simulate") {
    if (!alpha.is_classical()) {
      throw DomainError("unsupported alpha: simulate integrates classical diffusion (alpha = 2) only");
    }
    if (c.profile.empty()) throw DomainError("simulate needs a profile (--profile or initial.profile)");
    if (!(c.t_end > 0.0)) throw DomainError("time.t_end must be positive");
    if (c.stride < 1) throw DomainError("output.stride must be >= 1");
    if (c.integrator != "rosenbrock" && c.integrator != "explicit") {
      throw DomainError("time.integrator must be rosenbrock or explicit (got " + c.integrator + ")");
    }
    if (c.T_target && !(*c.T_target > 0.0)) throw DomainError("problem.T_target must be positive");
    if (c.density_cap && !(*c.density_cap > 0.0)) throw DomainError("time.density_cap must be positive");
    if (c.dt_floor && !(*c.dt_floor > 0.0)) throw DomainError("time.dt_floor must be positive");
    if (!(c.rtol > 0.0 && c.rtol < 1.0)) throw DomainError("time.rtol must be in (0,1)");
  }
}

}  // namespace ksblow
