#pragma once

// Run configuration: JSON sections problem / initial / grid / time / output /
// verify, merged as flags > file > defaults. Unknown keys are hard errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ksblow/solver.hpp"

namespace ksblow {

struct RunConfig {
  std::string subcommand;  // constants | classify | simulate | kernel | verify

  // problem
  int d = 3;
  double alpha = 2.0;
  std::optional<double> T_target;
  int d_min = 2, d_max = 6;            // constants sweep
  std::vector<double> alpha_list{2.0};  // constants sweep

  // initial
  std::string profile;

  // grid
  GridSpec grid;

  // time
  double t_end = 1.0;
  std::optional<double> density_cap;
  std::optional<double> dt_floor;
  double rtol = 1e-6;
  std::string integrator = "rosenbrock";  // rosenbrock | explicit

  // output
  std::string out_dir = "ksblow_out";
  int stride = 1;
  std::string format = "csv";  // csv | json
  bool svg = true;
  std::vector<double> probes;  // empty: defaults from the datum

  // verify
  std::vector<std::string> only;

  int threads = 1;
  std::uint64_t seed = 0;  // reserved; every computation is deterministic

  /// Directory that relative table paths resolve against (not serialized).
  std::filesystem::path base_dir;
};

/// Overlays the keys present in `j` onto `cfg`. Errors name the key path.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

/// Reads a JSON config file; relative table paths resolve next to it.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig defaults = {});

/// Complete config in the file schema; re-reading it reproduces the run.
nlohmann::json to_json(const RunConfig& cfg);

/// Semantic checks for the chosen subcommand (ranges, alpha rules, profile presence).
void validate(const RunConfig& cfg);

/// "d_min:d_max" parser shared by flags and files.
void parse_d_range(const std::string& s, int& lo, int& hi);

}  // namespace ksblow
