#pragma once

// Text form of initial data: `kind(param=value,...)`, e.g.
//   chandrasekhar(eta=2.5)             trunc_chandrasekhar(eta=2.5,rin=1,rout=50)
//   gauss(mass=25.13,width=1)          shell(N=30,R=1)
//   exact_datum(T=1)                   table(path=data.csv)

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ksblow/radial_core.hpp"

namespace ksblow {

struct ProfileSpec {
  std::string kind;
  std::map<std::string, std::string> params;  // raw values, in key order
};

/// Splits the text into kind and parameters. Throws DomainError on syntax
/// errors and duplicate keys.
ProfileSpec parse_profile_spec(std::string_view text);

/// Builds the profile. Relative table paths resolve against `base_dir`.
RadialProfile parse_profile(std::string_view text, Dimension d, FracOrder alpha = FracOrder::classical(),
                            const std::filesystem::path& base_dir = {});

/// Two-column (r, u) CSV; blank lines, '#' comments and one non-numeric
/// header line are skipped.
void read_table_csv(const std::filesystem::path& path, std::vector<double>& r, std::vector<double>& u);

}  // namespace ksblow
