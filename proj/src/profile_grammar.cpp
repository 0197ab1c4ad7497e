#include "ksblow/profile_grammar.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ksblow/errors.hpp"

namespace ksblow {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool parse_number(const std::string& s, double& out) {
  if (s == "inf" || s == "+inf") return out = std::numeric_limits<double>::infinity(), true;
  const char* end = s.data() + s.size();
  const char* begin = s.data() + (!s.empty() && s[0] == '+' ? 1 : 0);
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

double number(const ProfileSpec& spec, const std::string& key) {
  const auto it = spec.params.find(key);
  if (it == spec.params.end()) throw DomainError("profile " + spec.kind + ": missing parameter '" + key + "'");
  double v = 0.0;
  if (!parse_number(it->second, v)) {
    throw DomainError("profile " + spec.kind + ": parameter '" + key + "' expects a number, got '" + it->second + "'");
  }
  return v;
}

void expect_keys(const ProfileSpec& spec, std::initializer_list<const char*> keys) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : spec.params) {
    if (!allowed.count(k)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw DomainError("profile " + spec.kind + ": unknown parameter '" + k + "' (expected " + list + ")");
    }
  }
}

}  // namespace

ProfileSpec parse_profile_spec(std::string_view text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw DomainError("profile '" + s + "': expected kind(param=value,...)");
  }
  ProfileSpec spec;
  spec.kind = trim(std::string_view(s).substr(0, open));
  if (spec.kind.empty()) throw DomainError("profile '" + s + "': missing kind");
  const std::string body = s.substr(open + 1, s.size() - open - 2);
  if (trim(body).empty()) return spec;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DomainError("profile '" + s + "': expected key=value, got '" + trim(item) + "'");
    std::string key = trim(std::string_view(item).substr(0, eq));
    std::string value = trim(std::string_view(item).substr(eq + 1));
    if (key.empty() || value.empty()) throw DomainError("profile '" + s + "': empty key or value in '" + trim(item) + "'");
    if (!spec.params.emplace(key, value).second) throw DomainError("profile '" + s + "': duplicate key '" + key + "'");
  }
  return spec;
}

void read_table_csv(const std::filesystem::path& path, std::vector<double>& r, std::vector<double>& u) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open table file " + path.string());
  r.clear();
  u.clear();
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto comma = t.find(',');
    double a = 0.0, b = 0.0;
    const bool ok = comma != std::string::npos && parse_number(trim(t.substr(0, comma)), a) &&
                    parse_number(trim(t.substr(comma + 1)), b);
    if (!ok) {
      if (!header_seen && r.empty()) {
        header_seen = true;
        continue;
      }
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected two numbers 'r,u'");
    }
    r.push_back(a);
    u.push_back(b);
  }
  if (r.empty()) throw DomainError("table file " + path.string() + " has no data rows");
}

RadialProfile parse_profile(std::string_view text, Dimension d, FracOrder alpha, const std::filesystem::path& base_dir) {
  const ProfileSpec spec = parse_profile_spec(text);
  const std::string& k = spec.kind;
  if (k == "chandrasekhar") {
    expect_keys(spec, {"eta"});
    return make_chandrasekhar(d, number(spec, "eta"), alpha);
  }
  if (k == "trunc_chandrasekhar") {
    expect_keys(spec, {"eta", "rin", "rout"});
    const double rout = spec.params.count("rout") ? number(spec, "rout") : std::numeric_limits<double>::infinity();
    const double rin = spec.params.count("rin") ? number(spec, "rin") : 0.0;
    return make_truncated_chandrasekhar(d, number(spec, "eta"), rin, rout, alpha);
  }
  if (k == "gauss") {
    expect_keys(spec, {"mass", "width"});
    return make_gaussian(d, number(spec, "mass"), number(spec, "width"));
  }
  if (k == "shell") {
    expect_keys(spec, {"N", "R"});
    return make_shell(d, number(spec, "N"), number(spec, "R"));
  }
  if (k == "exact_datum") {
    expect_keys(spec, {"T"});
    return make_exact_datum(d, number(spec, "T"));
  }
  if (k == "table") {
    expect_keys(spec, {"path"});
    std::filesystem::path p = spec.params.count("path") ? spec.params.at("path") : "";
    if (p.empty()) throw DomainError("profile table: missing parameter 'path'");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    std::vector<double> r, u;
    read_table_csv(p, r, u);
    return make_tabulated(d, std::move(r), std::move(u));
  }
  throw DomainError("unknown profile kind '" + k +
                    "' (expected chandrasekhar, trunc_chandrasekhar, gauss, shell, exact_datum, table)");
}

}  // namespace ksblow
