#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ksblow/cli.hpp"
#include "ksblow/config.hpp"
#include "ksblow/emit.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/profile_grammar.hpp"

using namespace ksblow;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ksblow");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "ksblow_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("profile grammar parses every kind") {
  const Dimension d(3);
  CHECK(parse_profile("chandrasekhar(eta=2.5)", d).describe() == "chandrasekhar(eta=2.5)");
  CHECK(parse_profile(" shell( N=30.0 , R=1.0 ) ", d).describe() == "shell(N=30,R=1)");
  CHECK(parse_profile("trunc_chandrasekhar(eta=2.5,rin=1.0,rout=50.0)", d).describe() ==
        "trunc_chandrasekhar(eta=2.5,rin=1,rout=50)");
  CHECK(parse_profile("trunc_chandrasekhar(eta=1,rin=1)", d).describe() == "trunc_chandrasekhar(eta=1,rin=1,rout=inf)");
  CHECK(parse_profile("gauss(mass=25.13,width=1.0)", d).describe() == "gauss(mass=25.13,width=1)");
  CHECK(parse_profile("exact_datum(T=1.0)", d).describe() == "exact_datum(T=1)");
  const auto spec = parse_profile_spec("gauss(width=2,mass=3)");
  CHECK(spec.kind == "gauss");
  CHECK(spec.params.at("mass") == "3");
}

TEST_CASE("profile grammar rejects malformed input") {
  const Dimension d(3);
  CHECK_THROWS_AS((void)parse_profile("gauss(mass=1)", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("gauss(mass=1,width=1,extra=2)", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("gauss(mass=x,width=1)", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("gauss(mass=1,mass=2)", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("blob(a=1)", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("gauss mass=1", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("shell(N=-1,R=1)", d), DomainError);
  CHECK_THROWS_AS((void)parse_profile("table(path=/nonexistent/file.csv)", d), DomainError);
}

TEST_CASE("table profiles load from CSV relative to the base directory") {
  const auto dir = scratch("table");
  {
    std::ofstream f(dir / "u.csv");
    f << "# radial density\nr,u\n0.5,2\n1.0,1\n2.0,0.25\n";
  }
  const auto p = parse_profile("table(path=u.csv)", Dimension(3), FracOrder::classical(), dir);
  CHECK(p.describe() == "table(n=3,rmin=0.5,rmax=2)");
  {
    std::ofstream f(dir / "bad.csv");
    f << "r,u\n0.5,2\n1.0\n";
  }
  CHECK_THROWS_AS((void)parse_profile("table(path=bad.csv)", Dimension(3), FracOrder::classical(), dir), DomainError);
}

TEST_CASE("config schema: unknown keys and wrong types name the key path") {
  RunConfig c;
  try {
    apply_json(c, nlohmann::json::parse(R"({"grid": {"nodes": 10}})"));
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("grid.nodes") != std::string::npos);
  }
  try {
    apply_json(c, nlohmann::json::parse(R"({"problem": {"alpha": "two"}})"));
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("problem.alpha") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_json(c, nlohmann::json::parse(R"({"colour": 1})")), DomainError);
  apply_json(c, nlohmann::json::parse(R"({"problem": {"d": 5, "T_target": 2.0}, "time": {"density_cap": null}})"));
  CHECK(c.d == 5);
  CHECK(*c.T_target == 2.0);
  CHECK_FALSE(c.density_cap.has_value());
}

TEST_CASE("config round trip through JSON") {
  RunConfig c;
  c.subcommand = "simulate";
  c.profile = "gauss(mass=20,width=1)";
  c.T_target = 3.0;
  c.grid.n = 321;
  c.dt_floor = 1e-9;
  c.probes = {0.5, 1.0};
  RunConfig back;
  apply_json(back, to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.grid.n == 321);
  CHECK(*back.dt_floor == 1e-9);
}

TEST_CASE("validation messages") {
  RunConfig c;
  c.subcommand = "classify";
  c.profile = "gauss(mass=1,width=1)";
  c.alpha = 2.5;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("alpha must be in (0,2]"), DomainError);
  c.alpha = 1.5;
  c.d = 3;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("2*alpha < d"), DomainError);
  c.subcommand = "simulate";
  c.alpha = 1.0;
  c.d = 4;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("unsupported alpha"), DomainError);
}

TEST_CASE("emitters") {
  Table t{{"a", "b"}, {}};
  CHECK(to_csv(t) == "a,b\n");
  CHECK(to_json(t).dump() == R"({"columns":["a","b"],"rows":[]})");
  t.rows.push_back({0.1, std::nan("")});
  t.rows.push_back({1e300, 2.0});
  CHECK(to_csv(t) == "a,b\n0.1,nan\n1e+300,2\n");
  CHECK(to_json(t)["rows"][0][1].is_null());
  PlotSpec p{"title <x>", "x", "y", true, true, {{"s", {1, 10, 100}, {1, 0, 5}}}, {2.0}};
  const auto svg = to_svg(p);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("title &lt;x&gt;") != std::string::npos);
  CHECK(svg == to_svg(p));
}

TEST_CASE("constants subcommand writes a fixed-header table") {
  const auto dir = scratch("constants");
  const auto r = cli({"constants", "--d-range", "2:6", "--alpha", "2", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "constants.csv");
  CHECK(csv.rfind("d,alpha,sigma_d,C,K,L,N_threshold,upper_bound\n", 0) == 0);
  CHECK(count_lines(csv) == 6);
  CHECK(fs::exists(dir / "resolved.json"));
}

TEST_CASE("classify subcommand") {
  const auto dir = scratch("classify");
  const auto r = cli({"classify", "--d", "3", "--alpha", "2", "--profile", "shell(N=100,R=1)", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "classify.json"));
  CHECK(j["verdict"]["name"] == "BlowupBy");
  CHECK(fs::exists(dir / "criterion_curve.csv"));
  CHECK(fs::exists(dir / "criterion_curve.svg"));
  CHECK(cli({"classify", "--d", "3", "--alpha", "2.5", "--profile", "gauss(mass=1,width=1)", "--out", dir.string()}).code == 1);
  const auto frac = cli({"classify", "--d", "3", "--alpha", "1.5", "--profile", "gauss(mass=1,width=1)", "--out", dir.string()});
  CHECK(frac.code == 1);
  CHECK(frac.err.find("2*alpha < d") != std::string::npos);
}

TEST_CASE("simulate subcommand is deterministic and reproducible from resolved.json") {
  const auto a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  const std::vector<std::string> args{"simulate", "--d", "3", "--profile", "gauss(mass=150,width=1)", "--n", "400",
                                      "--t-end", "0.5", "--T-target", "0.5", "--stride", "20"};
  auto with_out = [&](const fs::path& p) {
    auto v = args;
    v.push_back("--out");
    v.push_back(p.string());
    return v;
  };
  REQUIRE(cli(with_out(a)).code == 0);
  REQUIRE(cli(with_out(b)).code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  const auto header = slurp(a / "trajectory.csv").substr(0, slurp(a / "trajectory.csv").find('\n'));
  CHECK(header == "t,dt,origin_density,W,M_probe_1,M_probe_2,M_probe_3,M_probe_4,M_probe_5,M_probe_6,blowup_flag");
  REQUIRE(cli({"simulate", "--config", (a / "resolved.json").string(), "--out", c.string()}).code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(c / "trajectory.csv"));
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(summary.contains("event"));
  CHECK(cli({"simulate", "--d", "3", "--alpha", "1", "--profile", "gauss(mass=1,width=1)", "--out", a.string()}).code == 1);
}

TEST_CASE("simulate reports resolution failures as numerical errors") {
  const auto dir = scratch("sim_fail");
  const auto r = cli({"simulate", "--d", "3", "--profile", "trunc_chandrasekhar(eta=0.9,rin=0,rout=50)", "--t-end", "10",
                      "--dt-floor", "1", "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("resolution") != std::string::npos);
}

TEST_CASE("kernel subcommand") {
  const auto dir = scratch("kernel");
  REQUIRE(cli({"kernel", "--d", "3", "--alpha", "1", "--out", dir.string(), "--no-svg"}).code == 0);
  CHECK(slurp(dir / "kernel.csv").rfind("rho,R,Rp,Rpp\n", 0) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "kernel.json"));
  CHECK(std::abs(j["mass_residual"].get<double>()) < 1e-6);
  CHECK_FALSE(fs::exists(dir / "kernel.svg"));
}

TEST_CASE("verify subcommand exit codes") {
  const auto dir = scratch("verify");
  CHECK(cli({"verify", "--only", "AC-1", "--out", dir.string()}).code == 0);
  const auto bad = cli({"verify", "--only", "AC-1", "--perturb-c2", "1e-6", "--out", dir.string()});
  CHECK(bad.code == 3);
  CHECK(bad.out.find("AC-1   FAIL") != std::string::npos);
  CHECK(cli({"verify", "--only", "AC-99", "--out", dir.string()}).code == 1);
  CHECK(cli({"verify", "--only", "AC-6", "--format", "json", "--out", dir.string()}).code == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "verify.json"))[0]["status"] == "pass");
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"bogus"}).code == 1);
  CHECK(cli({"constants", "--format", "xml"}).code == 1);
}
