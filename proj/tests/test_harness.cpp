#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ionlab/config.hpp"
#include "ionlab/harness.hpp"

using namespace ionlab;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ionlab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* small_hartree = R"({
  "scenario": "small",
  "Z": 1,
  "grid": {"n": 400, "r_max": 40},
  "initial": {"type": "gaussian", "center": 4, "width": 1.5, "mass": 1},
  "propagator": {"dt": 2e-3, "steps": 300, "record_every": 5},
  "R_list": [2, 5],
  "T_list": [0.3, 0.6]
})";

}  // namespace

TEST_CASE("a minimal config takes the documented defaults") {
  const auto c = parse_config(R"({"Z": 2})");
  CHECK(c.name == "scenario");
  CHECK(c.model == "hartree");
  CHECK(c.n == 2000);
  CHECK(c.r_max == 40.0);
  CHECK(c.R_list == std::vector<double>{5.0, 10.0, 20.0});
  CHECK(c.T_list == std::vector<double>{c.propagator.total_time()});
  CHECK(c.propagator.scales == c.R_list);
  CHECK(c.raw == R"({"Z": 2})");
}

TEST_CASE("config errors name the offending field") {
  CHECK(error_of(R"({"Z": 1, "grid": {"n": 100, "rmax": 3}})") == "grid.rmax: unknown field");
  CHECK(error_of(R"({"Z": 1, "grid": {"n": -4}})") == "grid.n: expected a nonnegative integer");
  CHECK(error_of(R"({"Z": 0})") == "Z: must be positive");
  CHECK(error_of(R"({"Z": "one"})") == "Z: expected a number");
  CHECK(error_of(R"({"Z": 1, "initial": {"type": "gaussian", "width": 0}})") == "initial.width: must be positive");
  CHECK(error_of(R"({"Z": 1, "R_list": [1, "x"]})") == "R_list[1]: expected a number");
  CHECK(error_of(R"({"Z": 1, "checks": ["nope"]})") == "checks: unknown check 'nope'");
  CHECK(error_of(R"({"Z": 1, "propagator": {"absorber": {"start_radius": 5}}})") ==
        "propagator.absorber.start_radius: must lie in [r_max/2, r_max)");
  CHECK(error_of(R"({"Z": 1, "groundstate": {"N_list": [2, 1]}})") == "groundstate.N_list: must be ascending");
  CHECK(error_of("{not json").rfind("config: invalid JSON", 0) == 0);
  CHECK(error_of(R"({"Z": 1, "extra": 3})") == "extra: unknown field");
}

TEST_CASE("default scales adapt to the box, explicit ones are checked") {
  CHECK(parse_config(R"({"Z": 1, "grid": {"n": 400, "r_max": 30}})").R_list == std::vector<double>{5.0, 10.0});
  CHECK(parse_config(R"({"Z": 1, "grid": {"n": 400, "r_max": 6}})").R_list == std::vector<double>{3.0});
}

TEST_CASE("a scale beyond r_max/2 is rejected") {
  CHECK(error_of(R"({"Z": 1, "grid": {"n": 400, "r_max": 20}, "R_list": [15]})") ==
        "R_list: scale 15 exceeds r_max/2 = 10");
  CHECK_NOTHROW(parse_config(R"({"Z": 1, "grid": {"n": 400, "r_max": 20}, "R_list": [10]})"));
}

TEST_CASE("horizons must fit inside the run") {
  CHECK(error_of(R"({"Z": 1, "propagator": {"dt": 0.01, "steps": 100}, "T_list": [2]})") ==
        "T_list: every horizon must lie in (0, dt * steps]");
  CHECK_NOTHROW(parse_config(R"({"Z": 1, "propagator": {"dt": 0.01, "steps": 100}, "T_list": [1]})"));
}

TEST_CASE("model and initial state must agree") {
  CHECK(error_of(R"({"Z": 1, "initial": {"type": "hf_orbitals", "widths": [1, 2]}})") ==
        "initial.type: hf_orbitals goes with model hartree_fock and only with it");
  CHECK(error_of(R"({"Z": 1, "model": "hartree_fock"})") ==
        "initial.type: hf_orbitals goes with model hartree_fock and only with it");
  CHECK(error_of(R"({"Z": 1, "model": "hartree_fock", "initial": {"type": "hf_orbitals", "widths": [1]},
                     "propagator": {"absorber": {"start_radius": 30}}})") ==
        "propagator.absorber: is only available for model hartree");
  CHECK(error_of(R"({"Z": 1, "model": "hartree_fock", "initial": {"type": "hf_orbitals", "widths": [1, 2],
                     "occupations": [1]}})") == "initial.occupations: needs one entry per width");
}

TEST_CASE("state CSV round-trips through the file initial state") {
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  const auto g = build_grid(200, 20.0);
  auto psi = from_profile(g, [](double r) { return std::polar(std::exp(-r), 0.3 * r); });
  {
    std::ofstream os(dir / "state.csv");
    write_state_csv(os, psi);
  }
  const auto back = read_state_csv((dir / "state.csv").string(), g);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(back.v[j] - psi.v[j]) < 1e-15 * std::abs(psi.v[0]) + 1e-300);
  const auto c = parse_config(R"({"Z": 1, "grid": {"n": 200, "r_max": 20}, "initial": {"type": "file", "path": ")" +
                              (dir / "state.csv").string() + R"(", "mass": 2}})");
  CHECK(mass(build_initial_state(c)) == Approx(2.0));
  CHECK_THROWS_AS(read_state_csv((dir / "state.csv").string(), build_grid(100, 20.0)), ConfigError);
  CHECK_THROWS_AS(read_state_csv((dir / "missing.csv").string(), g), ConfigError);
}

TEST_CASE("a Hartree scenario writes its artifacts and echoes the config") {
  const auto dir = scratch("hartree");
  const auto c = parse_config(small_hartree);
  const auto out = run_scenario(c, dir);
  for (const char* f : {"observables.csv", "diagnostics.csv", "bounds.json", "manifest.json", "config.json"})
    CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "config.json") == small_hartree);
  const auto manifest = ojson::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"].get<std::string>() == small_hartree);
  CHECK(manifest["scenario"] == "small");
  CHECK(manifest["version"] == version);
  const auto bounds = ojson::parse(slurp(dir / "bounds.json"));
  CHECK(bounds["pass"] == true);
  CHECK(bounds["checks"].size() == out.checks.size());
  CHECK(out.exit_code() == 0);
  // 2 drift checks, then per R and T a mass and a kinetic average, a uniform kinetic check per T
  // for the first R only, and per R monotonicity and the identity
  CHECK(out.checks.size() == 2 + (4 + 2 + 2) + (4 + 2));
}

TEST_CASE("reruns are byte-identical") {
  const auto c = parse_config(small_hartree);
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_scenario(c, a);
  run_scenario(c, b);
  for (const char* f : {"observables.csv", "diagnostics.csv", "bounds.json", "manifest.json"})
    CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("check selection limits the report") {
  auto c = parse_config(R"({"Z": 1, "grid": {"n": 400, "r_max": 40},
    "initial": {"type": "gaussian", "center": 4, "width": 1.5},
    "propagator": {"dt": 2e-3, "steps": 100, "record_every": 5}, "R_list": [5], "checks": ["conservation"]})");
  const auto out = run_scenario(c, scratch("select"));
  REQUIRE(out.checks.size() == 2);
  CHECK(out.checks[0].name == "mass_drift");
  CHECK(out.checks[1].name == "energy_drift");
}

TEST_CASE("a tightened tolerance turns a gating check into exit status 1") {
  const auto c = parse_config(small_hartree);
  RunOptions opt;
  opt.tol_scale = 1e-12;
  const auto out = run_scenario(c, scratch("tight"), opt);
  CHECK(out.blocked());
  CHECK(out.exit_code() == 1);
  CHECK_THROWS_AS(Tolerances::scaled(0.0), std::invalid_argument);
}

TEST_CASE("blocking rule honours gating and reflection") {
  auto c = scalar_check("x", 2.0, 1.0);
  CHECK(c.blocks());
  c.flags.push_back("reflection");
  CHECK_FALSE(c.blocks());
  auto d = scalar_check("y", 2.0, 1.0, false);
  CHECK_FALSE(d.blocks());
  CHECK_FALSE(scalar_check("z", 1.0, 2.0).blocks());
  const auto j = to_json(scalar_check("z", 1.0, 2.0));
  CHECK(j["R"].is_null());
  CHECK(j["margin"] == 1.0);
}

TEST_CASE("a Hartree-Fock scenario reports orbital checks") {
  const std::string text = R"({"scenario": "hf_small", "model": "hartree_fock", "Z": 2,
    "grid": {"n": 300, "r_max": 30},
    "initial": {"type": "hf_orbitals", "widths": [1, 2]},
    "propagator": {"dt": 1e-3, "steps": 500, "record_every": 5}, "R_list": [3], "T_list": [0.5]})";
  const auto out = run_scenario(parse_config(text), scratch("hf"));
  auto has = [&](const std::string& n) {
    return std::any_of(out.checks.begin(), out.checks.end(), [&](const CheckResult& c) { return c.name == n; });
  };
  for (const char* n : {"gram_defect", "hf_localized_mass_average", "trace_h_gamma_h_gamma", "hf_exchange_chain",
                        "cauchy_schwarz_pointwise", "hf_monotonicity"})
    CHECK(has(n));
  CHECK_FALSE(has("localized_mass_average"));
  CHECK(out.exit_code() == 0);
}

TEST_CASE("the ground-state runner certifies hydrogen") {
  const std::string text = R"({"scenario": "h", "Z": 1, "grid": {"n": 1500, "r_max": 30},
    "groundstate": {"N": 1e-6, "N_list": [0.5, 1.0]}})";
  const auto dir = scratch("gs");
  const auto out = run_groundstate(parse_config(text), dir);
  for (const char* f : {"groundstate.json", "state.csv", "bounds.json", "manifest.json", "config.json"})
    CHECK(fs::exists(dir / f));
  CHECK(out.exit_code() == 0);
  const auto doc = ojson::parse(slurp(dir / "groundstate.json"));
  CHECK(doc["result"]["lambda"].get<double>() == Approx(-0.25).epsilon(1e-3));
  CHECK(doc["probe"].size() == 2);
  CHECK(out.checks.size() == 5);
}
