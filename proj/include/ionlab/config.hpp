#pragma once

// Scenario configuration read from JSON. Every error names the offending
// field by its dotted path; unknown keys are rejected.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ionlab/dynamics.hpp"
#include "ionlab/radial_grid.hpp"

namespace ionlab {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct InitialStateSpec {
  std::string type = "gaussian";  // gaussian | exponential | hf_orbitals | file
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;  // outgoing phase e^{i k r}
  double decay = 1.0;
  double mass = 1.0;
  std::vector<double> widths;       // hf_orbitals
  std::vector<double> occupations;  // hf_orbitals
  std::string path;                 // file
};

struct GroundStateSpec {
  double N = 1.0;
  double tol = 1e-7;
  std::size_t max_iter = 20000;
  std::vector<double> N_list;  // optional nonexistence probe
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string model = "hartree";  // hartree | hartree_fock
  double Z = 1.0;
  std::size_t n = 2000;
  double r_max = 40.0;
  InitialStateSpec initial;
  PropagatorConfig propagator;  // scales mirror R_list
  std::vector<double> R_list{5.0, 10.0, 20.0};
  std::vector<double> T_list;   // defaults to the total time
  std::vector<std::string> checks;
  GroundStateSpec groundstate;
  std::string raw;  // the configuration text exactly as read

  RadialGrid grid() const { return build_grid(n, r_max); }
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"conservation",    "localized_mass", "kinetic",
                                              "monotonicity",    "virial_identity", "hf_localized_mass",
                                              "hf_chain",        "cauchy_schwarz"};
  return names;
}

namespace detail {

using json = nlohmann::json;

class FieldReader {
 public:
  FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key) + ": must be finite");
    return x;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(field(key) + ": expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  const json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace detail

/// Parses and validates a scenario. The raw text is kept for the manifest.
inline ScenarioConfig parse_config(std::string_view text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ScenarioConfig c;
  c.raw = std::string(text);
  detail::FieldReader top(root, "");
  c.name = top.text("scenario", c.name);
  c.model = top.text("model", c.model);
  detail::require(c.model == "hartree" || c.model == "hartree_fock", "model", "must be hartree or hartree_fock");
  c.Z = top.number("Z", c.Z);
  detail::require(c.Z > 0.0, "Z", "must be positive");

  if (const auto* g = top.object("grid")) {
    detail::FieldReader r(*g, "grid");
    c.n = r.count("n", c.n);
    c.r_max = r.number("r_max", c.r_max);
    r.finish();
  }
  detail::require(c.n >= RadialGrid::min_nodes, "grid.n", "must be at least " + std::to_string(RadialGrid::min_nodes));
  detail::require(c.r_max > 0.0, "grid.r_max", "must be positive");

  if (const auto* s = top.object("initial")) {
    detail::FieldReader r(*s, "initial");
    auto& in = c.initial;
    in.type = r.text("type", in.type);
    if (in.type == "gaussian") {
      in.center = r.number("center", in.center);
      in.width = r.number("width", in.width);
      in.momentum = r.number("momentum", in.momentum);
      in.mass = r.number("mass", in.mass);
      detail::require(in.width > 0.0, "initial.width", "must be positive");
      detail::require(in.center >= 0.0, "initial.center", "must be nonnegative");
    } else if (in.type == "exponential") {
      in.decay = r.number("decay", in.decay);
      in.momentum = r.number("momentum", in.momentum);
      in.mass = r.number("mass", in.mass);
      detail::require(in.decay > 0.0, "initial.decay", "must be positive");
    } else if (in.type == "hf_orbitals") {
      in.widths = r.numbers("widths", {1.0});
      in.occupations = r.numbers("occupations", {});
      detail::require(!in.widths.empty(), "initial.widths", "needs at least one orbital");
      for (double w : in.widths) detail::require(w > 0.0, "initial.widths", "every width must be positive");
      detail::require(in.occupations.empty() || in.occupations.size() == in.widths.size(), "initial.occupations",
                      "needs one entry per width");
      for (double o : in.occupations)
        detail::require(o >= 0.0 && o <= 1.0, "initial.occupations", "entries must lie in [0, 1]");
    } else if (in.type == "file") {
      in.path = r.text("path", "");
      in.mass = r.number("mass", 0.0);
      detail::require(!in.path.empty(), "initial.path", "is required for a file state");
    } else {
      throw ConfigError("initial.type: must be gaussian, exponential, hf_orbitals or file");
    }
    if (in.type != "hf_orbitals" && in.type != "file")
      detail::require(in.mass > 0.0, "initial.mass", "must be positive");
    r.finish();
  }
  detail::require((c.model == "hartree_fock") == (c.initial.type == "hf_orbitals"), "initial.type",
                  "hf_orbitals goes with model hartree_fock and only with it");

  auto& p = c.propagator;
  if (const auto* s = top.object("propagator")) {
    detail::FieldReader r(*s, "propagator");
    p.dt = r.number("dt", p.dt);
    p.steps = r.count("steps", p.steps);
    p.record_every = r.count("record_every", p.record_every);
    p.mean_field_scale = r.number("mean_field_scale", p.mean_field_scale);
    p.dry_run = r.boolean("dry_run", p.dry_run);
    if (const auto* a = r.object("absorber")) {
      detail::FieldReader ar(*a, "propagator.absorber");
      p.absorber.enabled = ar.boolean("enabled", true);
      p.absorber.strength = ar.number("strength", 10.0);
      p.absorber.start_radius = ar.number("start_radius", 0.75 * c.r_max);
      ar.finish();
    }
    r.finish();
  }
  detail::require(p.dt > 0.0, "propagator.dt", "must be positive");
  detail::require(p.steps > 0, "propagator.steps", "must be positive");
  detail::require(p.record_every > 0, "propagator.record_every", "must be positive");
  if (p.absorber.enabled) {
    detail::require(p.absorber.strength >= 0.0, "propagator.absorber.strength", "must be nonnegative");
    detail::require(p.absorber.start_radius >= 0.5 * c.r_max && p.absorber.start_radius < c.r_max,
                    "propagator.absorber.start_radius", "must lie in [r_max/2, r_max)");
    detail::require(c.model == "hartree", "propagator.absorber", "is only available for model hartree");
  }

  // default scales that do not fit the box are dropped; an explicit list is checked as given
  std::vector<double> fallback;
  for (double R : c.R_list)
    if (R <= 0.5 * c.r_max) fallback.push_back(R);
  if (fallback.empty()) fallback.push_back(0.5 * c.r_max);
  c.R_list = top.numbers("R_list", fallback);
  detail::require(!c.R_list.empty(), "R_list", "needs at least one scale");
  for (double R : c.R_list) {
    detail::require(R > 0.0, "R_list", "every scale must be positive");
    detail::require(R <= 0.5 * c.r_max, "R_list",
                    "scale " + detail::format_scale(R) + " exceeds r_max/2 = " + detail::format_scale(0.5 * c.r_max));
  }
  p.scales = c.R_list;
  c.T_list = top.numbers("T_list", {p.total_time()});
  detail::require(!c.T_list.empty(), "T_list", "needs at least one horizon");
  for (double T : c.T_list)
    detail::require(T > 0.0 && T <= p.total_time() * (1.0 + 1e-12), "T_list",
                    "every horizon must lie in (0, dt * steps]");

  c.checks = top.texts("checks", {});
  for (const auto& name : c.checks) {
    bool ok = false;
    for (const auto& k : known_checks()) ok = ok || k == name;
    detail::require(ok, "checks", "unknown check '" + name + "'");
  }

  if (const auto* s = top.object("groundstate")) {
    detail::FieldReader r(*s, "groundstate");
    auto& gs = c.groundstate;
    gs.N = r.number("N", gs.N);
    gs.tol = r.number("tol", gs.tol);
    gs.max_iter = r.count("max_iter", gs.max_iter);
    gs.N_list = r.numbers("N_list", {});
    r.finish();
    detail::require(gs.N > 0.0, "groundstate.N", "must be positive");
    detail::require(gs.tol > 0.0, "groundstate.tol", "must be positive");
    detail::require(gs.max_iter > 0, "groundstate.max_iter", "must be positive");
    for (std::size_t i = 0; i < gs.N_list.size(); ++i) {
      detail::require(gs.N_list[i] > 0.0, "groundstate.N_list", "entries must be positive");
      detail::require(i == 0 || gs.N_list[i] > gs.N_list[i - 1], "groundstate.N_list", "must be ascending");
    }
  }
  top.finish();
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline ScenarioConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

/// Writes u on the grid as r,re,im rows; the inverse of read_state_csv.
inline void write_state_csv(std::ostream& os, const WaveFunction& psi) {
  os << "r,re,im\n";
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const cplx u = psi.u(j);
    os << detail::format_number(psi.grid.r(j)) << ',' << detail::format_number(u.real()) << ','
       << detail::format_number(u.imag()) << '\n';
  }
}

inline WaveFunction read_state_csv(const std::string& path, const RadialGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("initial.path: cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("r,re,im", 0) != 0) throw ConfigError("initial.path: expected header r,re,im");
  WaveFunction psi(grid);
  std::size_t j = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (j >= grid.size()) throw ConfigError("initial.path: more rows than grid nodes");
    std::istringstream row(line);
    double r = 0.0, re = 0.0, im = 0.0;
    char c1 = 0, c2 = 0;
    if (!(row >> r >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
      throw ConfigError("initial.path: malformed row " + std::to_string(j + 2));
    if (std::abs(r - grid.r(j)) > 1e-9 * std::max(1.0, r))
      throw ConfigError("initial.path: row " + std::to_string(j + 2) + " does not sit on the configured grid");
    psi.v[j] = r * cplx(re, im);
    ++j;
  }
  if (j != grid.size()) throw ConfigError("initial.path: fewer rows than grid nodes");
  return psi;
}

/// Single-orbital initial state of a Hartree scenario.
inline WaveFunction build_initial_state(const ScenarioConfig& c) {
  const auto grid = c.grid();
  const auto& in = c.initial;
  WaveFunction psi(grid);
  if (in.type == "gaussian") {
    psi = from_profile(grid, [&](double r) {
      const double x = (r - in.center) / in.width;
      return std::exp(-0.5 * x * x);
    });
  } else if (in.type == "exponential") {
    psi = from_profile(grid, [&](double r) { return std::exp(-in.decay * r); });
  } else if (in.type == "file") {
    psi = read_state_csv(in.path, grid);
    if (in.mass > 0.0) normalize_to(psi, in.mass);
    return psi;
  } else {
    throw ConfigError("initial.type: " + in.type + " does not describe a single state");
  }
  if (in.momentum != 0.0)
    for (std::size_t j = 0; j < psi.size(); ++j) psi.v[j] *= std::polar(1.0, in.momentum * grid.r(j));
  normalize_to(psi, in.mass);
  return psi;
}

}  // namespace ionlab
