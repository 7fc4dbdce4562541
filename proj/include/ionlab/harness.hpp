#pragma once

// Scenario runs, verification suites, and their files on disk.
//
// Every verdict carries a gating flag. The process exit status is nonzero
// when a gating check fails and no reflection flag explains it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ionlab/commutator_lab.hpp"
#include "ionlab/config.hpp"
#include "ionlab/dynamics.hpp"
#include "ionlab/hartree_fock.hpp"
#include "ionlab/observables.hpp"
#include "ionlab/stationary.hpp"
#include "ionlab/virial_profiles.hpp"

#ifndef IONLAB_VERSION
#define IONLAB_VERSION "0.0.0"
#endif

namespace ionlab {

using ojson = nlohmann::ordered_json;

inline constexpr const char* version = IONLAB_VERSION;

struct RunOptions {
  unsigned jobs = 1;
  double tol_scale = 1.0;
};

/// Numerical tolerances that decide a verdict, all multiplied by tol_scale.
struct Tolerances {
  double mass_drift = 1e-8;
  double energy_drift = 1e-5;
  double hf_energy_drift = 1e-4;
  double gram_defect = 1e-7;
  double virial_identity = 1e-3;
  double monotonicity_rel = 1e-4;  // times N^2 + Z N
  double chain_rel = 1e-12;        // times max(1, N^2)
  double kernel = 1e-9;
  double cubic_min = 1e-6;
  double angular = 1e-8;
  double commutator = 1e-6;
  double lambda = 1e-8;

  static Tolerances scaled(double s) {
    if (!(s > 0.0)) throw std::invalid_argument("--tol-scale: must be positive");
    Tolerances t;
    for (double* x : {&t.mass_drift, &t.energy_drift, &t.hf_energy_drift, &t.gram_defect, &t.virial_identity,
                      &t.monotonicity_rel, &t.chain_rel, &t.kernel, &t.cubic_min, &t.angular, &t.commutator,
                      &t.lambda})
      *x *= s;
    return t;
  }

  ojson to_json() const {
    return {{"mass_drift", mass_drift},           {"energy_drift", energy_drift},
            {"hf_energy_drift", hf_energy_drift}, {"gram_defect", gram_defect},
            {"virial_identity", virial_identity}, {"monotonicity_rel", monotonicity_rel},
            {"chain_rel", chain_rel},             {"kernel", kernel},
            {"cubic_min", cubic_min},             {"angular", angular},
            {"commutator", commutator},           {"lambda", lambda}};
  }
};

struct CheckResult {
  std::string name;
  double R = std::numeric_limits<double>::quiet_NaN();
  double T = std::numeric_limits<double>::quiet_NaN();
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  bool gating = true;
  std::string mode;
  std::vector<std::string> flags;

  double margin() const { return rhs - lhs; }
  bool blocks() const {
    return gating && !pass && std::find(flags.begin(), flags.end(), "reflection") == flags.end();
  }
};

inline ojson number_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

inline ojson to_json(const CheckResult& c) {
  return {{"name", c.name},     {"R", number_or_null(c.R)},
          {"T", number_or_null(c.T)}, {"lhs", number_or_null(c.lhs)},
          {"rhs", number_or_null(c.rhs)}, {"margin", number_or_null(c.margin())},
          {"pass", c.pass},     {"gating", c.gating},
          {"mode", c.mode},     {"flags", c.flags}};
}

inline CheckResult from_bound(const BoundReport& b) {
  CheckResult c;
  c.name = b.name;
  c.R = b.R;
  c.T = b.T;
  c.lhs = b.lhs;
  c.rhs = b.rhs;
  c.pass = b.pass();
  c.mode = b.mode;
  c.flags = b.flags;
  return c;
}

/// lhs <= rhs style check with no scale or horizon.
inline CheckResult scalar_check(std::string name, double lhs, double rhs, bool gating = true) {
  CheckResult c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.pass = lhs <= rhs;
  c.gating = gating;
  return c;
}

struct ScenarioOutcome {
  std::string scenario;
  std::vector<CheckResult> checks;

  bool blocked() const {
    return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.blocks(); });
  }
  int exit_code() const { return blocked() ? 1 : 0; }
};

inline ojson report_json(const ScenarioOutcome& out) {
  ojson checks = ojson::array();
  for (const auto& c : out.checks) checks.push_back(to_json(c));
  return {{"scenario", out.scenario}, {"pass", !out.blocked()}, {"checks", checks}};
}

namespace detail {

inline bool wants(const ScenarioConfig& c, const std::string& check) {
  return c.checks.empty() || std::find(c.checks.begin(), c.checks.end(), check) != c.checks.end();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const ojson& j) { write_file(path, j.dump(2) + "\n"); }

inline void write_manifest(const std::filesystem::path& dir, const ScenarioConfig& c, const RunOptions& opt,
                           const Tolerances& tol, const std::string& mode, const std::vector<std::string>& files) {
  ojson m;
  m["scenario"] = c.name;
  m["version"] = version;
  m["model"] = c.model;
  m["mode"] = mode;
  m["tol_scale"] = opt.tol_scale;
  m["tolerances"] = tol.to_json();
  m["gating_rule"] = "exit status 1 when a gating check fails without a reflection flag";
  m["reflection_threshold"] = "outer-shell mass above 1% of N in the window, hard wall only";
  m["files"] = files;
  m["config"] = c.raw;
  write_json(dir / "manifest.json", m);
  write_file(dir / "config.json", c.raw);
}

inline std::vector<CheckResult> trajectory_checks(const ScenarioConfig& c, const Trajectory& traj,
                                                  const Tolerances& tol, bool hf) {
  std::vector<CheckResult> out;
  const std::string mode = traj.absorber ? "absorber" : "hard_wall";
  const double N = traj.initial_mass();
  if (wants(c, "conservation")) {
    if (!traj.absorber) {
      auto m = scalar_check("mass_drift", traj.max_mass_drift, tol.mass_drift);
      m.mode = mode;
      out.push_back(m);
      auto e = scalar_check("energy_drift", traj.max_energy_drift, hf ? tol.hf_energy_drift : tol.energy_drift);
      e.mode = mode;
      out.push_back(e);
    }
  }
  double shell = 0.0;
  for (const auto& r : traj.records) shell = std::max(shell, r.outer_shell);
  const bool reflection = !traj.absorber && shell > 0.01 * N;
  for (double R : c.R_list) {
    for (double T : c.T_list) {
      if (!hf && wants(c, "localized_mass")) out.push_back(from_bound(check_localized_mass_bound(traj, c.Z, R, T)));
      if (wants(c, "kinetic")) {
        const auto k = check_kinetic_bound(traj, c.Z, R, T);
        out.push_back(from_bound(k.averaged));
        if (R == c.R_list.front()) {
          auto g = from_bound(k.global);
          g.R = std::numeric_limits<double>::quiet_NaN();
          out.push_back(g);
        }
      }
    }
    if (wants(c, "monotonicity")) {
      const auto m = check_monotonicity(traj, c.Z, R, tol.monotonicity_rel * (N * N + c.Z * N));
      CheckResult r;
      r.name = hf ? "hf_monotonicity" : "monotonicity";
      r.R = R;
      r.lhs = -m.worst_margin;
      r.rhs = m.tolerance;
      r.pass = m.pass();
      r.mode = mode;
      if (reflection) r.flags.push_back("reflection");
      out.push_back(r);
    }
    if (wants(c, "virial_identity")) {
      const auto v = virial_identity_check(traj, R, tol.virial_identity);
      CheckResult r;
      r.name = "virial_identity";
      r.R = R;
      r.lhs = v.worst_relative;
      r.rhs = v.tolerance;
      r.pass = v.pass();
      r.gating = false;
      r.mode = mode;
      if (reflection) r.flags.push_back("reflection");
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace detail

/// Runs a time-dependent scenario and writes observables.csv, diagnostics.csv,
/// bounds.json, manifest.json and config.json into `dir`.
inline ScenarioOutcome run_scenario(const ScenarioConfig& c, const std::filesystem::path& dir,
                                    const RunOptions& opt = {}) {
  const auto tol = Tolerances::scaled(opt.tol_scale);
  std::filesystem::create_directories(dir);
  ScenarioOutcome out;
  out.scenario = c.name;
  const Trajectory* traj = nullptr;
  Trajectory hartree;
  HFTrajectory hf;

  if (c.model == "hartree") {
    hartree = propagate(build_initial_state(c), c.Z, c.propagator);
    traj = &hartree;
    out.checks = detail::trajectory_checks(c, hartree, tol, false);
  } else {
    const auto set = gaussian_orbitals(c.grid(), c.initial.widths, c.initial.occupations);
    hf = evolve_orbitals(set, c.Z, c.propagator);
    traj = &hf.traj;
    out.checks = detail::trajectory_checks(c, hf.traj, tol, true);
    const double N = hf.traj.initial_mass();
    if (detail::wants(c, "conservation"))
      out.checks.push_back(scalar_check("gram_defect", hf.max_gram_defect, tol.gram_defect));
    for (double R : c.R_list) {
      if (detail::wants(c, "hf_localized_mass"))
        for (double T : c.T_list) {
          const auto b = check_hf_localized_mass_bound(hf, c.Z, R, T);
          out.checks.push_back(from_bound(b.bound));
          auto t = scalar_check("trace_h_gamma_h_gamma", -b.worst_trace_gap, 0.0);
          t.R = R;
          t.T = T;
          t.pass = b.worst_trace_gap >= -tol.chain_rel * std::max(1.0, N * N);
          out.checks.push_back(t);
        }
      if (detail::wants(c, "hf_chain")) {
        const auto ch = check_hf_chain(hf, R, tol.chain_rel * std::max(1.0, N * N));
        auto r = scalar_check("hf_exchange_chain", -std::min(ch.worst_upper, ch.worst_lower), ch.tolerance);
        r.R = R;
        out.checks.push_back(r);
      }
    }
    if (detail::wants(c, "cauchy_schwarz")) {
      auto r = scalar_check("cauchy_schwarz_pointwise", -cauchy_schwarz_defect(hf.final_set), 1e-12);
      out.checks.push_back(r);
    }
  }

  {
    std::ofstream os(dir / "observables.csv");
    write_observables_csv(os, traj->scales, traj->records);
  }
  {
    std::ofstream os(dir / "diagnostics.csv");
    write_diagnostics_csv(os, traj->scales, traj->records);
  }
  detail::write_json(dir / "bounds.json", report_json(out));
  detail::write_manifest(dir, c, opt, tol, traj->absorber ? "absorber" : "hard_wall",
                         {"observables.csv", "diagnostics.csv", "bounds.json", "manifest.json", "config.json"});
  return out;
}

inline ojson to_json(const StationaryResult& r) {
  return {{"Z", r.Z},
          {"N", r.N},
          {"lambda", r.lambda},
          {"energy", r.energy},
          {"residual", r.residual},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"shell_fraction", r.shell_fraction},
          {"diagnostics", r.diagnostics}};
}

/// Ground state for groundstate.N plus the optional probe over N_list. Writes
/// groundstate.json, state.csv, bounds.json, manifest.json and config.json.
inline ScenarioOutcome run_groundstate(const ScenarioConfig& c, const std::filesystem::path& dir,
                                       const RunOptions& opt = {}) {
  const auto tol = Tolerances::scaled(opt.tol_scale);
  std::filesystem::create_directories(dir);
  StationaryOptions so;
  so.tol = c.groundstate.tol;
  so.max_iter = c.groundstate.max_iter;
  const auto grid = c.grid();
  const auto res = ground_state(c.Z, c.groundstate.N, grid, so);

  ScenarioOutcome out;
  out.scenario = c.name;
  ojson doc;
  doc["result"] = to_json(res);
  if (res.converged) {
    const auto cert = certify(res);
    out.checks.push_back(scalar_check("lambda_nonpositive", cert.lambda, tol.lambda));
    out.checks.push_back(scalar_check("kinetic_bound", cert.kinetic, cert.kinetic_bound));
    auto v = scalar_check("stationary_virial", std::abs(cert.virial_sum), cert.virial_tolerance * opt.tol_scale);
    v.R = cert.R;
    out.checks.push_back(v);
    auto m = scalar_check("stationary_mass_certificate", cert.N, cert.mass_bound + cert.virial_tolerance * opt.tol_scale);
    m.R = cert.R;
    out.checks.push_back(m);
    doc["certificate"] = {{"R", cert.R},
                          {"virial_sum", cert.virial_sum},
                          {"M_R", cert.M_R},
                          {"mass_bound", cert.mass_bound},
                          {"kinetic", cert.kinetic},
                          {"kinetic_bound", cert.kinetic_bound}};
  }
  if (!c.groundstate.N_list.empty()) {
    const auto probe = nonexistence_probe(c.Z, c.groundstate.N_list, grid, so);
    ojson rows = ojson::array();
    for (const auto& e : probe.entries)
      rows.push_back({{"N", e.N},
                      {"converged", e.converged},
                      {"lambda", e.lambda},
                      {"residual", e.residual},
                      {"shell_fraction", e.shell_fraction},
                      {"iterations", e.iterations}});
    doc["probe"] = rows;
    double worst = 0.0;
    for (const auto& e : probe.entries)
      if (e.converged) worst = std::max(worst, e.N);
    auto p = scalar_check("converged_mass_below_2Z", worst, 2.0 * c.Z * (1.0 + 1e-2));
    p.pass = probe.pass();
    out.checks.push_back(p);
  }
  detail::write_json(dir / "groundstate.json", doc);
  {
    std::ofstream os(dir / "state.csv");
    write_state_csv(os, res.psi);
  }
  detail::write_json(dir / "bounds.json", report_json(out));
  detail::write_manifest(dir, c, opt, tol, "stationary",
                         {"groundstate.json", "state.csv", "bounds.json", "manifest.json", "config.json"});
  return out;
}

struct SuiteSummary {
  std::string suite;
  std::string check;
  std::size_t cases = 0;
  double worst_margin = 0.0;
  bool pass = false;
  ojson detail;
};

inline ojson to_json(const SuiteSummary& s) {
  return {{"suite", s.suite},   {"check", s.check}, {"cases", s.cases},
          {"worst_margin", number_or_null(s.worst_margin)}, {"pass", s.pass}, {"detail", s.detail}};
}

/// Largest |angular_average - f'(r_>) / r_>^2| relative to max(1, |closed|)
/// over `pairs` random (r, s) in (0, r_hi]^2.
inline double angular_average_error(const VirialProfile& profile, std::size_t pairs, double r_hi,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(1e-3, r_hi);
  auto fp = [&profile](double x) { return profile.prime(x); };
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double r = dist(rng), s = dist(rng);
    const double closed = angular_average_closed(fp, r, s);
    const double num = angular_average(fp, r, s);
    worst = std::max(worst, std::abs(num - closed) / std::max(1.0, std::abs(closed)));
  }
  return worst;
}

inline std::vector<SuiteSummary> kernel_suite(const RunOptions& opt = {}) {
  const auto tol = Tolerances::scaled(opt.tol_scale);
  std::vector<SuiteSummary> out;
  BruteForceOptions bf;
  bf.jobs = std::max(1u, opt.jobs);

  const auto cubic = cubic_kernel_report(bf);
  const bool at_corner = std::abs(cubic.arg_u - 1.0) <= 2.0 / static_cast<double>(cubic.u_steps) &&
                         std::abs(cubic.arg_theta + 1.0) <= 4.0 / static_cast<double>(cubic.theta_steps);
  out.push_back({"kernels", "cubic_kernel_min", cubic.samples, cubic.min_value - 0.5,
                 cubic.pass() && std::abs(cubic.min_value - 0.5) <= tol.cubic_min && at_corner,
                 {{"min", cubic.min_value}, {"arg_u", cubic.arg_u}, {"arg_theta", cubic.arg_theta}}});

  const std::vector<double> radii{0.05, 0.3, 1.0, 3.0, 10.0, 50.0};
  auto rbf = bf;
  rbf.tolerance = tol.kernel;
  const auto ratio = localized_kernel_ratio_report(VirialProfile::arctan(1.0), radii, rbf);
  out.push_back({"kernels", "arctan_kernel_ratio", ratio.samples, ratio.min_value - 1.0, ratio.pass(),
                 {{"min", ratio.min_value}, {"arg_u", ratio.arg_u}, {"arg_theta", ratio.arg_theta},
                  {"outer_radius", ratio.arg_r}}});

  double worst_angular = 0.0;
  std::uint64_t seed = 20240611;
  for (const auto& p : {VirialProfile::arctan(5.0), VirialProfile::log(5.0), VirialProfile::cubic()})
    worst_angular = std::max(worst_angular, angular_average_error(p, 1000, 40.0, seed++));
  out.push_back({"kernels", "angular_average", 3000, tol.angular - worst_angular, worst_angular <= tol.angular,
                 {{"max_error", worst_angular}}});

  const auto fourth = fourth_derivative_domination(VirialProfile::arctan(1.0));
  out.push_back({"kernels", "fourth_derivative_domination", fourth.samples,
                 FourthDerivativeReport::proven_constant - fourth.arctan_sup_ratio, fourth.pass(),
                 {{"arctan_sup_ratio", fourth.arctan_sup_ratio},
                  {"arctan_argsup", fourth.arctan_argsup},
                  {"log_g4_sup_ratio", fourth.log_g4_sup_ratio},
                  {"log_g3_sup_ratio", fourth.log_g3_sup_ratio}}});
  return out;
}

inline SuiteSummary summarize(const CommutatorReport& r) {
  ojson cases = ojson::array();
  for (const auto& c : r.cases)
    cases.push_back({{"function", c.function}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"relative_margin", c.relative_margin()}});
  std::string label = r.name + "_d" + std::to_string(r.d);
  if (std::isfinite(r.beta)) label += "_beta" + detail::format_scale(r.beta);
  return {"commutators", label, r.cases.size(), r.worst_relative_margin(), r.pass(), {{"cases", cases}}};
}

inline std::vector<SuiteSummary> commutator_suite(const RunOptions& opt = {}, std::size_t n = 2000,
                                                  double r_max = 20.0) {
  const auto tol = Tolerances::scaled(opt.tol_scale);
  std::vector<SuiteSummary> out;
  const auto grid = build_grid(n, r_max);
  const auto suite = make_test_suite(grid);

  std::vector<std::function<CommutatorReport()>> jobs;
  for (double R : {1.0, 4.0})
    jobs.push_back([&, R] { return fourth_derivative_commutator_check(VirialProfile::arctan(R), suite, tol.commutator); });
  jobs.push_back([&] { return fourth_derivative_commutator_check(VirialProfile::cubic(), suite, tol.commutator); });
  for (auto [beta, d] : std::vector<std::pair<double, int>>{{1, 3}, {2, 3}, {3, 3}, {2, 2}, {4, 5}, {4, 4}})
    jobs.push_back([&, beta, d] { return power_commutator_check(beta, d, suite, tol.commutator); });
  for (double beta : {2.0, 3.0, 4.0})
    jobs.push_back([&, beta] { return hardy_power_check(beta, 3, suite, tol.commutator); });

  std::vector<CommutatorReport> reports(jobs.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(jobs.size())));
  std::vector<std::future<void>> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < jobs.size(); i += workers) reports[i] = jobs[i]();
    }));
  for (auto& f : pool) f.get();
  for (const auto& r : reports) out.push_back(summarize(r));

  const auto conv = eight_p2_convergence({500, 1000, 2000}, r_max);
  double worst = std::numeric_limits<double>::infinity();
  for (double q : conv.ratio) worst = std::min(worst, std::min(q - conv.low, conv.high - q));
  out.push_back({"commutators", "eight_p2_convergence", conv.ratio.size(), worst, conv.pass(),
                 {{"error", conv.error}, {"ratio", conv.ratio}}});
  return out;
}

/// Runs the selected suites ("kernels", "commutators") and returns the JSON
/// summary together with the overall verdict.
inline std::pair<ojson, bool> run_verification_suites(const std::vector<std::string>& selection,
                                                      const RunOptions& opt = {}) {
  ojson arr = ojson::array();
  bool ok = true;
  for (const auto& s : selection) {
    std::vector<SuiteSummary> part;
    if (s == "kernels")
      part = kernel_suite(opt);
    else if (s == "commutators")
      part = commutator_suite(opt);
    else
      throw std::invalid_argument("unknown suite '" + s + "'");
    for (const auto& p : part) {
      ok = ok && p.pass;
      arr.push_back(to_json(p));
    }
  }
  return {ojson{{"version", version}, {"tol_scale", opt.tol_scale}, {"pass", ok}, {"suites", arr}}, ok};
}

}  // namespace ionlab
