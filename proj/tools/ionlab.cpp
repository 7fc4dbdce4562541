// Command-line front end: one subcommand per workflow, shared flags for
// configuration, output directory, worker count and tolerance scaling.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ionlab/harness.hpp"

namespace {

namespace fs = std::filesystem;
using ionlab::ojson;

enum Exit { ok = 0, gate_failed = 1, usage = 2, numerical = 3 };

struct Flags {
  std::string config;
  std::string out = "ionlab_out";
  unsigned jobs = 1;
  double tol_scale = 1.0;

  ionlab::RunOptions options() const { return {jobs, tol_scale}; }
};

void add_common(CLI::App* cmd, Flags& f, bool needs_config) {
  auto* c = cmd->add_option("--config", f.config, "scenario JSON file");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
  cmd->add_option("--tol-scale", f.tol_scale, "multiplier on every numerical tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "-";
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

/// Prints bounds.json as an aligned table; returns the gating verdict.
int print_bounds(const fs::path& dir) {
  const auto path = dir / "bounds.json";
  const auto doc = ojson::parse(ionlab::read_text_file(path.string()));
  std::cout << "scenario " << doc.at("scenario").get<std::string>() << "\n";
  std::cout << std::left << std::setw(30) << "check" << std::setw(8) << "R" << std::setw(10) << "T" << std::setw(15)
            << "lhs" << std::setw(15) << "rhs" << std::setw(7) << "pass" << "flags\n";
  bool blocked = false;
  for (const auto& c : doc.at("checks")) {
    auto num = [&](const char* k) { return c.at(k).is_null() ? std::nan("") : c.at(k).get<double>(); };
    std::string flags;
    bool reflection = false;
    for (const auto& f : c.at("flags")) {
      flags += (flags.empty() ? "" : ",") + f.get<std::string>();
      reflection = reflection || f.get<std::string>() == "reflection";
    }
    const bool pass = c.at("pass").get<bool>();
    if (!pass && c.at("gating").get<bool>() && !reflection) blocked = true;
    std::cout << std::left << std::setw(30) << c.at("name").get<std::string>() << std::setw(8) << fmt(num("R"))
              << std::setw(10) << fmt(num("T")) << std::setw(15) << fmt(num("lhs")) << std::setw(15)
              << fmt(num("rhs")) << std::setw(7) << (pass ? "yes" : "NO") << flags << "\n";
  }
  return blocked ? gate_failed : ok;
}

int run_evolve(const Flags& f, const std::string& model) {
  const auto cfg = ionlab::load_config(f.config);
  if (cfg.model != model)
    throw ionlab::ConfigError("model: this subcommand expects " + model + ", config has " + cfg.model);
  const auto out = ionlab::run_scenario(cfg, f.out, f.options());
  print_bounds(f.out);
  return out.exit_code();
}

int run_verify(const Flags& f, const std::string& suite) {
  const auto [summary, pass] = ionlab::run_verification_suites({suite}, f.options());
  std::cout << summary.dump(2) << "\n";
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    std::ofstream(fs::path(f.out) / ("verify-" + suite + ".json")) << summary.dump(2) << "\n";
  }
  return pass ? ok : gate_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radial Hartree and Hartree-Fock laboratory"};
  app.set_version_flag("--version", std::string(ionlab::version));
  app.require_subcommand(1);
  Flags f;

  auto* gs = app.add_subcommand("groundstate", "stationary solution, certificates and optional N probe");
  auto* ev = app.add_subcommand("evolve", "time-dependent Hartree run with bound checks");
  auto* hf = app.add_subcommand("evolve-hf", "time-dependent Hartree-Fock run with bound checks");
  auto* vk = app.add_subcommand("verify-kernels", "pointwise kernel and angular-average suite");
  auto* vc = app.add_subcommand("verify-commutators", "double-commutator and weighted Hardy suite");
  auto* br = app.add_subcommand("bound-report", "tabulate bounds.json of a run, running it first if --config is set");
  for (auto* c : {gs, ev, hf}) add_common(c, f, true);
  for (auto* c : {vk, vc, br}) add_common(c, f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : usage;
  }

  try {
    if (gs->parsed()) {
      const auto cfg = ionlab::load_config(f.config);
      const auto out = ionlab::run_groundstate(cfg, f.out, f.options());
      print_bounds(f.out);
      return out.exit_code();
    }
    if (ev->parsed()) return run_evolve(f, "hartree");
    if (hf->parsed()) return run_evolve(f, "hartree_fock");
    if (vk->parsed()) return run_verify(f, "kernels");
    if (vc->parsed()) return run_verify(f, "commutators");
    if (br->parsed()) {
      if (!f.config.empty()) {
        const auto cfg = ionlab::load_config(f.config);
        ionlab::run_scenario(cfg, f.out, f.options());
      }
      return print_bounds(f.out);
    }
  } catch (const ionlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return usage;
  } catch (const ionlab::InstabilityError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical;
  }
  return usage;
}
