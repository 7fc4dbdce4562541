#pragma once

// Ground states of -Delta u - Z u / r + W_u u = lambda u under int |u|^2 = N
// by damped imaginary-time descent with density mixing and backtracking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlab/dynamics.hpp"
#include "ionlab/observables.hpp"
#include "ionlab/potentials.hpp"
#include "ionlab/radial_grid.hpp"
#include "ionlab/tridiagonal.hpp"

namespace ionlab {

struct StationaryOptions {
  double tol = 1e-7;                  // on the relative residual
  std::size_t max_iter = 20000;
  double tau = 0.1;                   // initial imaginary-time step
  double tau_min = 1e-4;
  double mixing = 0.5;                // weight of the new mean field
  double shell_fraction_limit = 1e-4; // outer-shell mass / N allowed at convergence
  std::size_t history_stride = 50;
};

struct StationaryResult {
  WaveFunction psi;
  double Z = 0.0;
  double N = 0.0;
  double lambda = 0.0;
  double energy = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  double shell_fraction = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<double> energy_history;  // one entry per accepted step
  double final_tau = 0.0;
  std::string diagnostics;
};

/// (H_u v)_j = -v''_j + (-Z / r_j + W_j) v_j with W the mean field of psi itself.
inline std::vector<cplx> apply_hartree(const WaveFunction& psi, double Z) {
  const auto W = hartree_potential(psi).values;
  auto out = second_diff<cplx>(psi.v, psi.grid);
  for (std::size_t j = 0; j < psi.size(); ++j) out[j] = -out[j] + (-Z / psi.grid.r(j) + W[j]) * psi.v[j];
  return out;
}

/// <u, H_u u> / <u, u>.
inline double rayleigh_quotient(const WaveFunction& psi, double Z) {
  const auto Hv = apply_hartree(psi, Z);
  cplx num{};
  double den = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    num += std::conj(psi.v[j]) * Hv[j];
    den += std::norm(psi.v[j]);
  }
  return den > 0.0 ? num.real() / den : 0.0;
}

/// ||H_u u - lambda u|| / ||u||.
inline double residual(const WaveFunction& psi, double lambda, double Z) {
  const auto Hv = apply_hartree(psi, Z);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    num += std::norm(Hv[j] - lambda * psi.v[j]);
    den += std::norm(psi.v[j]);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

namespace detail {

/// (1 + tau (-D2 + V)) x = v for real v.
inline WaveFunction implicit_euler(const WaveFunction& psi, std::span<const double> V, double tau) {
  const double h2 = psi.grid.dr() * psi.grid.dr();
  std::vector<double> diag(psi.size());
  for (std::size_t j = 0; j < diag.size(); ++j) diag[j] = 1.0 + tau * (2.0 / h2 + V[j]);
  TridiagonalFactor<double> lu(diag, -tau / h2);
  WaveFunction out = psi;
  lu.solve(std::span<cplx>(out.v));
  return out;
}

}  // namespace detail

inline StationaryResult ground_state(double Z, double N, const RadialGrid& grid, const StationaryOptions& opt = {}) {
  if (!(Z > 0.0)) throw std::invalid_argument("ground_state: Z must be positive");
  if (!(N > 0.0)) throw std::invalid_argument("ground_state: N must be positive");
  if (!(opt.mixing > 0.0 && opt.mixing <= 1.0)) throw std::invalid_argument("ground_state: mixing must lie in (0, 1]");

  StationaryResult res;
  res.Z = Z;
  res.N = N;
  WaveFunction psi = from_profile(grid, [Z](double r) { return std::exp(-0.5 * Z * r); });
  normalize_to(psi, N);

  std::vector<double> v_ext(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) v_ext[j] = -Z / grid.r(j);
  auto W_mix = hartree_potential(psi).values;
  double E = energy(psi, Z);
  double tau = opt.tau;
  bool mixed = false;  // W_mix differs from W[psi]

  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    std::vector<double> V(grid.size());
    for (std::size_t j = 0; j < V.size(); ++j) V[j] = v_ext[j] + W_mix[j];
    WaveFunction trial = detail::implicit_euler(psi, V, tau);
    normalize_to(trial, N);
    const double E_trial = energy(trial, Z);
    if (E_trial > E + 1e-10 * std::max(1.0, std::abs(E))) {
      if (mixed) {
        W_mix = hartree_potential(psi).values;
        mixed = false;
        continue;
      }
      if (tau > opt.tau_min) {
        tau = std::max(0.5 * tau, opt.tau_min);
        continue;
      }
      res.diagnostics = "energy descent stalled at the tau floor";
      break;
    }
    psi = std::move(trial);
    E = E_trial;
    res.energy_history.push_back(E);
    const auto W_new = hartree_potential(psi).values;
    for (std::size_t j = 0; j < W_mix.size(); ++j) W_mix[j] = opt.mixing * W_new[j] + (1.0 - opt.mixing) * W_mix[j];
    mixed = opt.mixing < 1.0;

    res.iterations = it;
    res.lambda = rayleigh_quotient(psi, Z);
    res.residual = residual(psi, res.lambda, Z);
    if (it % opt.history_stride == 0) res.residual_history.push_back(res.residual);
    if (!std::isfinite(res.residual)) {
      res.diagnostics = "non-finite residual";
      break;
    }
    res.shell_fraction = outer_shell_mass(psi) / N;
    if (res.residual < opt.tol) {
      res.converged = res.shell_fraction < opt.shell_fraction_limit;
      if (!res.converged) res.diagnostics = "residual converged but mass sits at the outer wall";
      break;
    }
  }
  if (!res.converged && res.diagnostics.empty()) res.diagnostics = "iteration limit reached";
  res.energy = E;
  res.final_tau = tau;
  res.psi = std::move(psi);
  return res;
}

struct ProbeEntry {
  double N = 0.0;
  bool converged = false;
  double lambda = 0.0;
  double residual = 0.0;
  double shell_fraction = 0.0;
  std::size_t iterations = 0;
};

struct NonexistenceReport {
  double Z = 0.0;
  std::vector<ProbeEntry> entries;

  /// Every converged bound state has N < 2Z (1 + 1e-2).
  bool pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [&](const ProbeEntry& e) { return !e.converged || e.N < 2.0 * Z * (1.0 + 1e-2); });
  }
};

inline NonexistenceReport nonexistence_probe(double Z, const std::vector<double>& N_list, const RadialGrid& grid,
                                             const StationaryOptions& opt = {}) {
  if (!std::is_sorted(N_list.begin(), N_list.end()))
    throw std::invalid_argument("nonexistence_probe: N_list must be ascending");
  NonexistenceReport rep;
  rep.Z = Z;
  std::vector<std::future<ProbeEntry>> jobs;
  for (double N : N_list)
    jobs.push_back(std::async(std::launch::async, [=, &grid, &opt] {
      const auto r = ground_state(Z, N, grid, opt);
      return ProbeEntry{N, r.converged, r.lambda, r.residual, r.shell_fraction, r.iterations};
    }));
  for (auto& j : jobs) rep.entries.push_back(j.get());
  return rep;
}

struct StationaryCertificate {
  double lambda = 0.0;
  double kinetic = 0.0;
  double kinetic_bound = 0.0;  // 1.01 Z^2 N
  double R = 0.0;
  double virial_sum = 0.0;     // d/dt <A_{f_R}>, zero for an exact bound state
  double virial_tolerance = 0.0;
  double M_R = 0.0;
  double mass_bound = 0.0;     // 2Z + 3/R
  double N = 0.0;

  bool lambda_ok(double tol = 1e-8) const { return lambda <= tol; }
  bool kinetic_ok() const { return kinetic <= kinetic_bound; }
  bool virial_ok() const { return std::abs(virial_sum) <= virial_tolerance && N < mass_bound + virial_tolerance; }
  bool pass() const { return lambda_ok() && kinetic_ok() && virial_ok(); }
};

/// Certificates for a converged bound state: lambda <= 0, ||grad u||^2 <= Z^2 N,
/// and a vanishing virial derivative at R = 4 r_max, which forces N < 2Z + 3/R.
inline StationaryCertificate certify(const StationaryResult& res, double R = 0.0) {
  StationaryCertificate c;
  const double Z = res.Z, N = mass(res.psi);
  c.N = N;
  c.lambda = res.lambda;
  c.kinetic = kinetic(res.psi);
  c.kinetic_bound = 1.01 * Z * Z * N;
  c.R = R > 0.0 ? R : 4.0 * res.psi.grid.r_max();
  c.virial_sum = virial_rhs(res.psi, VirialProfile::arctan(c.R), Z).sum();
  c.virial_tolerance = default_margin_tolerance(N, Z);
  c.M_R = localized_mass(res.psi, c.R);
  c.mass_bound = 2.0 * Z + 3.0 / c.R;
  return c;
}

}  // namespace ionlab
