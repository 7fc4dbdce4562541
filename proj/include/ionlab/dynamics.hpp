#pragma once

// Radial time-dependent Hartree propagation and the trajectory-level checks
// (time averages, localized mass and kinetic bounds, monotonicity of the
// virial expectation).
//
// One step is the Strang splitting
//   phase(dt/2, V) . CN(dt) . phase(dt/2, V),  V = -Z/r + s W[v],
// where each phase uses the mean field of the state it acts on. The phase
// leaves |v| unchanged, so both half steps see a well-defined W. Both
// substeps are unitary; an optional absorbing mask acts after the step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlab/observables.hpp"
#include "ionlab/potentials.hpp"
#include "ionlab/radial_grid.hpp"
#include "ionlab/tridiagonal.hpp"

namespace ionlab {

class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CoverageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Absorber {
  bool enabled = false;
  double strength = 0.0;      // eta; the mask is exp(-eta dt sin^2(pi s / 2))
  double start_radius = 0.0;  // r_a

  /// Mask factor at radius r for one step of length dt.
  double mask(double r, double r_max, double dt) const {
    if (!enabled || r <= start_radius) return 1.0;
    const double s = std::min(1.0, (r - start_radius) / (r_max - start_radius));
    const double w = std::sin(0.5 * pi * s);
    return std::exp(-strength * dt * w * w);
  }
};

struct PropagatorConfig {
  double dt = 1e-3;
  std::size_t steps = 1000;
  std::size_t record_every = 10;
  Absorber absorber;
  std::vector<double> scales{5.0, 10.0, 20.0};
  double mean_field_scale = 1.0;  // 0 removes the self-interaction
  bool dry_run = true;

  double total_time() const { return dt * static_cast<double>(steps); }

  void validate(const RadialGrid& grid) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("propagator.dt: must be positive");
    if (steps == 0) throw std::invalid_argument("propagator.steps: must be positive");
    if (record_every == 0) throw std::invalid_argument("propagator.record_every: must be positive");
    for (double R : scales)
      if (!(R > 0.0)) throw std::invalid_argument("propagator.scales: every scale must be positive");
    if (absorber.enabled) {
      if (!(absorber.strength >= 0.0)) throw std::invalid_argument("absorber.strength: must be nonnegative");
      if (absorber.start_radius < 0.5 * grid.r_max() || absorber.start_radius >= grid.r_max())
        throw std::invalid_argument("absorber.start_radius: must lie in [r_max/2, r_max)");
    }
  }
};

/// Single-step Hartree propagator with prefactored Crank-Nicolson matrix.
class HartreeStepper {
 public:
  HartreeStepper(const RadialGrid& grid, double Z, double dt, double mean_field_scale = 1.0,
                 Absorber absorber = {})
      : grid_(grid), Z_(Z), dt_(dt), s_(mean_field_scale), absorber_(absorber), v_ext_(grid.size()) {
    if (Z < 0.0) throw std::invalid_argument("HartreeStepper: Z must be nonnegative");
    const double h2 = grid.dr() * grid.dr();
    for (std::size_t j = 0; j < grid.size(); ++j) v_ext_[j] = -Z / grid.r(j);
    diag_ = cplx(1.0, dt / h2);
    off_ = cplx(0.0, -0.5 * dt / h2);
    std::vector<cplx> d(grid.size(), diag_);
    cn_ = TridiagonalFactor<cplx>(d, off_);
    if (absorber_.enabled) {
      mask_.resize(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j) mask_[j] = absorber_.mask(grid.r(j), grid.r_max(), dt);
    }
  }

  double dt() const noexcept { return dt_; }

  void half_phase(WaveFunction& psi) const {
    std::vector<double> W;
    if (s_ != 0.0) W = hartree_potential(psi).values;
    const double tau = 0.5 * dt_;
    for (std::size_t j = 0; j < psi.size(); ++j) {
      const double V = v_ext_[j] + (s_ != 0.0 ? s_ * W[j] : 0.0);
      psi.v[j] *= std::polar(1.0, -tau * V);
    }
  }

  /// (1 + i dt/2 (-D2)) v' = (1 - i dt/2 (-D2)) v.
  void kinetic_step(WaveFunction& psi) const {
    const std::size_t n = psi.size();
    std::vector<cplx> rhs(n);
    const cplx d = std::conj(diag_), o = std::conj(off_);
    for (std::size_t j = 0; j < n; ++j) {
      const cplx left = j > 0 ? psi.v[j - 1] : cplx{};
      const cplx right = j + 1 < n ? psi.v[j + 1] : cplx{};
      rhs[j] = d * psi.v[j] + o * (left + right);
    }
    cn_.solve(std::span<cplx>(rhs));
    psi.v = std::move(rhs);
  }

  void apply_absorber(WaveFunction& psi) const {
    if (!absorber_.enabled) return;
    for (std::size_t j = 0; j < psi.size(); ++j) psi.v[j] *= mask_[j];
  }

  /// Unitary part of one step (no absorber).
  void step(WaveFunction& psi) const {
    half_phase(psi);
    kinetic_step(psi);
    half_phase(psi);
  }

 private:
  RadialGrid grid_;
  double Z_;
  double dt_;
  double s_;
  Absorber absorber_;
  std::vector<double> v_ext_;
  std::vector<double> mask_;
  cplx diag_, off_;
  TridiagonalFactor<cplx> cn_;
};

struct Trajectory {
  double Z = 0.0;
  double dt = 0.0;
  bool absorber = false;
  double mean_field_scale = 1.0;
  bool exchange = false;  // records come from a Hartree-Fock density matrix
  std::vector<double> scales;
  std::vector<ObservableRecord> records;
  WaveFunction final_state;
  double max_mass_drift = 0.0;    // relative, absorber off
  double max_energy_drift = 0.0;  // relative

  double initial_mass() const { return records.empty() ? 0.0 : records.front().mass; }

  std::size_t scale_index(double R) const {
    for (std::size_t k = 0; k < scales.size(); ++k)
      if (std::abs(scales[k] - R) <= 1e-12 * std::max(1.0, R)) return k;
    throw std::invalid_argument("trajectory: scale R was not recorded");
  }
};

using RecordObserver = std::function<void(const ObservableRecord&, const WaveFunction&)>;

/// Relative mass drift over ten unitary steps.
inline double dry_run_drift(const WaveFunction& psi0, double Z, const PropagatorConfig& config) {
  HartreeStepper stepper(psi0.grid, Z, config.dt, config.mean_field_scale);
  WaveFunction psi = psi0;
  const double m0 = mass(psi0);
  for (int k = 0; k < 10; ++k) stepper.step(psi);
  return m0 > 0.0 ? std::abs(mass(psi) - m0) / m0 : 0.0;
}

inline Trajectory propagate(const WaveFunction& psi0, double Z, const PropagatorConfig& config,
                            const RecordObserver& observer = {}) {
  config.validate(psi0.grid);
  if (!all_finite(psi0.v)) throw std::invalid_argument("propagate: initial state has non-finite values");
  if (config.dry_run) {
    const double drift = dry_run_drift(psi0, Z, config);
    if (drift >= 1e-8)
      throw InstabilityError("propagate: ten-step dry run drifts mass by " + std::to_string(drift) +
                             "; reduce dt");
  }

  HartreeStepper stepper(psi0.grid, Z, config.dt, config.mean_field_scale, config.absorber);
  Trajectory traj;
  traj.Z = Z;
  traj.dt = config.dt;
  traj.absorber = config.absorber.enabled;
  traj.mean_field_scale = config.mean_field_scale;
  traj.scales = config.scales;

  WaveFunction psi = psi0;
  const double m0 = mass(psi0);
  std::vector<double> absorbed(config.scales.size(), 0.0);
  double e0 = 0.0;

  auto record = [&](std::size_t step) {
    auto rec = make_record(config.dt * static_cast<double>(step), psi, Z, config.scales, config.mean_field_scale);
    rec.A_f_absorbed = absorbed;
    if (step == 0) e0 = rec.energy;
    const double de = std::abs(rec.energy - e0) / (e0 != 0.0 ? std::abs(e0) : 1.0);
    traj.max_energy_drift = std::max(traj.max_energy_drift, de);
    if (observer) observer(rec, psi);
    traj.records.push_back(std::move(rec));
  };

  record(0);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    stepper.step(psi);
    if (config.absorber.enabled) {
      std::vector<double> before(config.scales.size());
      for (std::size_t k = 0; k < before.size(); ++k)
        before[k] = virial_expectation(psi, VirialProfile::arctan(config.scales[k]));
      stepper.apply_absorber(psi);
      for (std::size_t k = 0; k < before.size(); ++k)
        absorbed[k] += before[k] - virial_expectation(psi, VirialProfile::arctan(config.scales[k]));
    }
    if (!all_finite(psi.v))
      throw InstabilityError("propagate: non-finite value at step " + std::to_string(step));
    if (!config.absorber.enabled && m0 > 0.0) {
      const double drift = std::abs(mass(psi) - m0) / m0;
      traj.max_mass_drift = std::max(traj.max_mass_drift, drift);
      if (drift > 1e-6)
        throw InstabilityError("propagate: mass drift " + std::to_string(drift) + " at step " +
                               std::to_string(step) + "; reduce dt");
    }
    if (step % config.record_every == 0 || step == config.steps) record(step);
  }
  traj.final_state = std::move(psi);
  return traj;
}

/// Trapezoid average over [0, T] of samples (t_k, y_k); T between samples is
/// handled by linear interpolation.
inline double time_average(std::span<const double> t, std::span<const double> y, double T) {
  if (t.size() != y.size() || t.empty()) throw CoverageError("time_average: need matching nonempty series");
  if (!(T > 0.0)) throw CoverageError("time_average: T must be positive");
  const double slack = 1e-9 * std::max(1.0, T);
  if (std::abs(t.front()) > slack || t.back() < T - slack)
    throw CoverageError("time_average: records do not cover [0, T]");
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < t.size() && t[k] < T - slack; ++k) {
    const double t1 = std::min(t[k + 1], T);
    const double y1 = t[k + 1] <= T ? y[k + 1] : y[k] + (y[k + 1] - y[k]) * (T - t[k]) / (t[k + 1] - t[k]);
    acc += 0.5 * (y[k] + y1) * (t1 - t[k]);
  }
  return acc / T;
}

inline double time_average(std::span<const ObservableRecord> records,
                           const std::function<double(const ObservableRecord&)>& quantity, double T) {
  std::vector<double> t, y;
  for (const auto& r : records) {
    t.push_back(r.t);
    y.push_back(quantity(r));
  }
  return time_average(t, y, T);
}

struct BoundReport {
  std::string name;
  std::string scenario;
  double R = 0.0;
  double T = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string mode;  // "absorber" or "hard_wall"
  std::vector<std::string> flags;

  double margin() const { return rhs - lhs; }
  bool pass() const { return lhs <= rhs; }
  bool flagged(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

inline double localized_mass_rhs(double Z, double R, double T, double K, double N, double kappa = 1.0) {
  if (!(Z > 0.0)) throw std::invalid_argument("localized_mass_rhs: Z must be positive");
  return 2.0 * Z / kappa + 3.0 / R + 2.0 * std::sqrt(K * N) * R * R / (Z * T);
}

inline double kinetic_average_rhs(double Z, double R, double T, double K, double N, double avg_M_R) {
  return (Z * Z / 4.0 + 2.0 * Z / R + 3.0 * Z / (R * R)) * avg_M_R + 2.0 * R * std::sqrt(K * N) / T;
}

/// Uniform kinetic bound Z^2 N + 2 K0 + N^p sqrt(K0). The power p = 3 is the
/// conservative form used by the reports; p = 3/2 follows from the energy argument.
inline double kinetic_global_rhs(double Z, double N, double K0, double power = 3.0) {
  return Z * Z * N + 2.0 * K0 + std::pow(N, power) * std::sqrt(K0);
}

namespace detail {

inline std::vector<ObservableRecord> window(const Trajectory& traj, double T) {
  std::vector<ObservableRecord> out;
  for (const auto& r : traj.records) {
    out.push_back(r);
    if (r.t >= T - 1e-9 * std::max(1.0, T)) break;
  }
  return out;
}

inline void tag_mode(const Trajectory& traj, const std::vector<ObservableRecord>& win, BoundReport& rep) {
  rep.mode = traj.absorber ? "absorber" : "hard_wall";
  double shell = 0.0;
  for (const auto& r : win) shell = std::max(shell, r.outer_shell);
  if (!traj.absorber && shell > 0.01 * traj.initial_mass()) rep.flags.push_back("reflection");
}

}  // namespace detail

/// (1/T) int_0^T M_R <= 2Z + 3/R + 2 sqrt(K N) R^2 / (Z T), K = max kinetic on [0, T].
inline BoundReport check_localized_mass_bound(const Trajectory& traj, double Z, double R, double T) {
  const std::size_t k = traj.scale_index(R);
  const auto win = detail::window(traj, T);
  double K = 0.0;
  for (const auto& r : win) K = std::max(K, r.kinetic);
  BoundReport rep;
  rep.name = "localized_mass_average";
  rep.R = R;
  rep.T = T;
  rep.lhs = time_average(traj.records, [k](const ObservableRecord& r) { return r.M_R[k]; }, T);
  rep.rhs = localized_mass_rhs(Z, R, T, K, traj.initial_mass());
  detail::tag_mode(traj, win, rep);
  return rep;
}

struct KineticBoundReport {
  BoundReport averaged;  // time-averaged K_R
  BoundReport global;    // max_t K(t) against the uniform bound
  double global_sharp_rhs = 0.0;

  bool pass() const { return averaged.pass() && global.pass(); }
};

inline KineticBoundReport check_kinetic_bound(const Trajectory& traj, double Z, double R, double T) {
  const std::size_t k = traj.scale_index(R);
  const auto win = detail::window(traj, T);
  const double N = traj.initial_mass();
  const double K0 = traj.records.front().kinetic;
  double K = 0.0;
  for (const auto& r : win) K = std::max(K, r.kinetic);

  KineticBoundReport out;
  auto& avg = out.averaged;
  avg.name = "localized_kinetic_average";
  avg.R = R;
  avg.T = T;
  avg.lhs = time_average(traj.records, [k](const ObservableRecord& r) { return r.K_R[k]; }, T);
  const double avg_M = time_average(traj.records, [k](const ObservableRecord& r) { return r.M_R[k]; }, T);
  avg.rhs = kinetic_average_rhs(Z, R, T, K, N, avg_M);
  detail::tag_mode(traj, win, avg);

  auto& glob = out.global;
  glob.name = "kinetic_uniform";
  glob.R = R;
  glob.T = T;
  glob.lhs = K;
  glob.rhs = kinetic_global_rhs(Z, N, K0);
  detail::tag_mode(traj, win, glob);
  out.global_sharp_rhs = kinetic_global_rhs(Z, N, K0, 1.5);
  if (K > out.global_sharp_rhs) glob.flags.push_back("sharp_form_exceeded");
  return out;
}

struct MonotonicityReport {
  double R = 0.0;
  std::size_t pairs = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_time = 0.0;
  double tolerance = 0.0;
  bool increasing = true;
  double min_rate = std::numeric_limits<double>::infinity();

  bool pass() const { return pairs > 0 && worst_margin >= -tolerance; }
};

inline double default_margin_tolerance(double N, double Z) { return 1e-4 * (N * N + Z * N); }

/// For consecutive records, (A_{k+1} - A_k) / dt >= -(2Z + 3/R) M + M^2 with
/// M the pair average of M_R. With an absorber the A removed by the mask is
/// added back, since the identity concerns the unmasked flow.
inline MonotonicityReport check_monotonicity(const Trajectory& traj, double Z, double R,
                                             std::optional<double> tol = std::nullopt) {
  const std::size_t k = traj.scale_index(R);
  MonotonicityReport rep;
  rep.R = R;
  const double N = traj.initial_mass();
  rep.tolerance = tol.value_or(default_margin_tolerance(N, Z));
  const auto& recs = traj.records;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    const double dt = recs[i + 1].t - recs[i].t;
    const double a0 = recs[i].A_f[k] + recs[i].A_f_absorbed[k];
    const double a1 = recs[i + 1].A_f[k] + recs[i + 1].A_f_absorbed[k];
    const double rate = (a1 - a0) / dt;
    const double M = 0.5 * (recs[i].M_R[k] + recs[i + 1].M_R[k]);
    const double margin = rate - monotonicity_lower_bound(Z, R, M, traj.exchange);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_time = recs[i].t;
    }
    rep.min_rate = std::min(rep.min_rate, rate);
    if (!(a1 > a0)) rep.increasing = false;
    ++rep.pairs;
  }
  return rep;
}

struct VirialIdentityReport {
  double R = 0.0;
  std::size_t points = 0;
  double worst_relative = 0.0;         // |fd - rhs| / |rhs|
  double worst_scaled = 0.0;           // |fd - rhs| / (sum of |terms|)
  double worst_time = 0.0;
  double tolerance = 1e-3;

  bool pass() const { return points > 0 && worst_relative <= tolerance; }
};

/// Centered difference of <A_{f_R}> over neighbouring records against the
/// recorded right-hand side at the middle record.
inline VirialIdentityReport virial_identity_check(const Trajectory& traj, double R, double tolerance = 1e-3) {
  const std::size_t k = traj.scale_index(R);
  VirialIdentityReport rep;
  rep.R = R;
  rep.tolerance = tolerance;
  const auto& recs = traj.records;
  for (std::size_t i = 1; i + 1 < recs.size(); ++i) {
    const double a0 = recs[i - 1].A_f[k] + recs[i - 1].A_f_absorbed[k];
    const double a1 = recs[i + 1].A_f[k] + recs[i + 1].A_f_absorbed[k];
    const double fd = (a1 - a0) / (recs[i + 1].t - recs[i - 1].t);
    const double rhs = recs[i].dA_f[k];
    const double err = std::abs(fd - rhs);
    const double rel = err / std::max(std::abs(rhs), std::numeric_limits<double>::min());
    if (rel > rep.worst_relative) {
      rep.worst_relative = rel;
      rep.worst_time = recs[i].t;
    }
    rep.worst_scaled = std::max(rep.worst_scaled, err / recs[i].dA_f_scale[k]);
    ++rep.points;
  }
  return rep;
}

struct DriftConvergence {
  double drift_coarse = 0.0;
  double drift_fine = 0.0;
  double ratio() const { return drift_coarse / drift_fine; }
  bool pass(double low = 3.0, double high = 5.0) const { return ratio() >= low && ratio() <= high; }
};

/// Maximum relative energy drift at dt and dt/2 over the same total time.
inline DriftConvergence energy_drift_convergence(const WaveFunction& psi0, double Z, PropagatorConfig config) {
  config.absorber.enabled = false;
  DriftConvergence out;
  out.drift_coarse = propagate(psi0, Z, config).max_energy_drift;
  config.dt *= 0.5;
  config.steps *= 2;
  config.record_every *= 2;
  out.drift_fine = propagate(psi0, Z, config).max_energy_drift;
  return out;
}

}  // namespace ionlab
