#pragma once

// Finite-rank density matrices gamma = sum_k occ_k |u_k><u_k| of s-wave
// orbitals, the Hartree-Fock mean field W_rho - X_gamma, and its dynamics.
//
// All pair quantities use the same shell kernel 4 pi dr / max(r_i, r_j) as the
// direct term, so for one fully occupied orbital exchange cancels the
// self-interaction exactly, not just to discretization order.

#include <Eigen/Dense>

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

#include "ionlab/dynamics.hpp"
#include "ionlab/observables.hpp"
#include "ionlab/potentials.hpp"
#include "ionlab/radial_grid.hpp"
#include "ionlab/virial_profiles.hpp"

namespace ionlab {

using GramMatrix = Eigen::MatrixXcd;

struct OrbitalSet {
  std::vector<WaveFunction> orbitals;
  std::vector<double> occupations;

  std::size_t size() const noexcept { return orbitals.size(); }
  const RadialGrid& grid() const { return orbitals.front().grid; }

  double trace() const {
    double acc = 0.0;
    for (double o : occupations) acc += o;
    return acc;
  }

  /// rho as |v|^2 samples: sum_k occ_k |v_k|^2.
  std::vector<double> density_v2() const {
    std::vector<double> rho(grid().size(), 0.0);
    for (std::size_t k = 0; k < size(); ++k)
      for (std::size_t j = 0; j < rho.size(); ++j) rho[j] += occupations[k] * std::norm(orbitals[k].v[j]);
    return rho;
  }

  GramMatrix gram() const {
    const auto K = static_cast<Eigen::Index>(size());
    GramMatrix S(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
      for (Eigen::Index l = k; l < K; ++l) {
        S(k, l) = inner(orbitals[static_cast<std::size_t>(k)], orbitals[static_cast<std::size_t>(l)]);
        S(l, k) = std::conj(S(k, l));
      }
    return S;
  }

  double gram_defect() const {
    const auto S = gram();
    return (S - GramMatrix::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff();
  }

  void validate(double tol = 1e-8) const {
    if (orbitals.empty()) throw std::invalid_argument("OrbitalSet: needs at least one orbital");
    if (occupations.size() != orbitals.size())
      throw std::invalid_argument("OrbitalSet: one occupation per orbital required");
    for (const auto& u : orbitals)
      if (u.size() != grid().size() || u.grid.dr() != grid().dr())
        throw std::invalid_argument("OrbitalSet: orbitals must share one grid");
    for (double o : occupations)
      if (!(o >= 0.0 && o <= 1.0)) throw std::invalid_argument("OrbitalSet: occupations must lie in [0, 1]");
    if (gram_defect() > tol) throw std::invalid_argument("OrbitalSet: orbitals are not orthonormal");
  }
};

/// Symmetric orthonormalization u_l <- sum_k u_k (S^{-1/2})_{kl}; returns the
/// Gram defect before the correction.
inline double lowdin_orthonormalize(OrbitalSet& set) {
  const GramMatrix S = set.gram();
  const double before = (S - GramMatrix::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<GramMatrix> eig(S);
  const auto& lam = eig.eigenvalues();
  if (lam.minCoeff() <= 1e-12 * std::max(1.0, lam.maxCoeff()))
    throw std::invalid_argument("lowdin_orthonormalize: orbitals are linearly dependent");
  const GramMatrix C =
      eig.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
  const std::size_t n = set.grid().size(), K = set.size();
  std::vector<WaveFunction> out(K, WaveFunction(set.grid()));
  for (std::size_t l = 0; l < K; ++l)
    for (std::size_t k = 0; k < K; ++k) {
      const cplx c = C(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      for (std::size_t j = 0; j < n; ++j) out[l].v[j] += c * set.orbitals[k].v[j];
    }
  set.orbitals = std::move(out);
  return before;
}

/// Orthonormalized set built from radial profiles u(r); default occupations 1.
inline OrbitalSet make_orbital_set(const RadialGrid& grid, const std::vector<std::function<double(double)>>& profiles,
                                   std::vector<double> occupations = {}) {
  OrbitalSet set;
  for (const auto& p : profiles) set.orbitals.push_back(from_profile(grid, p));
  if (occupations.empty()) occupations.assign(profiles.size(), 1.0);
  set.occupations = std::move(occupations);
  if (set.orbitals.empty()) throw std::invalid_argument("make_orbital_set: needs at least one profile");
  lowdin_orthonormalize(set);
  set.validate();
  return set;
}

/// Gaussian profiles exp(-r^2 / (2 w^2)) orthonormalized.
inline OrbitalSet gaussian_orbitals(const RadialGrid& grid, const std::vector<double>& widths,
                                    std::vector<double> occupations = {}) {
  std::vector<std::function<double(double)>> p;
  for (double w : widths) {
    if (!(w > 0.0)) throw std::invalid_argument("gaussian_orbitals: widths must be positive");
    p.emplace_back([w](double r) { return std::exp(-0.5 * r * r / (w * w)); });
  }
  return make_orbital_set(grid, p, std::move(occupations));
}

/// Mean field G = W_rho - X_gamma frozen at one density matrix.
class MeanField {
 public:
  explicit MeanField(const OrbitalSet& set)
      : grid_(set.grid()), W_(shell_potential<double>(set.density_v2(), set.grid())), occ_(set.occupations) {
    for (const auto& u : set.orbitals) v_.push_back(u.v);
  }

  const std::vector<double>& direct() const noexcept { return W_; }

  /// (X w)_i = sum_k occ_k v_k(i) shell(conj(v_k) w)(i).
  std::vector<cplx> exchange(std::span<const cplx> w) const {
    const std::size_t n = w.size();
    std::vector<cplx> out(n), pair(n);
    for (std::size_t k = 0; k < v_.size(); ++k) {
      if (occ_[k] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) pair[j] = std::conj(v_[k][j]) * w[j];
      const auto s = shell_potential<cplx>(pair, grid_);
      for (std::size_t j = 0; j < n; ++j) out[j] += occ_[k] * v_[k][j] * s[j];
    }
    return out;
  }

  std::vector<cplx> apply(std::span<const cplx> w) const {
    auto out = exchange(w);
    for (std::size_t j = 0; j < w.size(); ++j) out[j] = W_[j] * w[j] - out[j];
    return out;
  }

  /// exp(-i tau G) w by Taylor series; G is Hermitian, tau ||G|| stays small.
  std::vector<cplx> propagate(std::span<const cplx> w, double tau) const {
    std::vector<cplx> out(w.begin(), w.end()), term(w.begin(), w.end());
    double scale = 0.0;
    for (const cplx& x : w) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return out;
    for (int m = 1; m <= 60; ++m) {
      auto g = apply(term);
      const cplx c(0.0, -tau / m);
      double size = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        term[j] = c * g[j];
        out[j] += term[j];
        size = std::max(size, std::abs(term[j]));
      }
      if (size <= 1e-16 * scale) return out;
    }
    throw InstabilityError("mean-field exponential did not converge; reduce dt");
  }

 private:
  RadialGrid grid_;
  std::vector<double> W_;
  std::vector<double> occ_;
  std::vector<std::vector<cplx>> v_;
};

/// H_gamma u_j = -Delta u_j - Z u_j / r + W_rho u_j - X_gamma u_j in the v-representation.
inline WaveFunction apply_fock(const OrbitalSet& set, std::size_t j, double Z) {
  if (j >= set.size()) throw std::out_of_range("apply_fock: orbital index");
  const MeanField G(set);
  const auto& u = set.orbitals[j];
  auto g = G.apply(u.v);
  auto d2 = second_diff<cplx>(u.v, u.grid);
  WaveFunction out(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) out.v[i] = -d2[i] - Z / u.grid.r(i) * u.v[i] + g[i];
  return out;
}

struct HFEnergy {
  double kinetic = 0.0;
  double attraction = 0.0;
  double direct = 0.0;    // (1/2) int int rho rho / |x - y|
  double exchange = 0.0;  // (1/2) int int |gamma|^2 / |x - y|
  double total() const { return kinetic + attraction + direct - exchange; }
};

/// sum_{k,l} occ_k occ_l 4 pi dr sum_i conj(P_kl) shell(P_kl), P_kl = conj(v_k) v_l, halved.
inline double exchange_energy(const OrbitalSet& set) {
  const auto& g = set.grid();
  const std::size_t n = g.size(), K = set.size();
  std::vector<cplx> P(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = k; l < K; ++l) {
      const double w = set.occupations[k] * set.occupations[l] * (k == l ? 1.0 : 2.0);
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) P[i] = std::conj(set.orbitals[k].v[i]) * set.orbitals[l].v[i];
      const auto s = shell_potential<cplx>(P, g);
      cplx sum{};
      for (std::size_t i = 0; i < n; ++i) sum += std::conj(P[i]) * s[i];
      acc += w * sum.real();
    }
  return 0.5 * four_pi * g.dr() * acc;
}

inline HFEnergy hf_energy(const OrbitalSet& set, double Z) {
  HFEnergy e;
  for (std::size_t k = 0; k < set.size(); ++k) {
    e.kinetic += set.occupations[k] * kinetic(set.orbitals[k]);
    e.attraction += set.occupations[k] * attraction_energy(set.orbitals[k], Z);
  }
  e.direct = direct_energy(set.density_v2(), set.grid());
  e.exchange = exchange_energy(set);
  return e;
}

/// Radial double integral of the direct term, sum_{i,j} h(r_>) rho_i rho_j.
inline double direct_virial(const OrbitalSet& set, const VirialProfile& profile) {
  const auto rho = set.density_v2();
  return detail::radial_pair_virial<double>(rho, set.grid(), profile);
}

/// sum_{k,l} occ_k occ_l sum_{i,j} h(r_>) Re(P_kl(i) conj(P_kl(j))), the radial
/// form of the exchange contribution to d/dt <A_F>.
inline double exchange_virial(const OrbitalSet& set, const VirialProfile& profile) {
  const auto& g = set.grid();
  const std::size_t n = g.size(), K = set.size();
  std::vector<cplx> P(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < K; ++l) {
      const double w = set.occupations[k] * set.occupations[l];
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) P[i] = std::conj(set.orbitals[k].v[i]) * set.orbitals[l].v[i];
      acc += w * detail::radial_pair_virial<cplx>(P, g, profile);
    }
  return acc;
}

/// Tr(h gamma) and Tr(h gamma h gamma) for h = 1 / (1 + r^2 / R^2).
struct LocalizedTraces {
  double h_gamma = 0.0;
  double h_gamma_h_gamma = 0.0;
};

inline LocalizedTraces localized_traces(const OrbitalSet& set, double R) {
  const auto& g = set.grid();
  const auto K = static_cast<Eigen::Index>(set.size());
  GramMatrix H(K, K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index l = k; l < K; ++l) {
      cplx acc{};
      const auto& a = set.orbitals[static_cast<std::size_t>(k)].v;
      const auto& b = set.orbitals[static_cast<std::size_t>(l)].v;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.r(i) / R;
        acc += std::conj(a[i]) * b[i] / (1.0 + x * x);
      }
      H(k, l) = four_pi * g.dr() * acc;
      H(l, k) = std::conj(H(k, l));
    }
  LocalizedTraces t;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double ok = set.occupations[static_cast<std::size_t>(k)];
    t.h_gamma += ok * H(k, k).real();
    for (Eigen::Index l = 0; l < K; ++l) t.h_gamma_h_gamma += ok * set.occupations[static_cast<std::size_t>(l)] * std::norm(H(k, l));
  }
  return t;
}

/// min over sampled (r, s) of rho(r) rho(s) - |gamma(r, s)|^2 relative to rho(r) rho(s).
inline double cauchy_schwarz_defect(const OrbitalSet& set, std::size_t stride = 10) {
  const auto& g = set.grid();
  const std::size_t n = g.size();
  const auto rho = set.density_v2();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; i += stride)
    for (std::size_t j = 0; j < n; j += stride) {
      cplx gam{};
      for (std::size_t k = 0; k < set.size(); ++k)
        gam += set.occupations[k] * set.orbitals[k].v[i] * std::conj(set.orbitals[k].v[j]);
      const double prod = rho[i] * rho[j];
      if (prod <= 0.0) continue;
      worst = std::min(worst, (prod - std::norm(gam)) / prod);
    }
  return worst;
}

/// Exact time derivative of sum_k occ_k <u_k, A_F u_k> along the semi-discrete
/// flow i v_k' = (-D2 - Z/r + W - X) v_k. For a step y = Op v the midpoint
/// product evolves as d/dt Im(conj(v_j) v_{j+1}) = Re(conj(y_j) v_{j+1}) - Re(conj(v_j) y_{j+1}).
inline VirialBreakdown hf_virial_rhs(const OrbitalSet& set, const VirialProfile& profile, double Z) {
  const auto& g = set.grid();
  const MeanField G(set);
  VirialBreakdown out;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const double o = set.occupations[k];
    if (o == 0.0) continue;
    const auto& v = set.orbitals[k].v;
    const auto b = virial_rhs(set.orbitals[k], profile, Z, 0.0);
    out.gradient += o * b.gradient;
    out.fourth += o * b.fourth;
    out.attraction += o * b.attraction;
    const auto y = G.apply(v);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < v.size(); ++j)
      acc += profile.prime(g.r_mid(static_cast<std::ptrdiff_t>(j))) *
             (std::real(std::conj(y[j]) * v[j + 1]) - std::real(std::conj(v[j]) * y[j + 1]));
    out.repulsion += o * 2.0 * four_pi * acc;
  }
  return out;
}

/// Records built from rho_gamma and tau_gamma; the energy is the Hartree-Fock energy.
inline ObservableRecord make_hf_record(double t, const OrbitalSet& set, double Z, std::span<const double> scales) {
  ObservableRecord rec;
  rec.t = t;
  const auto e = hf_energy(set, Z);
  rec.kinetic = e.kinetic;
  rec.energy = e.total();
  rec.M_R.assign(scales.size(), 0.0);
  rec.K_R.assign(scales.size(), 0.0);
  rec.A_f.assign(scales.size(), 0.0);
  rec.A_g.assign(scales.size(), 0.0);
  rec.A_f_absorbed.assign(scales.size(), 0.0);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const double o = set.occupations[k];
    const auto& u = set.orbitals[k];
    rec.mass += o * mass(u);
    rec.outer_shell += o * outer_shell_mass(u);
    for (std::size_t s = 0; s < scales.size(); ++s) {
      rec.M_R[s] += o * localized_mass(u, scales[s]);
      rec.K_R[s] += o * localized_kinetic(u, scales[s]);
      rec.A_f[s] += o * virial_expectation(u, VirialProfile::arctan(scales[s]));
      rec.A_g[s] += o * virial_expectation(u, VirialProfile::log(scales[s]));
    }
  }
  for (double R : scales) {
    const auto b = hf_virial_rhs(set, VirialProfile::arctan(R), Z);
    rec.dA_f.push_back(b.sum());
    rec.dA_f_scale.push_back(b.magnitude());
  }
  return rec;
}

/// Per-record terms of the exchange inequality chain at one scale:
/// direct - exchange >= M_R^2 - Tr(h gamma h gamma) >= M_R^2 - M_R.
struct HFChainSample {
  double t = 0.0;
  double R = 0.0;
  double direct = 0.0;
  double exchange = 0.0;
  double M_R = 0.0;
  double trace_hghg = 0.0;

  double upper_gap() const { return direct - exchange - (M_R * M_R - trace_hghg); }
  double lower_gap() const { return M_R - trace_hghg; }
};

inline HFChainSample hf_chain_sample(double t, const OrbitalSet& set, double R) {
  const auto f = VirialProfile::arctan(R);
  const auto tr = localized_traces(set, R);
  return {t, R, direct_virial(set, f), exchange_virial(set, f), tr.h_gamma, tr.h_gamma_h_gamma};
}

/// One Hartree-Fock step: P(dt/2) CN(dt) P(dt/2) with
/// P(tau) = Phase(V_ext, tau/2) exp(-i tau G) Phase(V_ext, tau/2), where G is
/// evaluated at a predicted midpoint density matrix, then Lowdin.
class HFStepper {
 public:
  HFStepper(const RadialGrid& grid, double Z, double dt) : kin_(grid, Z, dt, 0.0), v_ext_(grid.size()), dt_(dt) {
    for (std::size_t j = 0; j < grid.size(); ++j) v_ext_[j] = -Z / grid.r(j);
  }

  /// Returns the Gram defect before re-orthonormalization.
  double step(OrbitalSet& set) const {
    mean_field_step(set, 0.5 * dt_);
    for (auto& u : set.orbitals) kin_.kinetic_step(u);
    mean_field_step(set, 0.5 * dt_);
    return lowdin_orthonormalize(set);
  }

 private:
  void phase(OrbitalSet& set, double tau) const {
    for (auto& u : set.orbitals)
      for (std::size_t j = 0; j < u.size(); ++j) u.v[j] *= std::polar(1.0, -tau * v_ext_[j]);
  }

  void mean_field_step(OrbitalSet& set, double tau) const {
    phase(set, 0.5 * tau);
    // first-order predictor; the midpoint field only needs O(tau^2) accuracy
    OrbitalSet mid = set;
    {
      const MeanField G0(set);
      const cplx c(0.0, -0.5 * tau);
      for (std::size_t k = 0; k < set.size(); ++k) {
        const auto g = G0.apply(set.orbitals[k].v);
        for (std::size_t j = 0; j < g.size(); ++j) mid.orbitals[k].v[j] += c * g[j];
      }
    }
    const MeanField G(mid);
    for (auto& u : set.orbitals) u.v = G.propagate(u.v, tau);
    phase(set, 0.5 * tau);
  }

  HartreeStepper kin_;
  std::vector<double> v_ext_;
  double dt_;
};

struct HFTrajectory {
  Trajectory traj;  // records from rho_gamma; exchange flag set
  std::vector<std::vector<HFChainSample>> chain;  // per record, per scale
  OrbitalSet final_set;
  std::size_t rank = 0;
  double max_gram_defect = 0.0;       // after each correction
  double max_step_gram_defect = 0.0;  // accumulated within one step, before correction
  double max_trace_drift = 0.0;
};

using OrbitalObserver = std::function<void(const ObservableRecord&, const OrbitalSet&)>;

inline HFTrajectory evolve_orbitals(const OrbitalSet& set0, double Z, const PropagatorConfig& config,
                                    const OrbitalObserver& observer = {}) {
  set0.validate();
  config.validate(set0.grid());
  if (config.absorber.enabled)
    throw std::invalid_argument("evolve_orbitals: absorber is not supported for orbital sets");
  if (Z < 0.0) throw std::invalid_argument("evolve_orbitals: Z must be nonnegative");

  HFStepper stepper(set0.grid(), Z, config.dt);
  HFTrajectory out;
  out.rank = set0.size();
  auto& traj = out.traj;
  traj.Z = Z;
  traj.dt = config.dt;
  traj.exchange = true;
  traj.scales = config.scales;

  OrbitalSet set = set0;
  const double N0 = set.trace();
  double e0 = 0.0;
  auto record = [&](std::size_t step) {
    const double t = config.dt * static_cast<double>(step);
    auto rec = make_hf_record(t, set, Z, config.scales);
    if (step == 0) e0 = rec.energy;
    traj.max_energy_drift =
        std::max(traj.max_energy_drift, std::abs(rec.energy - e0) / (e0 != 0.0 ? std::abs(e0) : 1.0));
    traj.max_mass_drift = std::max(traj.max_mass_drift, std::abs(rec.mass - N0) / N0);
    std::vector<HFChainSample> c;
    for (double R : config.scales) c.push_back(hf_chain_sample(t, set, R));
    out.chain.push_back(std::move(c));
    if (observer) observer(rec, set);
    traj.records.push_back(std::move(rec));
  };

  record(0);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    out.max_step_gram_defect = std::max(out.max_step_gram_defect, stepper.step(set));
    for (const auto& u : set.orbitals)
      if (!all_finite(u.v)) throw InstabilityError("evolve_orbitals: non-finite value at step " + std::to_string(step));
    out.max_gram_defect = std::max(out.max_gram_defect, set.gram_defect());
    if (step % config.record_every == 0 || step == config.steps) record(step);
  }
  out.max_trace_drift = std::abs(set.trace() - N0);
  out.final_set = std::move(set);
  traj.final_state = out.final_set.orbitals.front();
  return out;
}

inline double hf_localized_mass_rhs(double Z, double R, double T, double K, double N) {
  return localized_mass_rhs(Z, R, T, K, N) + 1.0;
}

struct HFBoundReport {
  BoundReport bound;
  double worst_trace_gap = std::numeric_limits<double>::infinity();  // min Tr(h gamma) - Tr(h gamma h gamma)

  bool pass() const { return bound.pass() && worst_trace_gap >= -1e-12; }
};

/// (1/T) int_0^T Tr(h_R gamma) <= 2Z + 1 + 3/R + 2 sqrt(K N) R^2 / (Z T), plus
/// Tr(h gamma h gamma) <= Tr(h gamma) at every record in the window.
inline HFBoundReport check_hf_localized_mass_bound(const HFTrajectory& run, double Z, double R, double T) {
  const auto& traj = run.traj;
  const std::size_t k = traj.scale_index(R);
  const auto win = detail::window(traj, T);
  double K = 0.0;
  for (const auto& r : win) K = std::max(K, r.kinetic);
  HFBoundReport rep;
  auto& b = rep.bound;
  b.name = "hf_localized_mass_average";
  b.R = R;
  b.T = T;
  b.lhs = time_average(traj.records, [k](const ObservableRecord& r) { return r.M_R[k]; }, T);
  b.rhs = hf_localized_mass_rhs(Z, R, T, K, traj.initial_mass());
  detail::tag_mode(traj, win, b);
  for (std::size_t i = 0; i < win.size(); ++i) rep.worst_trace_gap = std::min(rep.worst_trace_gap, run.chain[i][k].lower_gap());
  return rep;
}

struct HFChainReport {
  double R = 0.0;
  double worst_upper = std::numeric_limits<double>::infinity();
  double worst_lower = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool pass() const { return worst_upper >= -tolerance && worst_lower >= -tolerance; }
};

inline HFChainReport check_hf_chain(const HFTrajectory& run, double R, std::optional<double> tol = std::nullopt) {
  const std::size_t k = run.traj.scale_index(R);
  HFChainReport rep;
  rep.R = R;
  const double N = run.traj.initial_mass();
  rep.tolerance = tol.value_or(1e-12 * std::max(1.0, N * N));
  for (const auto& c : run.chain) {
    rep.worst_upper = std::min(rep.worst_upper, c[k].upper_gap());
    rep.worst_lower = std::min(rep.worst_lower, c[k].lower_gap());
  }
  return rep;
}

}  // namespace ionlab
