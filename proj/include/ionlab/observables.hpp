#pragma once

// Scalar diagnostics of a radial state: energy, localized mass and kinetic
// energy, virial expectations and the radial right-hand side of the
// localized virial identity.
//
// Discretizations are chosen so that the inequalities between observables
// hold exactly on the grid, not only up to O(dr^2):
//   M_R <= mass and K_R <= kinetic termwise,
//   |<A_F>| <= 2 sqrt(K N) sup F' by Cauchy-Schwarz on the staggered sum.

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlab/potentials.hpp"
#include "ionlab/radial_grid.hpp"
#include "ionlab/virial_profiles.hpp"

namespace ionlab {

struct EnergyBreakdown {
  double kinetic = 0.0;
  double attraction = 0.0;  // <= 0
  double repulsion = 0.0;   // >= 0, already carries the 1/2
  double total() const { return kinetic + attraction + repulsion; }
};

inline double attraction_energy(const WaveFunction& psi, double Z) {
  double acc = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) acc += std::norm(psi.v[j]) / psi.grid.r(j);
  return -Z * four_pi * acc * psi.grid.dr();
}

/// (1/2) int W_rho |u|^2 for a density rho given as |v|^2 samples.
inline double direct_energy(std::span<const double> rho_v2, const RadialGrid& grid) {
  const auto W = shell_potential<double>(rho_v2, grid);
  double acc = 0.0;
  for (std::size_t j = 0; j < rho_v2.size(); ++j) acc += W[j] * rho_v2[j];
  return 0.5 * four_pi * acc * grid.dr();
}

inline EnergyBreakdown energy_breakdown(const WaveFunction& psi, double Z) {
  if (Z < 0.0) throw std::invalid_argument("energy: Z must be nonnegative");
  const auto rho = density_v2(psi);
  return {kinetic(psi), attraction_energy(psi, Z), direct_energy(rho, psi.grid)};
}

inline double energy(const WaveFunction& psi, double Z) { return energy_breakdown(psi, Z).total(); }

/// int |u|^2 / (1 + r^2 / R^2).
inline double localized_mass(const WaveFunction& psi, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("localized_mass: R must be positive");
  double acc = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double x = psi.grid.r(j) / R;
    acc += std::norm(psi.v[j]) / (1.0 + x * x);
  }
  return four_pi * acc * psi.grid.dr();
}

/// int |d_r u|^2 / (1 + r / R)^2 on the staggered grid. Each cell carries
/// r_j r_{j+1} |(u_{j+1} - u_j) / dr|^2; with unit weight these cells sum to
/// the discrete kinetic energy exactly, so 0 <= K_R <= kinetic.
inline double localized_kinetic(const WaveFunction& psi, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("localized_kinetic: R must be positive");
  const auto& g = psi.grid;
  const std::size_t n = psi.size();
  const double h = g.dr();
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r0 = g.r(j), r1 = r0 + h;
    const cplx u0 = psi.v[j] / r0;
    const cplx u1 = j + 1 < n ? psi.v[j + 1] / r1 : cplx{};
    const double x = g.r_mid(static_cast<std::ptrdiff_t>(j)) / R;
    acc += r0 * r1 * std::norm(u1 - u0) / ((1.0 + x) * (1.0 + x));
  }
  return four_pi * acc / h;
}

/// <A_F> = 2 Im int conj(u) F'(r) d_r u dx = 8 pi int F' Im(conj(v) v') dr,
/// with Im(conj(v_j) v_{j+1}) sampled at the cell midpoints.
inline double virial_expectation(const WaveFunction& psi, const VirialProfile& profile) {
  const auto& g = psi.grid;
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < psi.size(); ++j)
    acc += profile.prime(g.r_mid(static_cast<std::ptrdiff_t>(j))) * std::imag(std::conj(psi.v[j]) * psi.v[j + 1]);
  return 2.0 * four_pi * acc;
}

/// Terms of d/dt <A_F> for a radial state. The double commutator is taken in
/// its one-dimensional form on v, 4 int F'' |v'|^2 - int F'''' |v|^2, and the
/// angular average of the two-body kernel is F'(r_>) / r_>^2.
struct VirialBreakdown {
  double gradient = 0.0;
  double fourth = 0.0;
  double attraction = 0.0;
  double repulsion = 0.0;

  double sum() const { return gradient + fourth + attraction + repulsion; }
  double magnitude() const {
    return std::abs(gradient) + std::abs(fourth) + std::abs(attraction) + std::abs(repulsion);
  }
};

namespace detail {

/// (4 pi)^2 dr^2 sum_{i, j} h(r_max(i, j)) Re(P_i conj(P_j)) in O(n), where P is
/// a pair density sampled on the grid and h = F' / r^2.
template <typename T>
double radial_pair_virial(std::span<const T> pair, const RadialGrid& grid, const VirialProfile& profile) {
  T inner{};
  double acc = 0.0;
  for (std::size_t i = 0; i < pair.size(); ++i) {
    const double r = grid.r(i);
    const double h = profile.prime(r) / (r * r);
    acc += h * (2.0 * std::real(pair[i] * std::conj(inner)) + std::norm(pair[i]));
    inner += pair[i];
  }
  const double c = four_pi * grid.dr();
  return c * c * acc;
}

}  // namespace detail

/// Direct quadrature of the four continuum terms. The repulsion double sum
/// satisfies repulsion >= M_R^2 exactly because h(r_>) >= h(r) h(s) when h <= 1.
inline VirialBreakdown virial_rhs_quadrature(const WaveFunction& psi, const VirialProfile& profile, double Z,
                                             double mean_field_scale = 1.0) {
  const auto& g = psi.grid;
  const std::size_t n = psi.size();
  const double h = g.dr();
  VirialBreakdown out;
  double grad = 0.0, fourth = 0.0, attr = 0.0;
  cplx prev{};
  for (std::size_t j = 0; j <= n; ++j) {
    const cplx cur = j < n ? psi.v[j] : cplx{};
    grad += profile.eval(g.r_mid(static_cast<std::ptrdiff_t>(j) - 1), 2) * std::norm(cur - prev);
    prev = cur;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double r = g.r(j), rho = std::norm(psi.v[j]);
    fourth += profile.eval(r, 4) * rho;
    attr += profile.prime(r) / (r * r) * rho;
  }
  out.gradient = 4.0 * four_pi * grad / h;
  out.fourth = -four_pi * fourth * h;
  out.attraction = -2.0 * Z * four_pi * attr * h;
  const auto rho = density_v2(psi);
  out.repulsion = mean_field_scale * detail::radial_pair_virial<double>(rho, g, profile);
  return out;
}

/// Exact time derivative of virial_expectation along the semi-discrete flow
/// i v' = (-D2 - Z/r + s W[v]) v, split into the same four terms.
///
/// With a_j = F'(r_{j+1/2}) on interior cells (zero on the two ghost cells),
/// summation by parts of the kinetic part gives
///   gradient = (4 pi / dr^2) sum_j (a_{j+1} - a_j) |v_{j+2} - v_j|^2,
///   fourth   = -(4 pi / dr^2) sum_j |v_j|^2 (a_{j+1} - 3 a_j + 3 a_{j-1} - a_{j-2}),
/// second-order stencils of 16 pi int F'' |v'|^2 and -4 pi int F'''' |v|^2.
/// The potential parts use the exact node differences of -Z/r and of the
/// shell potential, V_j - V_{j+1}.
inline VirialBreakdown virial_rhs(const WaveFunction& psi, const VirialProfile& profile, double Z,
                                  double mean_field_scale = 1.0) {
  const auto& g = psi.grid;
  const auto n = static_cast<std::ptrdiff_t>(psi.size());
  const double h = g.dr();
  std::vector<double> a(psi.size() + 3, 0.0);  // a[j + 2] = a_j for j in [-2, n]
  for (std::ptrdiff_t j = 0; j + 1 < n; ++j) a[static_cast<std::size_t>(j + 2)] = profile.prime(g.r_mid(j));
  auto A = [&](std::ptrdiff_t j) { return (j < -2 || j > n) ? 0.0 : a[static_cast<std::size_t>(j + 2)]; };
  auto V = [&](std::ptrdiff_t j) { return (j < 0 || j >= n) ? cplx{} : psi.v[static_cast<std::size_t>(j)]; };

  VirialBreakdown out;
  double grad = 0.0, fourth = 0.0, attr = 0.0, rep = 0.0;
  for (std::ptrdiff_t j = -1; j + 1 < n; ++j) grad += (A(j + 1) - A(j)) * std::norm(V(j + 2) - V(j));
  for (std::ptrdiff_t j = 0; j < n; ++j)
    fourth += std::norm(V(j)) * (A(j + 1) - 3.0 * A(j) + 3.0 * A(j - 1) - A(j - 2));
  double inner = 0.0;
  for (std::ptrdiff_t j = 0; j + 1 < n; ++j) {
    const double rr = g.r(static_cast<std::size_t>(j)) * g.r(static_cast<std::size_t>(j + 1));
    const double c = A(j) * std::real(std::conj(V(j)) * V(j + 1)) / rr;
    inner += std::norm(V(j));
    attr += c;
    rep += c * inner;
  }
  out.gradient = four_pi * grad / (h * h);
  out.fourth = -four_pi * fourth / (h * h);
  out.attraction = -2.0 * four_pi * Z * h * attr;
  out.repulsion = mean_field_scale * 2.0 * four_pi * four_pi * h * h * rep;
  return out;
}

/// Radial lower bound on d/dt <A_{f_R}>: -(2Z + 3/R) M_R + M_R^2, lowered by
/// M_R when an exchange term is present.
inline double monotonicity_lower_bound(double Z, double R, double M_R, bool exchange = false) {
  return -(2.0 * Z + 3.0 / R) * M_R + M_R * M_R - (exchange ? M_R : 0.0);
}

/// One time sample. The per-scale vectors are aligned with the scale list
/// the record was taken with.
struct ObservableRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
  std::vector<double> M_R;
  std::vector<double> K_R;
  std::vector<double> A_f;
  std::vector<double> A_g;
  // diagnostics
  std::vector<double> dA_f;        // virial right-hand side for the arctan profile
  std::vector<double> dA_f_scale;  // sum of the absolute values of its terms
  std::vector<double> A_f_absorbed;
  double outer_shell = 0.0;  // mass in r > 0.9 r_max
};

inline ObservableRecord make_record(double t, const WaveFunction& psi, double Z, std::span<const double> scales,
                                    double mean_field_scale = 1.0) {
  ObservableRecord rec;
  rec.t = t;
  const auto e = energy_breakdown(psi, Z);
  rec.mass = mass(psi);
  rec.kinetic = e.kinetic;
  rec.energy = e.kinetic + e.attraction + mean_field_scale * e.repulsion;
  for (double R : scales) {
    const auto f = VirialProfile::arctan(R);
    rec.M_R.push_back(localized_mass(psi, R));
    rec.K_R.push_back(localized_kinetic(psi, R));
    rec.A_f.push_back(virial_expectation(psi, f));
    rec.A_g.push_back(virial_expectation(psi, VirialProfile::log(R)));
    const auto b = virial_rhs(psi, f, Z, mean_field_scale);
    rec.dA_f.push_back(b.sum());
    rec.dA_f_scale.push_back(b.magnitude());
    rec.A_f_absorbed.push_back(0.0);
  }
  rec.outer_shell = outer_shell_mass(psi);
  return rec;
}

namespace detail {

inline std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string format_scale(double R) {
  std::ostringstream os;
  os << std::setprecision(12) << R;
  return os.str();
}

}  // namespace detail

/// Columns: t, mass, energy, kinetic, then M_R@R, K_R@R, A_f@R, A_g@R per scale.
inline void write_observables_csv(std::ostream& os, std::span<const double> scales,
                                  std::span<const ObservableRecord> records) {
  os << "t,mass,energy,kinetic";
  for (const char* key : {"M_R", "K_R", "A_f", "A_g"})
    for (double R : scales) os << ',' << key << '@' << detail::format_scale(R);
  os << '\n';
  for (const auto& rec : records) {
    os << detail::format_number(rec.t) << ',' << detail::format_number(rec.mass) << ','
       << detail::format_number(rec.energy) << ',' << detail::format_number(rec.kinetic);
    for (const auto* series : {&rec.M_R, &rec.K_R, &rec.A_f, &rec.A_g})
      for (double x : *series) os << ',' << detail::format_number(x);
    os << '\n';
  }
}

/// Columns: t, outer_shell, then dA_f@R and A_f_absorbed@R per scale.
inline void write_diagnostics_csv(std::ostream& os, std::span<const double> scales,
                                  std::span<const ObservableRecord> records) {
  os << "t,outer_shell";
  for (const char* key : {"dA_f", "A_f_absorbed"})
    for (double R : scales) os << ',' << key << '@' << detail::format_scale(R);
  os << '\n';
  for (const auto& rec : records) {
    os << detail::format_number(rec.t) << ',' << detail::format_number(rec.outer_shell);
    for (const auto* series : {&rec.dA_f, &rec.A_f_absorbed})
      for (double x : *series) os << ',' << detail::format_number(x);
    os << '\n';
  }
}

}  // namespace ionlab
