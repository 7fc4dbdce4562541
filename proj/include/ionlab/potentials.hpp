#pragma once

// Coulomb attraction, the Hartree mean field and the l = 0 exchange kernel.
//
// For radial densities the Coulomb convolution collapses to the shell
// formula W(r) = 4 pi int |v(s)|^2 / max(r, s) ds, evaluated in O(n) with an
// inner-charge and an outer-shell cumulative sum.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "ionlab/radial_grid.hpp"

namespace ionlab {

struct PotentialField {
  RadialGrid grid;
  std::vector<double> values;

  double operator[](std::size_t j) const { return values[j]; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Monopole of 1/|x - y| for two s-waves at radii r and s.
inline double exchange_kernel_l0(double r, double s) { return 1.0 / std::max(r, s); }

inline PotentialField coulomb_attraction(double Z, const RadialGrid& grid) {
  if (!(Z > 0.0)) throw std::invalid_argument("coulomb_attraction: Z must be positive");
  PotentialField out{grid, std::vector<double>(grid.size())};
  for (std::size_t j = 0; j < grid.size(); ++j) out.values[j] = -Z / grid.r(j);
  return out;
}

/// out_i = 4 pi dr sum_j pair_j / max(r_i, r_j), where pair_j is a pair
/// density conj(v_a) v_b sampled on the grid. The diagonal term carries the
/// full 1/r_i, which is what the trapezoid split of the two shells gives.
template <typename T>
std::vector<T> shell_potential(std::span<const T> pair, const RadialGrid& grid) {
  const std::size_t n = pair.size();
  if (n != grid.size()) throw std::invalid_argument("shell_potential: size mismatch");
  std::vector<T> out(n);
  // outer_i = sum_{j > i} pair_j / r_j
  T outer{};
  for (std::size_t i = n; i-- > 0;) {
    out[i] = outer;
    outer += pair[i] / grid.r(i);
  }
  T inner{};
  const double c = four_pi * grid.dr();
  for (std::size_t i = 0; i < n; ++i) {
    inner += pair[i];
    out[i] = c * (inner / grid.r(i) + out[i]);
  }
  return out;
}

inline std::vector<double> density_v2(const WaveFunction& psi) {
  std::vector<double> rho(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) rho[j] = std::norm(psi.v[j]);
  return rho;
}

/// W_u = |u|^2 * |x|^{-1} for a radial state; density beyond r_max is zero.
inline PotentialField hartree_potential(const WaveFunction& psi) {
  const auto rho = density_v2(psi);
  return {psi.grid, shell_potential<double>(rho, psi.grid)};
}

/// Same as hartree_potential for a density given directly as |v|^2 samples.
inline PotentialField hartree_potential_from_density(std::span<const double> rho_v2,
                                                     const RadialGrid& grid) {
  return {grid, shell_potential<double>(rho_v2, grid)};
}

}  // namespace ionlab
