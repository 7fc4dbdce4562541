#pragma once

// Uniform radial mesh and the discrete calculus used by every other module.
//
// Radial states u(r) are stored through v(r) = r u(r) on the nodes
// r_j = j dr, j = 1..n. The origin is never sampled; v(0) = 0 and the
// ghost value v(r_max + dr) = 0 are implied. With these ghosts the
// trapezoid rule reduces to uniform weights dr and the radial Laplacian
// becomes the plain second difference of v.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ionlab {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double four_pi = 4.0 * std::numbers::pi;

class RadialGrid {
 public:
  /// Smallest node count accepted by build_grid.
  static constexpr std::size_t min_nodes = 16;

  RadialGrid() = default;

  std::size_t size() const noexcept { return n_; }
  double dr() const noexcept { return dr_; }
  double r_max() const noexcept { return dr_ * static_cast<double>(n_); }

  /// Radius of storage index j (0-based), i.e. node j + 1.
  double r(std::size_t j) const noexcept { return dr_ * static_cast<double>(j + 1); }
  /// Midpoint between storage index j and j + 1; j = -1 addresses the
  /// half cell next to the origin, so pass j as signed.
  double r_mid(std::ptrdiff_t j) const noexcept { return dr_ * (static_cast<double>(j) + 1.5); }

  std::vector<double> nodes() const {
    std::vector<double> out(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = r(j);
    return out;
  }

  /// Trapezoid rule over [0, r_max + dr] with zero end values.
  template <typename T>
  T integrate(std::span<const T> values) const {
    T acc{};
    for (const T& x : values) acc += x;
    return acc * dr_;
  }

  bool operator==(const RadialGrid&) const = default;

  friend RadialGrid build_grid(std::size_t n, double r_max, std::size_t min_nodes_override);

 private:
  RadialGrid(std::size_t n, double dr) : n_(n), dr_(dr) {}

  std::size_t n_ = 0;
  double dr_ = 0.0;
};

/// Builds the grid r_j = j r_max / n. The node floor can be lowered for
/// hand-checkable toy grids; production code always uses the default.
inline RadialGrid build_grid(std::size_t n, double r_max,
                             std::size_t min_nodes_override = RadialGrid::min_nodes) {
  if (n < min_nodes_override)
    throw std::invalid_argument("build_grid: need at least " +
                                std::to_string(min_nodes_override) + " nodes, got " +
                                std::to_string(n));
  if (!(r_max > 0.0) || !std::isfinite(r_max))
    throw std::invalid_argument("build_grid: r_max must be positive and finite");
  return RadialGrid(n, r_max / static_cast<double>(n));
}

/// Radial state u on a grid, held as v = r u.
struct WaveFunction {
  RadialGrid grid;
  std::vector<cplx> v;

  WaveFunction() = default;
  explicit WaveFunction(const RadialGrid& g) : grid(g), v(g.size()) {}
  WaveFunction(const RadialGrid& g, std::vector<cplx> values) : grid(g), v(std::move(values)) {
    if (v.size() != grid.size())
      throw std::invalid_argument("WaveFunction: value count does not match grid");
  }

  std::size_t size() const noexcept { return v.size(); }
  /// u at storage index j.
  cplx u(std::size_t j) const { return v[j] / grid.r(j); }
};

/// Builds a state from a radial profile u(r).
template <typename Profile>
WaveFunction from_profile(const RadialGrid& grid, Profile&& u_of_r) {
  WaveFunction psi(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double r = grid.r(j);
    psi.v[j] = r * cplx(u_of_r(r));
  }
  return psi;
}

/// 4 pi sum |v_j|^2 dr, the discrete integral of |u|^2 over R^3.
inline double mass(const WaveFunction& psi) {
  double acc = 0.0;
  for (const cplx& x : psi.v) acc += std::norm(x);
  return four_pi * acc * psi.grid.dr();
}

/// L^2(R^3) inner product <a, b>.
inline cplx inner(const WaveFunction& a, const WaveFunction& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner: size mismatch");
  cplx acc{};
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::conj(a.v[j]) * b.v[j];
  return four_pi * acc * a.grid.dr();
}

inline double l2_norm(const WaveFunction& psi) { return std::sqrt(mass(psi)); }

/// Rescales psi in place so that mass(psi) == target. Zero states are left alone.
inline void normalize_to(WaveFunction& psi, double target) {
  const double m = mass(psi);
  if (m <= 0.0) return;
  const double s = std::sqrt(target / m);
  for (auto& x : psi.v) x *= s;
}

/// Kinetic energy int |grad u|^2 = 4 pi sum_{j=0}^{n} |v_{j+1} - v_j|^2 / dr,
/// which equals 4 pi dr <v, -v''> for the Dirichlet second difference.
inline double kinetic(const WaveFunction& psi) {
  const auto& v = psi.v;
  double acc = 0.0;
  cplx prev{};
  for (const cplx& x : v) {
    acc += std::norm(x - prev);
    prev = x;
  }
  acc += std::norm(prev);
  return four_pi * acc / psi.grid.dr();
}

/// First derivative: centred differences inside, second-order one-sided
/// stencils at both ends.
template <typename T>
std::vector<T> d_dr(std::span<const T> f, const RadialGrid& grid) {
  const std::size_t n = f.size();
  if (n != grid.size()) throw std::invalid_argument("d_dr: size mismatch");
  std::vector<T> out(n);
  const double h = grid.dr();
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return out;
}

/// v'' with the Dirichlet ghosts v_0 = v_{n+1} = 0, so that
/// (-Delta u)(r) = -v''(r) / r for radial u.
template <typename T>
std::vector<T> second_diff(std::span<const T> v, const RadialGrid& grid) {
  const std::size_t n = v.size();
  if (n != grid.size()) throw std::invalid_argument("second_diff: size mismatch");
  std::vector<T> out(n);
  const double inv_h2 = 1.0 / (grid.dr() * grid.dr());
  for (std::size_t j = 0; j < n; ++j) {
    const T left = j > 0 ? v[j - 1] : T{};
    const T right = j + 1 < n ? v[j + 1] : T{};
    out[j] = (right - 2.0 * v[j] + left) * inv_h2;
  }
  return out;
}

/// Mass fraction carried by the outer shell r > (1 - fraction) r_max.
inline double outer_shell_mass(const WaveFunction& psi, double fraction = 0.1) {
  const double r_cut = (1.0 - fraction) * psi.grid.r_max();
  double acc = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j)
    if (psi.grid.r(j) > r_cut) acc += std::norm(psi.v[j]);
  return four_pi * acc * psi.grid.dr();
}

inline bool all_finite(std::span<const cplx> v) {
  for (const cplx& x : v)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

}  // namespace ionlab
