#pragma once

// Quadratic-form checks of double commutators -[L, [L, f]] against the
// multiplication-operator lower bounds they are supposed to dominate.
//
// The d-dimensional radial Laplacian is represented through w = r^{(d-1)/2} u,
// which turns it into d^2/dr^2 - c / r^2 with c = (d - 1)(d - 3) / 4 acting on
// L^2(dr). Multiplication operators commute with the substitution, so every
// form below is evaluated on plain arrays w with weight dr. Test functions
// vanish near both ends, so the truncated boundary rows never contribute.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlab/banded_matrix.hpp"
#include "ionlab/radial_grid.hpp"
#include "ionlab/virial_profiles.hpp"

namespace ionlab {

struct DiscreteOperator {
  RadialGrid grid;
  int d = 3;
  BandedMatrix matrix;
};

inline DiscreteOperator radial_laplacian_d(const RadialGrid& grid, int d) {
  if (d < 1 || d > 8) throw std::invalid_argument("radial_laplacian_d: dimension must be in 1..8");
  const std::size_t n = grid.size();
  const double h2 = grid.dr() * grid.dr();
  const double c = (d - 1.0) * (d - 3.0) / 4.0;
  DiscreteOperator op{grid, d, BandedMatrix(n, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.r(i);
    op.matrix.at(i, i) = -2.0 / h2 - c / (r * r);
    if (i + 1 < n) {
      op.matrix.at(i, i + 1) = 1.0 / h2;
      op.matrix.at(i + 1, i) = 1.0 / h2;
    }
  }
  return op;
}

/// [L, [L, F]] for F = diag(f).
inline BandedMatrix double_commutator(const DiscreteOperator& L, std::span<const double> f) {
  if (f.size() != L.grid.size()) throw std::invalid_argument("double_commutator: size mismatch");
  const auto F = BandedMatrix::diagonal(f);
  return commutator(L.matrix, commutator(L.matrix, F));
}

/// <phi, -[L, [L, F]] phi> with the dr quadrature weight.
inline double double_commutator_form(const DiscreteOperator& L, std::span<const double> f,
                                     std::span<const double> phi) {
  if (phi.size() != L.grid.size()) throw std::invalid_argument("double_commutator_form: size mismatch");
  return -L.grid.dr() * double_commutator(L, f).form(phi, phi);
}

/// dr sum (phi^2 + (D1 phi)^2 + (D2 phi)^2), zero ghosts at both ends.
inline double h2_norm_sq(std::span<const double> phi, const RadialGrid& grid) {
  const std::size_t n = phi.size();
  const double h = grid.dr();
  auto at = [&](std::ptrdiff_t j) {
    return (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) ? 0.0 : phi[static_cast<std::size_t>(j)];
  };
  double acc = 0.0;
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
    const double d1 = (at(j + 1) - at(j - 1)) / (2.0 * h);
    const double d2 = (at(j + 1) - 2.0 * at(j) + at(j - 1)) / (h * h);
    acc += at(j) * at(j) + d1 * d1 + d2 * d2;
  }
  return acc * h;
}

/// Twelve smooth shapes on s in [0, 1]: four plain bumps, four Gaussians
/// under a bump cutoff, four oscillating bumps. All vanish identically
/// outside (0, 1).
inline double test_shape(std::size_t index, double s) {
  auto bump = [](double x, double c, double w) {
    const double t = (x - c) / w;
    return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0;
  };
  auto gauss = [](double x, double c, double sigma) {
    const double t = (x - c) / sigma;
    return std::exp(-t * t);
  };
  switch (index) {
    case 0: return bump(s, 0.5, 0.5);
    case 1: return bump(s, 0.3, 0.25);
    case 2: return bump(s, 0.7, 0.25);
    case 3: return bump(s, 0.15, 0.15);
    case 4: return gauss(s, 0.5, 0.1) * bump(s, 0.5, 0.5);
    case 5: return gauss(s, 0.4, 0.2) * bump(s, 0.5, 0.5);
    case 6: return gauss(s, 0.6, 0.05) * bump(s, 0.5, 0.5);
    case 7: return gauss(s, 0.25, 0.08) * bump(s, 0.5, 0.5);
    case 8: return std::sin(2.0 * pi * 2.0 * s) * bump(s, 0.5, 0.5);
    case 9: return std::cos(2.0 * pi * 4.0 * s + 0.3) * bump(s, 0.5, 0.5);
    case 10: return std::sin(2.0 * pi * 7.0 * s + 1.1) * bump(s, 0.5, 0.5);
    case 11: return std::cos(2.0 * pi * 11.0 * s) * bump(s, 0.5, 0.5);
    default: throw std::out_of_range("test_shape: index must be < 12");
  }
}

inline constexpr std::size_t test_suite_size = 12;

inline std::string test_shape_name(std::size_t index) {
  static const char* names[] = {"bump_wide", "bump_inner", "bump_outer", "bump_edge",
                                "gauss_narrow", "gauss_wide", "gauss_sharp", "gauss_offset",
                                "osc_2", "osc_4", "osc_7", "osc_11"};
  if (index >= test_suite_size) throw std::out_of_range("test_shape_name: index must be < 12");
  return names[index];
}

struct TestFunctionSuite {
  RadialGrid grid;
  double margin_fraction = 0.1;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// Samples test_shape on the support [m r_max, (1 - m) r_max].
inline std::vector<double> sample_test_function(std::size_t index, const RadialGrid& grid,
                                                double margin_fraction = 0.1) {
  const double a = margin_fraction * grid.r_max(), b = (1.0 - margin_fraction) * grid.r_max();
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double s = (grid.r(j) - a) / (b - a);
    out[j] = (s > 0.0 && s < 1.0) ? test_shape(index, s) : 0.0;
  }
  return out;
}

inline TestFunctionSuite make_test_suite(const RadialGrid& grid, double margin_fraction = 0.1) {
  if (!(margin_fraction >= 0.1 && margin_fraction < 0.5))
    throw std::invalid_argument("make_test_suite: margin fraction must lie in [0.1, 0.5)");
  TestFunctionSuite suite{grid, margin_fraction, {}, {}};
  for (std::size_t k = 0; k < test_suite_size; ++k) {
    suite.names.push_back(test_shape_name(k));
    suite.values.push_back(sample_test_function(k, grid, margin_fraction));
  }
  return suite;
}

struct CommutatorCase {
  std::string function;
  double lhs = 0.0;
  double rhs = 0.0;
  double norm_sq = 0.0;  // H^2-discrete
  double margin() const { return lhs - rhs; }
  double relative_margin() const { return norm_sq > 0.0 ? margin() / norm_sq : margin(); }
};

struct CommutatorReport {
  std::string name;
  double beta = std::numeric_limits<double>::quiet_NaN();
  int d = 3;
  double tolerance = 1e-6;
  std::vector<CommutatorCase> cases;

  double worst_relative_margin() const {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& c : cases) worst = std::min(worst, c.relative_margin());
    return worst;
  }
  bool pass() const { return !cases.empty() && worst_relative_margin() >= -tolerance; }
};

namespace detail {

inline double weighted_mass(std::span<const double> phi, const RadialGrid& grid,
                            const std::function<double(double)>& weight) {
  double acc = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) acc += weight(grid.r(j)) * phi[j] * phi[j];
  return acc * grid.dr();
}

inline CommutatorReport commutator_suite_check(const std::string& name, const TestFunctionSuite& suite, int d,
                                               const std::vector<double>& f,
                                               const std::function<double(double)>& bound_weight,
                                               double tol) {
  const auto L = radial_laplacian_d(suite.grid, d);
  const auto B = double_commutator(L, f);
  CommutatorReport rep;
  rep.name = name;
  rep.d = d;
  rep.tolerance = tol;
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const auto& phi = suite.values[k];
    CommutatorCase c;
    c.function = suite.names[k];
    c.lhs = -suite.grid.dr() * B.form(phi, phi);
    c.rhs = weighted_mass(phi, suite.grid, bound_weight);
    c.norm_sq = h2_norm_sq(phi, suite.grid);
    rep.cases.push_back(c);
  }
  return rep;
}

}  // namespace detail

/// -[p^2, [p^2, f]] >= -f'''' in three dimensions, for a convex nondecreasing radial f.
inline CommutatorReport fourth_derivative_commutator_check(const VirialProfile& profile, const TestFunctionSuite& suite,
                                      double tol = 1e-6) {
  std::vector<double> f(suite.grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = profile.eval(suite.grid.r(j), 0);
  auto rep = detail::commutator_suite_check(
      "fourth_derivative_bound_" + to_string(profile.kind()), suite, 3, f,
      [&profile](double r) { return -profile.eval(r, 4); }, tol);
  rep.beta = std::numeric_limits<double>::quiet_NaN();
  return rep;
}

/// -[p^2, [p^2, r^beta]] >= beta (beta + d - 4)(d - beta) r^{beta - 4} in dimension d.
inline CommutatorReport power_commutator_check(double beta, int d, const TestFunctionSuite& suite, double tol = 1e-6) {
  if (d < 1 || d > 8) throw std::invalid_argument("power_commutator_check: dimension must be in 1..8");
  if (beta < std::max(1.0, 4.0 - d))
    throw std::invalid_argument("power_commutator_check: beta must satisfy beta >= max(1, 4 - d)");
  const double coeff = beta * (beta + d - 4.0) * (d - beta);
  std::vector<double> f(suite.grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::pow(suite.grid.r(j), beta);
  auto rep = detail::commutator_suite_check(
      "power_commutator", suite, d, f, [=](double r) { return coeff * std::pow(r, beta - 4.0); }, tol);
  rep.beta = beta;
  return rep;
}

/// int r^{beta-2} |phi'|^2 r^{d-1} dr >= ((beta + d - 4)^2 / 4) int r^{beta-4} |phi|^2 r^{d-1} dr,
/// with phi the radial profile itself and the gradient taken on the staggered grid.
inline CommutatorReport hardy_power_check(double beta, int d, const TestFunctionSuite& suite, double tol = 1e-6) {
  if (!(beta > 1.0)) throw std::invalid_argument("hardy_power_check: beta must exceed 1");
  if (d < 1 || d > 8) throw std::invalid_argument("hardy_power_check: dimension must be in 1..8");
  const auto& grid = suite.grid;
  const double h = grid.dr();
  const double c = (beta + d - 4.0) * (beta + d - 4.0) / 4.0;
  CommutatorReport rep;
  rep.name = "weighted_hardy";
  rep.beta = beta;
  rep.d = d;
  rep.tolerance = tol;
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const auto& phi = suite.values[k];
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t j = 0; j + 1 < phi.size(); ++j) {
      const double g = (phi[j + 1] - phi[j]) / h;
      lhs += std::pow(grid.r_mid(static_cast<std::ptrdiff_t>(j)), beta + d - 3.0) * g * g;
    }
    for (std::size_t j = 0; j < phi.size(); ++j) rhs += std::pow(grid.r(j), beta + d - 5.0) * phi[j] * phi[j];
    rep.cases.push_back({suite.names[k], lhs * h, c * rhs * h, h2_norm_sq(phi, grid)});
  }
  return rep;
}

struct ConvergenceStudy {
  std::vector<std::size_t> n;
  std::vector<double> error;
  std::vector<double> ratio;  // error[k] / error[k + 1]
  double low = 3.0, high = 5.0;

  bool pass() const {
    if (ratio.empty()) return false;
    return std::all_of(ratio.begin(), ratio.end(), [&](double q) { return q >= low && q <= high; });
  }
};

/// Interior discrepancy || (-[L, [L, r^2]] - 8 (-L)) phi || in three
/// dimensions on successively doubled grids over the same [0, r_max].
inline ConvergenceStudy eight_p2_convergence(std::vector<std::size_t> n_list, double r_max,
                                             std::size_t shape = 4) {
  if (n_list.size() < 2) throw std::invalid_argument("eight_p2_convergence: need at least two grids");
  ConvergenceStudy study;
  study.n = n_list;
  for (std::size_t n : n_list) {
    const auto grid = build_grid(n, r_max);
    const auto L = radial_laplacian_d(grid, 3);
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = grid.r(j) * grid.r(j);
    const auto phi = sample_test_function(shape, grid);
    const auto Bphi = double_commutator(L, f).apply(phi);
    const auto Lphi = L.matrix.apply(phi);
    double acc = 0.0;
    for (std::size_t j = 2; j + 2 < n; ++j) {
      const double e = -Bphi[j] + 8.0 * Lphi[j];
      acc += e * e;
    }
    study.error.push_back(std::sqrt(acc * grid.dr()));
  }
  for (std::size_t k = 0; k + 1 < study.error.size(); ++k) study.ratio.push_back(study.error[k] / study.error[k + 1]);
  return study;
}

}  // namespace ionlab
