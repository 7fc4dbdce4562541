#pragma once

// Virial functions, the two-point interaction kernels built from them, and
// the brute-force / quadrature machinery that checks their lower bounds.
//
// Profiles are closed forms only. The arctan profile f(r) = r - arctan r
// grows like r^3/3 near the origin and like r at infinity; the log profile
// g(r) = r - log(1 + r) grows like r^2/2 near the origin. Scaled versions are
// R^p f(r / R) with p = 3 (arctan, cubic) or p = 2 (log).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ionlab/gauss_legendre.hpp"

namespace ionlab {

enum class ProfileKind { arctan, log, cubic };

inline std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::arctan: return "arctan";
    case ProfileKind::log: return "log";
    case ProfileKind::cubic: return "cubic";
  }
  return "unknown";
}

class VirialProfile {
 public:
  VirialProfile(ProfileKind kind, double R) : kind_(kind), R_(R) {
    if (!(R > 0.0) || !std::isfinite(R))
      throw std::invalid_argument("VirialProfile: scale R must be positive and finite");
  }

  static VirialProfile arctan(double R) { return {ProfileKind::arctan, R}; }
  static VirialProfile log(double R) { return {ProfileKind::log, R}; }
  static VirialProfile cubic() { return {ProfileKind::cubic, 1.0}; }

  ProfileKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return R_; }
  int scaling_exponent() const noexcept { return kind_ == ProfileKind::log ? 2 : 3; }

  /// Derivative of order 0..4 of the unscaled profile at x >= 0.
  static double unscaled(ProfileKind kind, double x, int order) {
    if (order < 0 || order > 4) throw std::invalid_argument("VirialProfile: order must be in 0..4");
    switch (kind) {
      case ProfileKind::arctan: {
        const double q = 1.0 + x * x;
        switch (order) {
          case 0: return x < 1e-3 ? x * x * x * (1.0 / 3.0 - x * x / 5.0 + x * x * x * x / 7.0)
                                  : x - std::atan(x);
          case 1: return x * x / q;
          case 2: return 2.0 * x / (q * q);
          case 3: return (2.0 - 6.0 * x * x) / (q * q * q);
          default: return -24.0 * x * (1.0 - x * x) / (q * q * q * q);
        }
      }
      case ProfileKind::log: {
        const double q = 1.0 + x;
        switch (order) {
          case 0: return x - std::log1p(x);
          case 1: return x / q;
          case 2: return 1.0 / (q * q);
          case 3: return -2.0 / (q * q * q);
          default: return 6.0 / (q * q * q * q);
        }
      }
      case ProfileKind::cubic:
        switch (order) {
          case 0: return x * x * x / 3.0;
          case 1: return x * x;
          case 2: return 2.0 * x;
          case 3: return 2.0;
          default: return 0.0;
        }
    }
    return 0.0;
  }

  /// d^k/dr^k of R^p f(r / R), i.e. R^{p-k} f^{(k)}(r / R).
  double eval(double r, int order) const {
    if (order < 0 || order > 4) throw std::invalid_argument("profile_eval: order must be in 0..4");
    if (!(r >= 0.0)) throw std::invalid_argument("profile_eval: r must be nonnegative");
    return std::pow(R_, scaling_exponent() - order) * unscaled(kind_, r / R_, order);
  }

  double prime(double r) const { return eval(r, 1); }

  /// f'_R(r) / r^2 with its finite limit at r = 0 (infinite for the log kind).
  double slope_over_r2(double r) const {
    switch (kind_) {
      case ProfileKind::arctan: return 1.0 / (1.0 + r * r / (R_ * R_));
      case ProfileKind::cubic: return 1.0;
      case ProfileKind::log:
        return r > 0.0 ? 1.0 / (r * (1.0 + r / R_)) : std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  /// sup_r f'_R(r): R^2 for arctan, R for log, unbounded for cubic.
  double sup_slope() const {
    switch (kind_) {
      case ProfileKind::arctan: return R_ * R_;
      case ProfileKind::log: return R_;
      case ProfileKind::cubic: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

 private:
  ProfileKind kind_;
  double R_;
};

inline double profile_eval(const VirialProfile& p, double r, int order) { return p.eval(r, order); }

/// Reduced cubic kernel (1 + u^3 - (u + u^2) theta) / (1 + u^2 - 2 u theta)^{3/2}
/// with u = r_< / r_> and theta the cosine between the two directions.
inline double kernel_cubic(double u, double theta) {
  if (u < 0.0 || u > 1.0) throw std::domain_error("kernel_cubic: u must lie in [0, 1]");
  if (theta < -1.0 || theta > 1.0) throw std::domain_error("kernel_cubic: theta must lie in [-1, 1]");
  if (u == 1.0 && theta == 1.0) throw std::domain_error("kernel_cubic: singular at (u, theta) = (1, 1)");
  const double num = 1.0 + u * u * u - (u + u * u) * theta;
  const double den = 1.0 + u * u - 2.0 * u * theta;
  return num / (den * std::sqrt(den));
}

namespace detail {

/// Two-point kernel with the squared distance d2 supplied separately, so
/// that callers holding d2 exactly avoid the cancellation in r^2 + s^2 - 2 r s theta.
template <typename FPrime>
double kernel_with_distance(const FPrime& fprime, double r, double s, double d2) {
  // r - theta s and s - theta r rewritten through d2
  const double a = (r * r - s * s + d2) / (2.0 * r);
  const double b = (s * s - r * r + d2) / (2.0 * s);
  double num = 0.0;
  if (r > 0.0) num += fprime(r) * a;
  if (s > 0.0) num += fprime(s) * b;
  return num / (d2 * std::sqrt(d2));
}

}  // namespace detail

/// (r f'(r) + s f'(s) - theta (s f'(r) + r f'(s))) / (r^2 + s^2 - 2 r s theta)^{3/2}.
template <typename FPrime>
double kernel_general(const FPrime& fprime, double r, double s, double theta) {
  if (!(r >= 0.0 && s >= 0.0)) throw std::domain_error("kernel_general: radii must be nonnegative");
  if (theta < -1.0 || theta > 1.0) throw std::domain_error("kernel_general: theta must lie in [-1, 1]");
  const double d2 = r * r + s * s - 2.0 * r * s * theta;
  if (!(d2 > 0.0)) throw std::domain_error("kernel_general: coincident points");
  const double num = fprime(r) * (r - theta * s) + fprime(s) * (s - theta * r);
  return num / (d2 * std::sqrt(d2));
}

/// Angular average (1/2) int_{-1}^{1} kernel_general d theta by Gauss-Legendre.
/// The integral is taken in y = log |x - y|, where the integrand is smooth
/// even when r and s nearly coincide; the r == s limit uses the closed form.
template <typename FPrime>
double angular_average(const FPrime& fprime, double r, double s, std::size_t points = 64) {
  if (!(r > 0.0 && s > 0.0)) throw std::domain_error("angular_average: radii must be positive");
  if (points < 64) throw std::invalid_argument("angular_average: need at least 64 Gauss points");
  if (r == s) {
    return fprime(r) / (r * r);
  }
  static thread_local std::size_t cached_points = 0;
  static thread_local GaussRule rule;
  if (cached_points != points) {
    rule = gauss_legendre(points);
    cached_points = points;
  }
  const double lo = std::log(std::abs(r - s));
  const double hi = std::log(r + s);
  // d theta = -(d^2 / (r s)) dy, and the kernel is num / d^3.
  const double integral = rule.integrate(
      [&](double y) {
        const double d2 = std::exp(2.0 * y);
        return detail::kernel_with_distance(fprime, r, s, d2) * d2 / (r * s);
      },
      lo, hi);
  return 0.5 * integral;
}

/// Closed-form angular average f'(r_>) / r_>^2.
template <typename FPrime>
double angular_average_closed(const FPrime& fprime, double r, double s) {
  const double big = std::max(r, s);
  return fprime(big) / (big * big);
}

struct KernelReport {
  std::string name;
  double min_value = std::numeric_limits<double>::infinity();
  double arg_u = 0.0;
  double arg_theta = 0.0;
  double arg_r = std::numeric_limits<double>::quiet_NaN();  // r_> for scale-dependent kernels
  std::size_t samples = 0;
  std::size_t u_steps = 0;
  std::size_t theta_steps = 0;
  double bound = 0.0;
  double max_violation = -std::numeric_limits<double>::infinity();  // max(bound - value)
  double tolerance = 0.0;

  bool pass() const { return max_violation <= tolerance; }

  void merge(const KernelReport& other) {
    if (other.min_value < min_value) {
      min_value = other.min_value;
      arg_u = other.arg_u;
      arg_theta = other.arg_theta;
      arg_r = other.arg_r;
    }
    samples += other.samples;
    max_violation = std::max(max_violation, other.max_violation);
  }
};

struct BruteForceOptions {
  std::size_t u_steps = 2000;
  std::size_t theta_steps = 2000;
  int refine_levels = 4;
  std::size_t refine_steps = 64;
  double corner_margin = 1e-6;  // excludes u > 1 - eps and theta > 1 - eps together
  double tolerance = 1e-12;
  unsigned jobs = 1;
};

/// Scans kernel(u, theta) on a uniform (u, theta) grid over [0, 1] x [-1, 1],
/// then refines around the best cell. Rows are split across `jobs` threads.
template <typename Kernel>
KernelReport min_kernel_bruteforce(const Kernel& kernel, double bound, const BruteForceOptions& opt = {}) {
  if (opt.u_steps < 1000 || opt.theta_steps < 1000)
    throw std::invalid_argument("min_kernel_bruteforce: need at least 1000 steps per axis");

  const double eps = opt.corner_margin;
  auto excluded = [eps](double u, double t) { return u > 1.0 - eps && t > 1.0 - eps; };

  auto visit = [&](KernelReport& rep, double u, double t) {
    if (excluded(u, t)) return;
    const double value = kernel(u, t);
    ++rep.samples;
    if (value < rep.min_value) {
      rep.min_value = value;
      rep.arg_u = u;
      rep.arg_theta = t;
    }
    rep.max_violation = std::max(rep.max_violation, bound - value);
  };

  const std::size_t nu = opt.u_steps, nt = opt.theta_steps;
  const unsigned jobs = std::max(1u, opt.jobs);
  std::vector<KernelReport> partial(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i <= nu; i += jobs) {
          const double u = static_cast<double>(i) / static_cast<double>(nu);
          for (std::size_t k = 0; k <= nt; ++k) {
            const double t = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(nt);
            visit(partial[w], u, t);
          }
        }
      });
    }
  }
  KernelReport rep;
  for (const auto& p : partial) rep.merge(p);

  double du = 1.0 / static_cast<double>(nu), dt = 2.0 / static_cast<double>(nt);
  for (int level = 0; level < opt.refine_levels; ++level) {
    const double u0 = std::max(0.0, rep.arg_u - du), u1 = std::min(1.0, rep.arg_u + du);
    const double t0 = std::max(-1.0, rep.arg_theta - dt), t1 = std::min(1.0, rep.arg_theta + dt);
    const std::size_t m = opt.refine_steps;
    KernelReport local = rep;
    for (std::size_t i = 0; i <= m; ++i)
      for (std::size_t k = 0; k <= m; ++k)
        visit(local, u0 + (u1 - u0) * static_cast<double>(i) / static_cast<double>(m),
              t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(m));
    rep = local;
    du = (u1 - u0) / static_cast<double>(m);
    dt = (t1 - t0) / static_cast<double>(m);
  }

  rep.bound = bound;
  rep.u_steps = nu;
  rep.theta_steps = nt;
  rep.tolerance = opt.tolerance;
  return rep;
}

/// Cubic kernel scanned against its lower bound 1/2.
inline KernelReport cubic_kernel_report(const BruteForceOptions& opt = {}) {
  auto rep = min_kernel_bruteforce(kernel_cubic, 0.5, opt);
  rep.name = "cubic_kernel";
  return rep;
}

/// Ratio kernel / ((1/2) h(r) h(s)), h = f'_R / r^2, scanned for each outer
/// radius in `outer_radii`; the claimed lower bound of the ratio is 1.
inline KernelReport localized_kernel_ratio_report(const VirialProfile& profile,
                                                  const std::vector<double>& outer_radii,
                                                  BruteForceOptions opt = {}) {
  KernelReport total;
  total.name = "localized_kernel_ratio_" + to_string(profile.kind());
  auto fprime = [&profile](double x) { return profile.prime(x); };
  for (double r_big : outer_radii) {
    auto ratio = [&](double u, double theta) {
      const double s = u * r_big;
      const double k = kernel_general(fprime, r_big, s, theta);
      return k / (0.5 * profile.slope_over_r2(r_big) * profile.slope_over_r2(s));
    };
    auto rep = min_kernel_bruteforce(ratio, 1.0, opt);
    rep.arg_r = r_big;
    total.merge(rep);
    total.u_steps = rep.u_steps;
    total.theta_steps = rep.theta_steps;
  }
  total.bound = 1.0;
  total.tolerance = opt.tolerance;
  return total;
}

struct FourthDerivativeReport {
  std::size_t samples = 0;
  double arctan_sup_ratio = 0.0;  // sup f''''(r) (1 + r^2); proven bound 3
  double arctan_argsup = 0.0;
  double log_g4_sup_ratio = 0.0;  // sup g''''(r) (1 + r^2) / 6; bound 1
  double log_g3_sup_ratio = 0.0;  // sup -g'''(r) (1 + r^2) / 2; bound 1
  static constexpr double proven_constant = 3.0;

  bool pass() const {
    return arctan_sup_ratio <= proven_constant && log_g4_sup_ratio <= 1.0 + 1e-15 &&
           log_g3_sup_ratio <= 1.0 + 1e-15;
  }
};

/// Checks f''''(r) <= 3 / (1 + r^2) for the arctan profile together with
/// g''''(r) <= 6 / (1 + r^2) and -g'''(r) <= 2 / (1 + r^2) for the log profile,
/// on a dense grid of unscaled radii in [0, r_max].
inline FourthDerivativeReport fourth_derivative_domination(const VirialProfile& profile,
                                                           std::size_t samples = 200000,
                                                           double r_max = 100.0) {
  if (profile.kind() != ProfileKind::arctan)
    throw std::invalid_argument("fourth_derivative_domination: needs the arctan profile");
  FourthDerivativeReport rep;
  rep.samples = samples + 1;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(samples);
    const double q = 1.0 + r * r;
    const double a = VirialProfile::unscaled(ProfileKind::arctan, r, 4) * q;
    if (a > rep.arctan_sup_ratio) {
      rep.arctan_sup_ratio = a;
      rep.arctan_argsup = r;
    }
    rep.log_g4_sup_ratio = std::max(rep.log_g4_sup_ratio, VirialProfile::unscaled(ProfileKind::log, r, 4) * q / 6.0);
    rep.log_g3_sup_ratio = std::max(rep.log_g3_sup_ratio, -VirialProfile::unscaled(ProfileKind::log, r, 3) * q / 2.0);
  }
  return rep;
}

}  // namespace ionlab
