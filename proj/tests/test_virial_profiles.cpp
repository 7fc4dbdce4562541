#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ionlab/virial_profiles.hpp"

using namespace ionlab;
using Catch::Approx;

namespace {

// Independent oracle: central differences of the previous order.
double numeric_derivative(const VirialProfile& p, double r, int order) {
  const double h = 1e-4 * std::max(1.0, r);
  return (p.eval(r + h, order - 1) - p.eval(r - h, order - 1)) / (2.0 * h);
}

}  // namespace

TEST_CASE("profile derivatives agree with numerical differentiation") {
  for (const auto& p : {VirialProfile::arctan(1.0), VirialProfile::arctan(7.0), VirialProfile::log(1.0),
                        VirialProfile::log(4.0), VirialProfile::cubic()}) {
    for (double r : {0.3, 1.0, 2.5, 9.0, 30.0})
      for (int k = 1; k <= 4; ++k) {
        INFO(to_string(p.kind()) << " R=" << p.scale() << " r=" << r << " order " << k);
        CHECK(p.eval(r, k) == Approx(numeric_derivative(p, r, k)).epsilon(1e-6).margin(1e-7));
      }
  }
}

TEST_CASE("unscaled profiles match their defining formulas") {
  // Direct formulas lose digits to cancellation near 0, so small x uses Taylor series.
  auto atan_ref = [](double x) {
    return x < 1e-2 ? x * x * x / 3.0 - std::pow(x, 5) / 5.0 + std::pow(x, 7) / 7.0 : x - std::atan(x);
  };
  auto log_ref = [](double x) {
    return x < 1e-2 ? x * x / 2.0 - x * x * x / 3.0 + std::pow(x, 4) / 4.0 - std::pow(x, 5) / 5.0 + std::pow(x, 6) / 6.0
                    : x - std::log1p(x);
  };
  for (double x : {1e-4, 5e-4, 2e-3, 0.1, 1.0, 10.0}) {
    CHECK(VirialProfile::unscaled(ProfileKind::arctan, x, 0) == Approx(atan_ref(x)).epsilon(1e-7));
    CHECK(VirialProfile::unscaled(ProfileKind::log, x, 0) == Approx(log_ref(x)).epsilon(1e-7));
    CHECK(VirialProfile::unscaled(ProfileKind::cubic, x, 0) == Approx(x * x * x / 3.0));
  }
}

TEST_CASE("scaling: arctan and cubic carry R^3, log carries R^2") {
  const double R = 3.0, r = 2.0;
  CHECK(VirialProfile::arctan(R).eval(r, 0) == Approx(R * R * R * (r / R - std::atan(r / R))));
  CHECK(VirialProfile::log(R).eval(r, 0) == Approx(R * R * (r / R - std::log1p(r / R))));
  CHECK(VirialProfile::arctan(R).prime(r) == Approx(r * r / (1.0 + r * r / (R * R))));
  CHECK(VirialProfile::log(R).prime(r) == Approx(r / (1.0 + r / R)));
  CHECK(VirialProfile::arctan(R).sup_slope() == Approx(R * R));
  CHECK(VirialProfile::log(R).sup_slope() == Approx(R));
}

TEST_CASE("slope_over_r2 is f' / r^2") {
  for (const auto& p : {VirialProfile::arctan(2.0), VirialProfile::log(2.0), VirialProfile::cubic()})
    for (double r : {0.5, 1.0, 4.0}) CHECK(p.slope_over_r2(r) == Approx(p.prime(r) / (r * r)));
  CHECK(VirialProfile::arctan(2.0).slope_over_r2(0.0) == 1.0);
}

TEST_CASE("profile inputs are validated") {
  CHECK_THROWS_AS(VirialProfile::arctan(0.0), std::invalid_argument);
  CHECK_THROWS_AS(VirialProfile::arctan(1.0).eval(1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(VirialProfile::arctan(1.0).eval(-1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(profile_eval(VirialProfile::cubic(), 1.0, -1), std::invalid_argument);
}

TEST_CASE("cubic kernel: known values and domain") {
  CHECK(kernel_cubic(1.0, -1.0) == Approx(0.5));
  CHECK(kernel_cubic(0.0, 0.3) == Approx(1.0));
  // u = 1: (2 - 2 theta) / (2 - 2 theta)^{3/2} = (2 - 2 theta)^{-1/2}
  CHECK(kernel_cubic(1.0, 0.5) == Approx(1.0));
  CHECK_THROWS_AS(kernel_cubic(1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(kernel_cubic(1.2, 0.0), std::domain_error);
  CHECK_THROWS_AS(kernel_cubic(0.5, -1.5), std::domain_error);
}

TEST_CASE("general kernel with f' = r^2 reduces to the cubic kernel") {
  auto fp = [](double x) { return x * x; };
  for (double r : {0.5, 2.0, 10.0})
    for (double u : {0.0, 0.3, 0.9, 1.0})
      for (double t : {-1.0, -0.2, 0.4, 0.9}) {
        if (u == 1.0 && t == 1.0) continue;
        CHECK(kernel_general(fp, r, u * r, t) == Approx(kernel_cubic(u, t)).epsilon(1e-12));
      }
  CHECK_THROWS_AS(kernel_general(fp, 1.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(kernel_general(fp, -1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("kernel is symmetric in (r, s)") {
  const auto p = VirialProfile::arctan(2.0);
  auto fp = [&p](double x) { return p.prime(x); };
  CHECK(kernel_general(fp, 1.3, 0.4, 0.2) == Approx(kernel_general(fp, 0.4, 1.3, 0.2)));
}

TEST_CASE("angular averages equal f'(r_>) / r_>^2") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.01, 30.0);
  for (const auto& p : {VirialProfile::arctan(3.0), VirialProfile::log(3.0), VirialProfile::cubic()}) {
    auto fp = [&p](double x) { return p.prime(x); };
    for (int i = 0; i < 200; ++i) {
      const double r = d(rng), s = d(rng);
      CHECK(angular_average(fp, r, s) == Approx(angular_average_closed(fp, r, s)).epsilon(1e-9).margin(1e-12));
    }
    CHECK(angular_average(fp, 2.0, 2.0) == Approx(p.prime(2.0) / 4.0));
  }
  auto fp = [](double x) { return x; };
  CHECK_THROWS_AS(angular_average(fp, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(angular_average(fp, 1.0, 2.0, 16), std::invalid_argument);
}

TEST_CASE("brute-force minimum of a kernel with a known minimizer") {
  // (u - 0.25)^2 + (theta - 0.5)^2 + 0.1 has minimum 0.1 at (0.25, 0.5)
  auto k = [](double u, double t) { return (u - 0.25) * (u - 0.25) + (t - 0.5) * (t - 0.5) + 0.1; };
  BruteForceOptions opt;
  opt.u_steps = 1000;
  opt.theta_steps = 1000;
  opt.jobs = 3;
  const auto rep = min_kernel_bruteforce(k, 0.1, opt);
  CHECK(rep.min_value == Approx(0.1).margin(1e-12));
  CHECK(rep.arg_u == Approx(0.25).margin(1e-6));
  CHECK(rep.arg_theta == Approx(0.5).margin(1e-6));
  CHECK(rep.pass());
  CHECK(rep.samples > 1000u * 1000u);
  opt.u_steps = 10;
  CHECK_THROWS_AS(min_kernel_bruteforce(k, 0.1, opt), std::invalid_argument);
}

TEST_CASE("brute-force scan reports a violated bound") {
  auto k = [](double u, double) { return u; };
  BruteForceOptions opt;
  opt.u_steps = 1000;
  opt.theta_steps = 1000;
  const auto rep = min_kernel_bruteforce(k, 0.5, opt);
  CHECK_FALSE(rep.pass());
  CHECK(rep.max_violation == Approx(0.5));
}

TEST_CASE("cubic kernel minimum is one half at the antipodal equal-radius corner") {
  BruteForceOptions opt;
  opt.u_steps = 1000;
  opt.theta_steps = 1000;
  const auto rep = cubic_kernel_report(opt);
  CHECK(rep.min_value == Approx(0.5).margin(1e-9));
  CHECK(rep.arg_u == Approx(1.0).margin(2e-3));
  CHECK(rep.arg_theta == Approx(-1.0).margin(2e-3));
  CHECK(rep.pass());
}

TEST_CASE("localized kernel ratio stays above one for the arctan profile") {
  BruteForceOptions opt;
  opt.u_steps = 1000;
  opt.theta_steps = 1000;
  opt.tolerance = 1e-9;
  const auto rep = localized_kernel_ratio_report(VirialProfile::arctan(1.0), {0.1, 1.0, 10.0}, opt);
  CHECK(rep.pass());
  CHECK(rep.min_value >= 1.0 - 1e-9);
}

TEST_CASE("fourth derivative domination constants") {
  const auto rep = fourth_derivative_domination(VirialProfile::arctan(1.0), 100000, 50.0);
  CHECK(rep.pass());
  // sup f''''(r)(1 + r^2) sits well inside the proven constant 3
  CHECK(rep.arctan_sup_ratio == Approx(1.3278).margin(1e-3));
  CHECK(rep.log_g4_sup_ratio <= 1.0 + 1e-15);
  CHECK(rep.log_g3_sup_ratio <= 1.0 + 1e-15);
  CHECK_THROWS_AS(fourth_derivative_domination(VirialProfile::log(1.0)), std::invalid_argument);
}
