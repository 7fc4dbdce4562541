#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "ionlab/dynamics.hpp"
#include "ionlab/observables.hpp"

using namespace ionlab;
using Catch::Approx;

namespace {

WaveFunction moving_gaussian(const RadialGrid& g, double center, double width, double k, double N) {
  auto psi = from_profile(g, [&](double r) {
    const double x = (r - center) / width;
    return std::polar(std::exp(-0.5 * x * x), k * r);
  });
  normalize_to(psi, N);
  return psi;
}

}  // namespace

TEST_CASE("energy of exp(-r^2/2) matches closed forms") {
  // kinetic (3/2) pi^{3/2}, attraction -2 pi Z, repulsion pi^{5/2} / sqrt(2)
  const auto g = build_grid(6000, 15.0);
  const auto psi = from_profile(g, [](double r) { return std::exp(-0.5 * r * r); });
  const auto e = energy_breakdown(psi, 3.0);
  CHECK(e.kinetic == Approx(1.5 * std::pow(pi, 1.5)).epsilon(1e-5));
  CHECK(e.attraction == Approx(-2.0 * pi * 3.0).epsilon(1e-5));
  CHECK(e.repulsion == Approx(std::pow(pi, 2.5) / std::sqrt(2.0)).epsilon(1e-5));
  CHECK(energy(psi, 3.0) == Approx(e.kinetic + e.attraction + e.repulsion));
  CHECK_THROWS_AS(energy(psi, -1.0), std::invalid_argument);
}

TEST_CASE("localized mass and kinetic energy never exceed their global values") {
  const auto g = build_grid(2000, 40.0);
  const auto psi = moving_gaussian(g, 8.0, 2.0, 1.3, 2.0);
  const double N = mass(psi), K = kinetic(psi);
  for (double R : {0.5, 2.0, 5.0, 20.0, 1e3}) {
    CHECK(localized_mass(psi, R) <= N);
    CHECK(localized_kinetic(psi, R) <= K * (1.0 + 1e-14));
  }
  // weights tend to one as R grows
  CHECK(localized_mass(psi, 1e9) == Approx(N).epsilon(1e-12));
  CHECK(localized_kinetic(psi, 1e12) == Approx(K).epsilon(1e-10));
  CHECK_THROWS_AS(localized_mass(psi, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(localized_kinetic(psi, -1.0), std::invalid_argument);
}

TEST_CASE("localized mass matches its quadrature for a Gaussian") {
  // int exp(-r^2) / (1 + r^2) d^3x = 4 pi int r^2 exp(-r^2) / (1 + r^2) dr
  const auto g = build_grid(6000, 15.0);
  const auto psi = from_profile(g, [](double r) { return std::exp(-0.5 * r * r); });
  double ref = 0.0;
  const std::size_t m = 200000;
  const double h = 15.0 / m;
  for (std::size_t i = 1; i < m; ++i) {
    const double r = i * h;
    ref += r * r * std::exp(-r * r) / (1.0 + r * r);
  }
  CHECK(localized_mass(psi, 1.0) == Approx(four_pi * ref * h).epsilon(1e-8));
}

TEST_CASE("virial expectation obeys the Cauchy-Schwarz bound and vanishes on real states") {
  const auto g = build_grid(1500, 30.0);
  for (double k : {-2.0, 0.5, 3.0}) {
    const auto psi = moving_gaussian(g, 6.0, 1.5, k, 1.0);
    for (double R : {1.0, 5.0, 10.0}) {
      for (const auto& p : {VirialProfile::arctan(R), VirialProfile::log(R)}) {
        const double A = virial_expectation(psi, p);
        CHECK(std::abs(A) <= 2.0 * std::sqrt(kinetic(psi) * mass(psi)) * p.sup_slope());
      }
    }
    CHECK((k > 0 ? 1.0 : -1.0) * virial_expectation(psi, VirialProfile::arctan(5.0)) > 0.0);
  }
  const auto real = from_profile(g, [](double r) { return std::exp(-r); });
  CHECK(virial_expectation(real, VirialProfile::arctan(2.0)) == 0.0);
}

TEST_CASE("virial expectation of a boosted Gaussian matches 2 k int F' |u|^2") {
  // u = a(r) e^{ikr} with real a: Im(conj(u) u') = k a^2
  const auto g = build_grid(8000, 40.0);
  const double k = 0.7;
  const auto psi = moving_gaussian(g, 10.0, 2.0, k, 1.0);
  const auto f = VirialProfile::arctan(3.0);
  double ref = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) ref += f.prime(g.r(j)) * std::norm(psi.v[j]);
  ref *= 2.0 * k * four_pi * g.dr();
  CHECK(virial_expectation(psi, f) == Approx(ref).epsilon(1e-4));
}

TEST_CASE("discrete virial right-hand side is the exact time derivative along the flow") {
  const auto g = build_grid(600, 30.0);
  const auto psi0 = moving_gaussian(g, 6.0, 1.5, 0.8, 2.0);
  for (double s : {0.0, 1.0}) {
    const double Z = 1.5, dt = 2e-4;
    HartreeStepper fwd(g, Z, dt, s), bwd(g, Z, -dt, s);
    auto plus = psi0, minus = psi0;
    fwd.step(plus);
    bwd.step(minus);
    for (double R : {2.0, 8.0}) {
      const auto f = VirialProfile::arctan(R);
      const double fd = (virial_expectation(plus, f) - virial_expectation(minus, f)) / (2.0 * dt);
      const auto rhs = virial_rhs(psi0, f, Z, s);
      INFO("s=" << s << " R=" << R);
      CHECK(fd == Approx(rhs.sum()).epsilon(1e-5));
    }
  }
}

TEST_CASE("discrete and quadrature right-hand sides converge to each other") {
  double previous = 1e300;
  for (std::size_t n : {1000, 2000, 4000}) {
    const auto g = build_grid(n, 30.0);
    const auto psi = moving_gaussian(g, 6.0, 1.5, 0.8, 2.0);
    const auto f = VirialProfile::arctan(4.0);
    const auto a = virial_rhs(psi, f, 1.0), b = virial_rhs_quadrature(psi, f, 1.0);
    const double err = std::abs(a.sum() - b.sum()) / b.magnitude();
    CHECK(err < 1e-3);
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("quadrature repulsion dominates M_R^2") {
  const auto g = build_grid(1500, 30.0);
  for (double c : {2.0, 6.0, 12.0}) {
    const auto psi = moving_gaussian(g, c, 1.0 + 0.2 * c, 0.0, 3.0);
    for (double R : {1.0, 4.0, 10.0}) {
      const double M = localized_mass(psi, R);
      const double rep = virial_rhs_quadrature(psi, VirialProfile::arctan(R), 1.0).repulsion;
      CHECK(rep >= M * M * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("monotonicity lower bound arithmetic") {
  CHECK(monotonicity_lower_bound(2.0, 3.0, 0.5) == Approx(-(4.0 + 1.0) * 0.5 + 0.25));
  CHECK(monotonicity_lower_bound(2.0, 3.0, 0.5, true) == Approx(-(4.0 + 1.0) * 0.5 + 0.25 - 0.5));
}

TEST_CASE("record and CSV writers share one column layout") {
  const auto g = build_grid(300, 20.0);
  const auto psi = moving_gaussian(g, 5.0, 1.0, 0.3, 1.0);
  const std::vector<double> scales{5.0, 10.0};
  const std::vector<ObservableRecord> recs{make_record(0.0, psi, 1.0, scales), make_record(0.5, psi, 1.0, scales)};
  CHECK(recs[0].M_R.size() == 2);
  CHECK(recs[0].mass == Approx(1.0));
  std::ostringstream obs, diag;
  write_observables_csv(obs, scales, recs);
  write_diagnostics_csv(diag, scales, recs);
  std::istringstream in(obs.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,mass,energy,kinetic,M_R@5,M_R@10,K_R@5,K_R@10,A_f@5,A_f@10,A_g@5,A_g@10");
  std::string row;
  std::getline(in, row);
  CHECK(std::count(row.begin(), row.end(), ',') == 11);
  CHECK(diag.str().rfind("t,outer_shell,dA_f@5,dA_f@10,A_f_absorbed@5,A_f_absorbed@10\n", 0) == 0);
}
