#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ionlab/dynamics.hpp"

using namespace ionlab;
using Catch::Approx;

namespace {

WaveFunction gaussian(const RadialGrid& g, double center, double width, double k, double N) {
  auto psi = from_profile(g, [&](double r) {
    const double x = (r - center) / width;
    return std::polar(std::exp(-0.5 * x * x), k * r);
  });
  normalize_to(psi, N);
  return psi;
}

PropagatorConfig short_run(double dt, std::size_t steps, std::size_t every) {
  PropagatorConfig c;
  c.dt = dt;
  c.steps = steps;
  c.record_every = every;
  c.scales = {2.0, 5.0};
  return c;
}

}  // namespace

TEST_CASE("Hartree propagation conserves mass and energy") {
  const auto g = build_grid(800, 40.0);
  const auto psi0 = gaussian(g, 5.0, 1.5, 0.0, 2.0);
  const auto traj = propagate(psi0, 1.0, short_run(2e-3, 1000, 10));
  CHECK(traj.records.size() == 101);
  CHECK(traj.records.back().t == Approx(2.0));
  CHECK(traj.max_mass_drift < 1e-12);
  CHECK(traj.max_energy_drift < 1e-4);
  CHECK(mass(traj.final_state) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("one step is reversed by a step of -dt") {
  const auto g = build_grid(400, 20.0);
  const auto psi0 = gaussian(g, 4.0, 1.0, 0.7, 1.0);
  HartreeStepper fwd(g, 2.0, 1e-3), bwd(g, 2.0, -1e-3);
  auto psi = psi0;
  for (int k = 0; k < 20; ++k) fwd.step(psi);
  for (int k = 0; k < 20; ++k) bwd.step(psi);
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) err = std::max(err, std::abs(psi.v[j] - psi0.v[j]));
  CHECK(err < 1e-12);
}

TEST_CASE("free linear flow reproduces the closed-form Gaussian spreading in the interior") {
  // A 1D Gaussian packet far from the origin: width^2(t) = w^2 + (2t/w)^2 for i u_t = -u_rr.
  const auto g = build_grid(4000, 80.0);
  const double w = 2.0;
  // the packet is placed on v = r u directly
  const auto psi0 = from_profile(g, [w](double r) { return std::exp(-0.5 * (r - 40.0) * (r - 40.0) / (w * w)) / r; });
  HartreeStepper stepper(g, 0.0, 1e-3, 0.0);
  auto psi = psi0;
  for (int k = 0; k < 2000; ++k) stepper.step(psi);
  const double t = 2.0;
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double p = std::norm(psi.v[j]);
    m0 += p;
    m2 += p * (g.r(j) - 40.0) * (g.r(j) - 40.0);
  }
  // variance of |v|^2 is width^2 / 2
  CHECK(2.0 * m2 / m0 == Approx(w * w + 4.0 * t * t / (w * w)).epsilon(1e-4));
}

TEST_CASE("time average of linear and piecewise data") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0}, y{1.0, 3.0, 5.0, 7.0};
  CHECK(time_average(t, y, 3.0) == Approx(4.0));
  CHECK(time_average(t, y, 2.5) == Approx(3.5));
  CHECK(time_average(t, y, 0.5) == Approx(1.5));
  CHECK_THROWS_AS(time_average(t, y, 3.5), CoverageError);
  CHECK_THROWS_AS(time_average(t, y, 0.0), CoverageError);
  CHECK_THROWS_AS(time_average(std::vector<double>{0.5, 1.0}, std::vector<double>{1.0, 1.0}, 1.0), CoverageError);
  CHECK_THROWS_AS(time_average(t, std::vector<double>{1.0}, 1.0), CoverageError);
}

TEST_CASE("propagator configuration is validated") {
  const auto g = build_grid(200, 20.0);
  auto c = short_run(1e-3, 10, 1);
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c = short_run(1e-3, 0, 1);
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c = short_run(1e-3, 10, 0);
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c = short_run(1e-3, 10, 1);
  c.absorber = {true, 5.0, 5.0};
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c.absorber = {true, 5.0, 20.0};
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c.absorber = {true, -1.0, 12.0};
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c.absorber = {true, 5.0, 12.0};
  CHECK_NOTHROW(c.validate(g));
  auto bad = gaussian(g, 5.0, 1.0, 0.0, 1.0);
  bad.v[3] = cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(propagate(bad, 1.0, short_run(1e-3, 10, 1)), std::invalid_argument);
}

TEST_CASE("absorber mask is one inside and decays smoothly outside") {
  const Absorber a{true, 10.0, 30.0};
  CHECK(a.mask(10.0, 40.0, 0.1) == 1.0);
  CHECK(a.mask(30.0, 40.0, 0.1) == 1.0);
  CHECK(a.mask(40.0, 40.0, 0.1) == Approx(std::exp(-1.0)));
  CHECK(a.mask(35.0, 40.0, 0.1) == Approx(std::exp(-0.5)));
  CHECK(Absorber{}.mask(40.0, 40.0, 0.1) == 1.0);
}

TEST_CASE("absorber removes outgoing mass and never adds any") {
  const auto g = build_grid(600, 30.0);
  const auto psi0 = gaussian(g, 8.0, 1.5, 3.0, 1.0);
  auto c = short_run(2e-3, 4000, 40);
  c.absorber = {true, 20.0, 20.0};
  const auto traj = propagate(psi0, 0.5, c);
  for (std::size_t i = 0; i + 1 < traj.records.size(); ++i)
    CHECK(traj.records[i + 1].mass <= traj.records[i].mass * (1.0 + 1e-13));
  CHECK(traj.records.back().mass < 0.5);
  CHECK(traj.absorber);
}

TEST_CASE("bound right-hand sides follow their formulas") {
  // 2Z + 3/R + 2 sqrt(K N) R^2 / (Z T)
  CHECK(localized_mass_rhs(2.0, 5.0, 10.0, 4.0, 1.0) == Approx(4.0 + 0.6 + 2.0 * 2.0 * 25.0 / 20.0));
  CHECK(localized_mass_rhs(2.0, 5.0, 10.0, 4.0, 1.0, 2.0) == Approx(2.0 + 0.6 + 5.0));
  CHECK_THROWS_AS(localized_mass_rhs(0.0, 5.0, 10.0, 4.0, 1.0), std::invalid_argument);
  CHECK(kinetic_average_rhs(2.0, 4.0, 8.0, 9.0, 1.0, 0.5) ==
        Approx((1.0 + 1.0 + 6.0 / 16.0) * 0.5 + 2.0 * 4.0 * 3.0 / 8.0));
  CHECK(kinetic_global_rhs(2.0, 2.0, 4.0) == Approx(8.0 + 8.0 + 8.0 * 2.0));
  CHECK(kinetic_global_rhs(2.0, 4.0, 4.0, 1.5) == Approx(16.0 + 8.0 + 8.0 * 2.0));
}

TEST_CASE("trajectory checks on a short hard-wall run") {
  const auto g = build_grid(800, 40.0);
  const auto psi0 = gaussian(g, 4.0, 1.5, 0.5, 1.0);
  const double Z = 1.0;
  const auto traj = propagate(psi0, Z, short_run(1e-3, 2000, 1));

  const auto m = check_localized_mass_bound(traj, Z, 5.0, 2.0);
  const double avg = time_average(traj.records, [](const ObservableRecord& r) { return r.M_R[1]; }, 2.0);
  CHECK(m.lhs == Approx(avg));
  CHECK(m.pass());
  CHECK(m.mode == "hard_wall");
  CHECK_FALSE(m.flagged("reflection"));

  const auto k = check_kinetic_bound(traj, Z, 5.0, 2.0);
  CHECK(k.pass());
  CHECK(k.global.lhs >= traj.records.front().kinetic);

  for (double R : {2.0, 5.0}) {
    CHECK(check_monotonicity(traj, Z, R).pass());
    const auto vi = virial_identity_check(traj, R);
    CHECK(vi.points == traj.records.size() - 2);
    CHECK(vi.pass());
  }
  CHECK_THROWS_AS(check_monotonicity(traj, Z, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(check_localized_mass_bound(traj, Z, 5.0, 3.0), CoverageError);
}

TEST_CASE("energy drift of the splitting is second order in dt") {
  const auto g = build_grid(800, 40.0);
  const auto psi0 = gaussian(g, 5.0, 1.0, 0.0, 1.0);
  const auto d = energy_drift_convergence(psi0, 1.0, short_run(4e-3, 250, 1));
  INFO("coarse " << d.drift_coarse << " fine " << d.drift_fine);
  CHECK(d.pass());
}
