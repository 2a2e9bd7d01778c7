#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "maupertuis/dynamics.hpp"
#include "oracles.hpp"

using namespace maupertuis;

namespace {
const PeriodicPotential kZero = PeriodicPotential::zero();
const PeriodicPotential kCos = PeriodicPotential::cos1d();
}

TEST_CASE("initial momentum for a prescribed energy") {
  CHECK(initial_momentum_for_energy(kZero, 0.5, 0.3, 0.1) == Catch::Approx(1.0).epsilon(1e-14));
  // q_a/eps at the cell minimum: V = -1 there
  CHECK(initial_momentum_for_energy(kCos, 1.0, 0.5, 1.0) == Catch::Approx(2.0).epsilon(1e-13));
  // q_a = 1, eps = 1/(k + 0.25): V(q_a/eps) = V(0.25)
  const double eps = 1.0 / (3 + 0.25);
  const double want = std::sqrt(2.0 * (1.0 - kCos.eval1(0.25)));
  CHECK(initial_momentum_for_energy(kCos, 1.0, 1.0, eps) == Catch::Approx(want).epsilon(1e-13));
}

TEST_CASE("energy bookkeeping") {
  const double q = 0.0, p1 = 1.0;
  CHECK(total_energy(kZero, 0.1, {&q, 1}, {&p1, 1}) == Catch::Approx(0.5).epsilon(1e-14));
  const double qmin = 0.05, p2 = 2.0;  // q/eps = 0.5: the minimum of cos1d
  CHECK(total_energy(kCos, 0.1, {&qmin, 1}, {&p2, 1}) == Catch::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("Verlet free flight is exact") {
  const double q0 = 0.0, p0 = 1.0;
  const auto traj = integrate_verlet(kZero, 1.0, {&q0, 1}, {&p0, 1}, 2.0, 0.02);
  CHECK(traj.q_at(traj.size() - 1)[0] == Catch::Approx(2.0).margin(1e-12));
  CHECK(traj.t.back() == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("Verlet rejects steps that do not resolve the forcing") {
  const double q0 = 0.0, p0 = 1.0;
  CHECK_THROWS_AS(integrate_verlet(kCos, 0.1, {&q0, 1}, {&p0, 1}, 1.0, 0.1 / 10), StepTooLarge);
}

TEST_CASE("Verlet endpoint matches the closed-form solver and RK4") {
  const double E = 1.0, eps = 0.1;
  const double q0 = 0.0;
  const double p0 = initial_momentum_for_energy(kCos, E, q0, eps);
  // dt = eps/2000 puts the second-order error below 1e-6 on this setup
  const auto traj = integrate_verlet(kCos, eps, {&q0, 1}, {&p0, 1}, 1.0, eps / 2000, 1 << 30);
  const double q_closed = solve_1d_closed_form(kCos, E, eps, q0, 1.0);
  CHECK(std::abs(traj.q_at(traj.size() - 1)[0] - q_closed) < 1e-6);

  const auto ref = oracle::rk4(kCos, eps, {q0}, {p0}, 1.0, eps / 2000);
  CHECK(std::abs(ref.q[0] - q_closed) < 1e-8);
}

TEST_CASE("Verlet energy drift is second order") {
  const double E = 1.0, eps = 0.1;
  const double q0 = 0.0;
  const double p0 = initial_momentum_for_energy(kCos, E, q0, eps);
  std::vector<double> dts{eps / 100, eps / 200, eps / 400};
  std::vector<double> drifts;
  for (double dt : dts) {
    const auto traj = integrate_verlet(kCos, eps, {&q0, 1}, {&p0, 1}, 10.0, dt, 16);
    drifts.push_back(traj.max_energy_drift());
  }
  const double ratio = drifts[0] / drifts[1];
  CHECK(ratio > 3.2);
  CHECK(ratio < 4.8);
  // log-log slope across the three steps
  const double slope = std::log(drifts[0] / drifts[2]) / std::log(dts[0] / dts[2]);
  CHECK(slope > 1.8);
  CHECK(slope < 2.2);
}

TEST_CASE("closed-form solver on the zero potential") {
  CHECK(solve_1d_closed_form(kZero, 0.5, 0.1, 0.0, 3.0) == Catch::Approx(3.0).margin(1e-11));
}

TEST_CASE("closed-form round trip t_eps(solve(t)) = t") {
  const double E = 0.7, eps = 0.03, q_a = 0.2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(-3.0, 8.0);
  for (int i = 0; i < 50; ++i) {
    const double t = ut(rng);
    const double q = solve_1d_closed_form(kCos, E, eps, q_a, t);
    CHECK(std::abs(t_eps(kCos, E, eps, q_a, q) - t) <= 1e-10);
  }
}

TEST_CASE("closed-form solver against the frozen fine-integration oracle") {
  const double q = solve_1d_closed_form(kCos, 1.0, 0.02, 0.0, 1.0);
  CHECK(q == Catch::Approx(oracle::frozen::solve_E1_eps002_t1).margin(1e-9));
  // independent ODE route at dt = eps/2000
  const double p0 = initial_momentum_for_energy(kCos, 1.0, 0.0, 0.02);
  const auto ref = oracle::rk4(kCos, 0.02, {0.0}, {p0}, 1.0, 0.02 / 2000);
  CHECK(q == Catch::Approx(ref.q[0]).margin(1e-7));
}

TEST_CASE("closed-form solution is monotone in t and conserves energy") {
  const double E = 1.3, eps = 0.05;
  double prev = -1e300;
  for (int i = 0; i <= 200; ++i) {
    const double t = 2.0 * i / 200;
    const double q = solve_1d_closed_form(kCos, E, eps, 0.0, t);
    CHECK(q > prev);
    prev = q;
    const double p = std::sqrt(2.0 * (E - kCos.eval1(q / eps)));
    CHECK(std::abs(total_energy(kCos, eps, {&q, 1}, {&p, 1}) - E) <= 1e-9);
  }
}
