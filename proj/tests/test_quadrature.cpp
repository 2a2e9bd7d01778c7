#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "maupertuis/quadrature.hpp"
#include "oracles.hpp"

using namespace maupertuis;

namespace {
const PeriodicPotential kZero = PeriodicPotential::zero();
const PeriodicPotential kCos = PeriodicPotential::cos1d();
}

TEST_CASE("sigma on the zero potential") {
  CHECK(sigma(kZero, 0.5) == Catch::Approx(1.0).epsilon(1e-13));
  CHECK(sigma(kZero, 2.0) == Catch::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("sigma(1) for cos1d against the frozen oracle value") {
  const double s = sigma(kCos, 1.0);
  CHECK(s == Catch::Approx(oracle::frozen::sigma_cos1d_E1).margin(1e-10));
  // independent quadrature family on the same integral
  const double ref = oracle::integrate(
      [](double x) { return 1.0 / std::sqrt(3.0 - std::cos(two_pi * x)); }, 0.0, 1.0);
  CHECK(s == Catch::Approx(ref).margin(1e-11));
}

TEST_CASE("sigma_lower_bound closed forms") {
  CHECK(sigma_lower_bound(1.0, 0.5) == Catch::Approx(std::asinh(1.0)).epsilon(1e-14));
  CHECK(sigma_lower_bound(4.0, 2.0) == Catch::Approx(0.5 * std::asinh(1.0)).epsilon(1e-14));
  // bound really is below sigma for a maximizer-at-origin potential
  const double E = 0.01;
  CHECK(sigma_lower_bound(kCos.curvature_bound(), E) < sigma(kCos, E));
}

TEST_CASE("sigma blow-up as E -> 0 dominates the arcsinh bound") {
  double prev = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const double E = std::pow(10.0, -k);
    const double s = sigma(kCos, E);
    CHECK(s > prev);
    CHECK(s > sigma_lower_bound(kCos.curvature_bound(), E));
    prev = s;
  }
}

TEST_CASE("p_of_alpha closed forms and the critical limit") {
  CHECK(p_of_alpha(kZero, 2.0) == Catch::Approx(2.0).epsilon(1e-13));
  CHECK(p_of_alpha(kZero, 0.5) == Catch::Approx(1.0).epsilon(1e-13));
  // p(alpha) -> p_crit = 2 sqrt(2)/pi as alpha -> 0+
  CHECK(std::abs(p_of_alpha(kCos, 1e-8) - oracle::frozen::p_crit_cos1d) < 1e-6);
  CHECK(p_of_alpha(kCos, 1.0) == Catch::Approx(oracle::frozen::p_cos1d_a1).margin(1e-11));
}

TEST_CASE("monotonicity of sigma and p") {
  double prev_s = 1e300, prev_p = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double E = 0.05 * std::pow(2.2, i);
    const double s = sigma(kCos, E);
    const double p = p_of_alpha(kCos, E);
    CHECK(s < prev_s);
    CHECK(p > prev_p);
    prev_s = s;
    prev_p = p;
  }
}

TEST_CASE("derivative identity p'(alpha) = sigma(alpha)") {
  for (double E : {0.3, 1.0, 2.5}) {
    const double h = 1e-5;
    const double fd = (p_of_alpha(kCos, E + h) - p_of_alpha(kCos, E - h)) / (2 * h);
    CHECK(std::abs(fd - sigma(kCos, E)) < 1e-6);
  }
}

TEST_CASE("t_eps is the sigma line for the zero potential") {
  for (double eps : {0.3, 0.05, 0.001})
    CHECK(t_eps(kZero, 0.5, eps, 0.0, 3.0) == Catch::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("t_eps whole-period identity") {
  const double E = 1.0, eps = 0.05;
  const double s = sigma(kCos, E);
  for (int k : {1, 7, 26}) {
    const double q = eps * k;
    CHECK(t_eps(kCos, E, eps, 0.0, q) == Catch::Approx(eps * k * s).margin(1e-12));
  }
}

TEST_CASE("t_eps against an independent adaptive quadrature") {
  const double E = 1.0, eps = 0.05, q = 1.3;
  const double mine = t_eps(kCos, E, eps, 0.0, q);
  const double ref = oracle::integrate(
      [&](double g) { return 1.0 / std::sqrt(3.0 - std::cos(two_pi * g / eps)); }, 0.0, q);
  CHECK(mine == Catch::Approx(ref).margin(1e-10));
  CHECK(std::abs(mine - sigma(kCos, E) * q) <= 2 * eps / std::sqrt(2 * E));
}

TEST_CASE("deviation bound |t_eps - sigma (q - q_a)| over random pairs") {
  const QuadratureConfig cfg;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uq(0.0, 5.0);
  std::uniform_real_distribution<double> ulog(std::log(1e-4), std::log(0.3));
  for (double E : {0.5, 2.0}) {
    const double s = sigma(kCos, E, cfg);
    for (int i = 0; i < 50; ++i) {
      const double q = uq(rng);
      const double eps = std::exp(ulog(rng));
      const double dev = std::abs(t_eps(kCos, E, eps, 0.0, q, cfg) - s * q);
      CHECK(dev <= 2 * eps / std::sqrt(2 * E) + 10 * cfg.abs_tol);
    }
  }
}

TEST_CASE("t_eps decomposition reaches eps = 1e-5 cheaply") {
  const double E = 1.0, eps = 1e-5, q = 2.0;
  const double dev = std::abs(t_eps(kCos, E, eps, 0.0, q) - sigma(kCos, E) * q);
  CHECK(dev <= 2 * eps / std::sqrt(2 * E) + 1e-11);
}

TEST_CASE("tau_eps basics") {
  CHECK(tau_eps(kZero, 0.5, 0.1, 0.0, 2.0) == Catch::Approx(2.0).epsilon(1e-13));
  // tau(e) <= (q_b - q_a)/sqrt(2e) and decays with e
  for (double e : {10.0, 100.0, 1e4})
    CHECK(tau_eps(kCos, e, 0.1, 0.0, 1.0) <= 1.0 / std::sqrt(2 * e));
  // whole-period case equals sigma exactly
  CHECK(tau_eps(kCos, 1.0, 0.1, 0.0, 1.0) ==
        Catch::Approx(oracle::frozen::sigma_cos1d_E1).margin(1e-10));
}

TEST_CASE("tau_eps strictly decreasing in e") {
  double prev = 1e300;
  for (int i = 0; i < 10; ++i) {
    const double e = 0.1 * std::pow(2.0, i);
    const double t = tau_eps(kCos, e, 0.07, 0.0, 1.0);
    CHECK(t < prev);
    prev = t;
  }
}

TEST_CASE("contract violations and non-convergence") {
  CHECK_THROWS_AS(sigma(kCos, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sigma(kCos, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(sigma(PeriodicPotential::cos2d(), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tau_eps(kCos, 1.0, 0.1, 1.0, 0.0), std::invalid_argument);
  QuadratureConfig bad;
  bad.max_panels = 64;  // far too few for the near-singular peak at E = 1e-6
  CHECK_THROWS_AS(sigma(kCos, 1e-6, bad), NonConvergent);
  bad = QuadratureConfig{};
  bad.abs_tol = -1.0;
  CHECK_THROWS_AS(sigma(kCos, 1.0, bad), std::invalid_argument);
}
