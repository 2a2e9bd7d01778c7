#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "maupertuis/effective_hamiltonian.hpp"
#include "oracles.hpp"

using namespace maupertuis;

namespace {
const PeriodicPotential kZero = PeriodicPotential::zero();
const PeriodicPotential kCos = PeriodicPotential::cos1d();
}

TEST_CASE("critical momentum") {
  CHECK(p_critical(kZero) == 0.0);
  CHECK(p_critical(kCos) == Catch::Approx(oracle::frozen::p_crit_cos1d).margin(1e-10));
  // independent quadrature family on the same integral
  const double ref = oracle::integrate(
      [](double x) { return std::sqrt(1.0 - std::cos(two_pi * x)); }, 0.0, 1.0);
  CHECK(p_critical(kCos) == Catch::Approx(ref).margin(1e-9));
  // sqrt homogeneity: scaling V by 4 doubles p_crit
  const auto scaled = PeriodicPotential::from_series(1, {Mode{{1, 0, 0}, 2.0}});
  CHECK(p_critical(scaled) == Catch::Approx(2.0 * p_critical(kCos)).epsilon(1e-10));
}

TEST_CASE("hbar on the zero potential is p^2/2") {
  const auto H = EffectiveHamiltonian1D::build(kZero);
  CHECK(H.p_crit() == 0.0);
  CHECK(H.hbar(2.0) == Catch::Approx(2.0).margin(1e-12));
  CHECK(H.hbar_prime(2.0).value == Catch::Approx(2.0).margin(1e-10));
  for (double p : {0.3, 1.0, 2.7})
    CHECK(H.hbar(p) == Catch::Approx(0.5 * p * p).margin(1e-11));
}

TEST_CASE("flat piece and the implicit branch") {
  const auto H = EffectiveHamiltonian1D::build(kCos);
  CHECK(H.hbar(0.5) == 0.0);  // 0.5 < p_crit
  CHECK(H.hbar(H.p_crit()) == 0.0);
  CHECK(H.hbar(-0.5) == 0.0);
  const double p1 = p_of_alpha(kCos, 1.0);
  CHECK(H.hbar(p1) == Catch::Approx(1.0).margin(1e-10));
  CHECK(H.hbar(-p1) == Catch::Approx(1.0).margin(1e-10));  // even in p
}

TEST_CASE("round trip hbar(p(alpha)) = alpha") {
  const auto H = EffectiveHamiltonian1D::build(kCos);
  for (int i = 0; i < 20; ++i) {
    const double alpha = 0.1 * std::pow(10.0 / 0.1, i / 19.0);
    CHECK(std::abs(H.hbar(p_of_alpha(kCos, alpha)) - alpha) <= 1e-9);
  }
}

TEST_CASE("monotone flat-then-increasing profile with continuity at p_crit") {
  const auto H = EffectiveHamiltonian1D::build(kCos);
  double prev = -1.0;
  for (int i = 0; i <= 60; ++i) {
    const double p = 3.0 * i / 60;
    const double h = H.hbar(p);
    CHECK(h >= prev - 1e-13);
    if (p <= H.p_crit()) CHECK(h == 0.0);
    if (p > H.p_crit() * 1.0001) CHECK(h > prev);
    prev = h;
  }
  // values -> 0 from above as p -> p_crit+
  for (int k = 1; k <= 6; ++k) {
    const double h = H.hbar(H.p_crit() * (1.0 + std::pow(10.0, -k)));
    CHECK(h > 0.0);
    CHECK(h < 0.5 * std::pow(10.0, -(k - 1)));
  }
}

TEST_CASE("C1 join: hbar_prime decreases to 0 at the flat piece") {
  const auto H = EffectiveHamiltonian1D::build(kCos);
  CHECK(H.hbar_prime(0.3).flat);
  CHECK(H.hbar_prime(0.3).value == 0.0);
  double prev = 1e300;
  for (int k = 1; k <= 6; ++k) {
    const auto d = H.hbar_prime(H.p_crit() * (1.0 + std::pow(10.0, -k)));
    CHECK_FALSE(d.flat);
    CHECK(d.value > 0.0);
    CHECK(d.value < prev);
    prev = d.value;
  }
  CHECK(prev < 0.26);  // already well on its way to 0
}

TEST_CASE("hbar_prime equals 1/sigma and matches finite differences") {
  const auto H = EffectiveHamiltonian1D::build(kCos);
  const double p1 = p_of_alpha(kCos, 1.0);
  const double want = 1.0 / sigma(kCos, 1.0);
  CHECK(H.hbar_prime(p1).value == Catch::Approx(want).margin(1e-10));
  const double h = 1e-5;
  const double fd = (H.hbar(p1 + h) - H.hbar(p1 - h)) / (2 * h);
  CHECK(std::abs(fd - want) <= 1e-5);
  // odd symmetry
  CHECK(H.hbar_prime(-p1).value == Catch::Approx(-want).margin(1e-10));
}

TEST_CASE("characteristic flow reproduces the homogenized line") {
  const auto Hz = EffectiveHamiltonian1D::build(kZero);
  CHECK(hj_characteristic_flow(Hz, 0.5, 0.0).slope == Catch::Approx(1.0).margin(1e-11));

  const auto H = EffectiveHamiltonian1D::build(kCos);
  CHECK(hj_characteristic_flow(H, 1.0, 0.0).slope ==
        Catch::Approx(1.0 / oracle::frozen::sigma_cos1d_E1).margin(1e-9));
  for (int i = 1; i <= 10; ++i) {
    const double E = 0.2 * i;
    const double via_hj = hj_characteristic_flow(H, E, 0.3).slope;
    const double via_limit = limit_solution(kCos, E, 0.3).slope;
    CHECK(std::abs(via_hj - via_limit) <= 1e-10);
    CHECK(hj_characteristic_flow(H, E, 0.3).intercept == 0.3);
  }
}

TEST_CASE("separation-ansatz solutions solve the homogenized equation") {
  const auto Hz = EffectiveHamiltonian1D::build(kZero);
  const auto u = hj_solution(Hz, 2.0, +1, 0.7);
  CHECK(u.slope == Catch::Approx(2.0).margin(1e-12));  // p(2) = sqrt(4)
  CHECK(u.at(1.0, 1.0) == Catch::Approx(2.0 + 2.0 + 0.7).margin(1e-11));

  const auto H = EffectiveHamiltonian1D::build(kCos);
  for (int sign : {+1, -1}) {
    const auto s = hj_solution(H, 1.0, sign, 0.0);
    CHECK(s.slope == Catch::Approx(oracle::frozen::p_cos1d_a1).margin(1e-10));
    // residual of du/dt = hbar(du/dx) at random sample points
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u01(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
      (void)u01(rng);
      const double residual = s.time_derivative() - H.hbar(s.space_derivative());
      CHECK(std::abs(residual) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(hj_solution(H, 1.0, 2, 0.0), std::invalid_argument);
}

TEST_CASE("table construction invariants") {
  const auto H = EffectiveHamiltonian1D::build(kCos);
  const auto& a = H.alpha_table();
  const auto& p = H.p_table();
  REQUIRE(a.size() == p.size());
  REQUIRE(a.size() >= 2);
  for (size_t i = 1; i < a.size(); ++i) {
    CHECK(a[i] > a[i - 1]);
    CHECK(p[i] > p[i - 1]);
  }
  for (double pv : p) CHECK(pv > H.p_crit());
}
