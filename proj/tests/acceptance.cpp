// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Each criterion pins its tolerances in code; nothing is deferred
// to runtime calibration.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "maupertuis/dynamics.hpp"
#include "maupertuis/effective_hamiltonian.hpp"
#include "maupertuis/geodesics.hpp"
#include "maupertuis/homogenize.hpp"
#include "maupertuis/potential.hpp"
#include "maupertuis/quadrature.hpp"

using namespace maupertuis;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", idx, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// criterion 1: Lemma deviation bound for t_eps against the sigma line
void criterion_1(const PeriodicPotential& V) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uq(0.0, 5.0);
  int violations = 0;
  double worst_margin = -1e300;
  for (double E : {0.5, 1.0, 2.0}) {
    const double s = sigma(V, E);
    for (double eps : {0.1, 0.05, 0.01, 0.005}) {
      const double bound = 2.0 * eps / std::sqrt(2.0 * E) + 1e-7;
      for (int i = 0; i < 100; ++i) {
        const double q = uq(rng);
        const double dev = std::abs(t_eps(V, E, eps, 0.0, q) - s * q);
        worst_margin = std::max(worst_margin, dev - bound);
        if (dev > bound) ++violations;
      }
    }
  }
  report(1, "Lemma deviation bound |t_eps - sigma (q - q_a)| <= 2 eps/sqrt(2E) + 1e-7",
         violations == 0,
         std::to_string(violations) + " violations in 1200 draws; worst margin " +
             fmt(worst_margin));
}

// criterion 2: uniform convergence of the fixed-energy IVP with O(eps) rate
void criterion_2(const PeriodicPotential& V) {
  bool pass = true;
  std::string detail;
  for (double E : {0.5, 1.0, 2.0}) {
    const auto rep = ivp_convergence_experiment(V, E, 0.0, {0.1, 0.05, 0.01, 0.005});
    const bool bounds = rep.all_within_bound();
    const bool rate = rep.slope >= 0.8 && rep.slope <= 1.2;
    pass = pass && bounds && rate;
    detail += "E=" + fmt(E) + ": slope " + fmt(rep.slope) + (bounds ? "" : " BOUND-VIOLATION") +
              "; ";
  }
  report(2, "sup |q_eps - q| <= C_E eps/sigma(E) + 1e-7 with log-log rate in [0.8, 1.2]", pass,
         detail);
}

// criterion 3: sigma blow-up dominating the arcsinh lower bound
void criterion_3(const PeriodicPotential& V) {
  bool increasing = true, above = true;
  double prev = 0.0;
  std::string detail;
  for (int k = 1; k <= 6; ++k) {
    const double E = std::pow(10.0, -k);
    const double s = sigma(V, E);
    const double lb = sigma_lower_bound(V.curvature_bound(), E);
    increasing = increasing && s > prev;
    above = above && s > lb;
    prev = s;
    if (k == 6) detail = "sigma(1e-6) = " + fmt(s) + " > bound " + fmt(lb);
  }
  report(3, "sigma(10^-k) strictly increasing, k = 1..6, and above the arcsinh bound",
         increasing && above, detail);
}

// criterion 4: fixed-velocity non-uniqueness along constructed subsequences
void criterion_4(const PeriodicPotential& V) {
  const double q_a = 1.0, p_a = 1.0;
  bool pass = true;
  std::string detail;
  std::vector<double> slopes, slope_tols;
  for (double E : {0.5, 0.25}) {
    const auto seq = nonuniqueness_sequence(V, q_a, p_a, E, 40);
    double worst_init = 0.0;
    for (double eps : seq.eps)
      worst_init = std::max(worst_init, std::abs(0.5 * p_a * p_a + V.eval1(q_a / eps) - E));
    const auto rep = ivp_convergence_experiment(V, E, q_a, seq.eps);
    pass = pass && worst_init <= 1e-10 && rep.all_within_bound();
    slopes.push_back(seq.limit_slope);
    slope_tols.push_back((rep.bound.back() + rep.slack) / rep.T_obs);
    detail += "E=" + fmt(E) + ": init-energy dev " + fmt(worst_init) +
              (rep.all_within_bound() ? "" : " BOUND-VIOLATION") + "; ";
  }
  const double gap = std::abs(slopes[0] - slopes[1]);
  const double tol = 10.0 * std::max(slope_tols[0], slope_tols[1]);
  pass = pass && gap > tol;
  detail += "slope gap " + fmt(gap) + " > " + fmt(tol);
  report(4, "fixed-velocity family: exact energies along eps_k and distinct limit slopes", pass,
         detail);
}

// criterion 5: fixed-energy boundary value problem arrival times
void criterion_5(const PeriodicPotential& V) {
  bool pass = true;
  double worst = -1e300;
  for (double E : {0.5, 1.0, 2.0}) {
    for (double eps : {0.1, 0.05, 0.01, 0.005}) {
      const auto r = bvp_fixed_energy(V, E, 0.0, 1.0, eps);
      const double dev = std::abs(r.T_eps - r.T_bar);
      worst = std::max(worst, dev - (r.bound + 1e-7));
      pass = pass && dev <= r.bound + 1e-7;
    }
  }
  report(5, "|T_eps - sigma(E)(q_b - q_a)| <= 2 eps/sqrt(2E) + 1e-7 across the sweep", pass,
         "worst margin " + fmt(worst));
}

// criterion 6: fixed-time boundary value problem energy roots
void criterion_6(const PeriodicPotential& V) {
  const double T = sigma(V, 1.0);
  bool pass = true;
  std::string detail;
  double e_at_finest = 0.0;
  for (double eps : {0.1, 0.05, 0.02, 0.01, 0.005}) {
    const auto r = bvp_fixed_time(V, T, 0.0, 1.0, eps);
    pass = pass && r.tau_residual <= 1e-10 && r.E_eps >= 0.5 && r.E_eps <= 2.0;
    e_at_finest = r.E_eps;
  }
  pass = pass && std::abs(e_at_finest - 1.0) <= 1e-3;
  report(6, "fixed-time roots: |tau(E_eps) - T| <= 1e-10, E_eps in [0.5, 2], E_eps -> 1", pass,
         "E_eps(0.005) = " + fmt(e_at_finest));
}

// criterion 7: effective Hamiltonian round trip, p_crit, C1 join, flow slope
void criterion_7(const PeriodicPotential& V) {
  const auto H = EffectiveHamiltonian1D::build(V);
  double worst_rt = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double alpha = 0.1 * std::pow(100.0, i / 19.0);  // 0.1 .. 10
    worst_rt = std::max(worst_rt, std::abs(H.hbar(p_of_alpha(V, alpha)) - alpha));
  }
  const bool rt_ok = worst_rt <= 1e-9;

  const double p_crit_want = 2.0 * std::sqrt(2.0) / 3.14159265358979323846;
  const bool pc_ok = std::abs(H.p_crit() - p_crit_want) <= 1e-8;

  bool c1_ok = true;
  double prev = 1e300;
  for (int k = 1; k <= 6; ++k) {
    const double d = H.hbar_prime(H.p_crit() * (1.0 + std::pow(10.0, -k))).value;
    c1_ok = c1_ok && d > 0 && d < prev;
    prev = d;
  }

  bool flow_ok = true;
  for (double E : {0.5, 1.0, 2.0}) {
    const double via_flow = hj_characteristic_flow(H, E, 0.0).slope;
    flow_ok = flow_ok && std::abs(via_flow - 1.0 / sigma(V, E)) <= 1e-10;
  }

  report(7, "effective Hamiltonian: round trip 1e-9, p_crit = 2 sqrt(2)/pi, C1 join, flow slope",
         rt_ok && pc_ok && c1_ok && flow_ok,
         "round-trip dev " + fmt(worst_rt) + ", |p_crit - 2sqrt2/pi| = " +
             fmt(std::abs(H.p_crit() - p_crit_want)) + ", hbar'(p_crit(1+1e-6)) = " + fmt(prev));
}

// criterion 8: the 1D Maupertuis route is the straight segment plus t_eps
void criterion_8(const PeriodicPotential& V) {
  const double E = 1.0, eps = 0.2;
  const int N = 4096;
  const Curve c = minimize_jacobi(V, E, eps, {{0.0}}, {{1.0}}, N);
  double out_of_segment = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double x = c.node(i)[0];
    out_of_segment = std::max(out_of_segment, std::max(-x, x - 1.0));
  }
  const TimedCurve tc = reparametrize_to_time(c, V, E, eps);
  const double t_dev = std::abs(tc.total_time() - t_eps(V, E, eps, 0.0, 1.0));
  report(8, "1D geodesic is the segment (1e-8) and its time matches t_eps(q_b) (1e-6)",
         out_of_segment <= 1e-8 && t_dev <= 1e-6,
         "segment deviation " + fmt(std::max(out_of_segment, 0.0)) + ", time deviation " +
             fmt(t_dev));
}

// criterion 9: Maupertuis correspondence identities on cos2d
// (The length-energy relation at constant-speed parametrization is the sharp
// Cauchy-Schwarz equality J = L^2 for the functionals as defined here.)
void criterion_9(const PeriodicPotential& V2) {
  const double a[2] = {0.0, 0.0}, b[2] = {1.0, 0.0};
  const auto rep = verify_correspondence(V2, 1.0, 0.25, {a, 2}, {b, 2}, 200);
  report(9, "Maupertuis/Hamilton identities: L = A + E T_E, J = L^2, Verlet endpoint 1e-3",
         rep.all_ok(),
         "identity " + fmt(rep.identity_residual) + ", length-energy " +
             fmt(rep.energy_length_residual) + ", endpoint " + fmt(rep.verlet_endpoint_error));
}

// criterion 10: Gamma-limit cell problems
void criterion_10(const PeriodicPotential& V1, const PeriodicPotential& V2) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> eps{0.25, 0.125, 0.0625};
  CellOptions opt;  // multistart 5 by default
  bool sandwich = true;

  // 2D sweep for Jbar along z = (1, 0)
  const double z2d[2] = {1.0, 0.0};
  const auto cells2 = cell_problem_jacobi(V2, 1.0, {z2d, 2}, eps, opt);
  for (const auto& c : cells2)
    sandwich = sandwich && c.value >= c.lower_bound - 1e-9 && c.value <= c.upper_bound + 1e-9;

  // 2-homogeneity at the smallest eps
  const double z2x[2] = {2.0, 0.0};
  const auto doubled = cell_problem_jacobi(V2, 1.0, {z2x, 2}, std::vector<double>{eps.back()}, opt);
  sandwich = sandwich && doubled.front().value >= doubled.front().lower_bound - 1e-9 &&
             doubled.front().value <= doubled.front().upper_bound + 1e-9;
  const double homo_ratio = doubled.front().value / cells2.back().value;
  const bool homo_ok = std::abs(homo_ratio / 4.0 - 1.0) <= 0.02;

  // 1D limit value against p(E)^2
  const auto cells1 = cell_problem_jacobi(V1, 1.0, {{1.0}}, eps, opt);
  for (const auto& c : cells1)
    sandwich = sandwich && c.value >= c.lower_bound - 1e-9 && c.value <= c.upper_bound + 1e-9;
  const double p1 = p_of_alpha(V1, 1.0);
  const bool limit_ok = std::abs(cells1.back().value - p1 * p1) / (p1 * p1) <= 0.01;

  // Lbar estimates Cauchy between the two smallest eps (2D sweep)
  const auto acts = cell_problem_action(V2, 0.6, {z2d, 2}, eps, opt);
  const double cauchy =
      std::abs(acts[1].value - acts[2].value) / std::max(1e-300, std::abs(acts[2].value));
  const bool cauchy_ok = cauchy <= 0.02;

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(10, "Gamma-limit cells: Finsler sandwich, 2-homogeneity 2%, 1D = p(E)^2 1%, Lbar Cauchy 2%",
         sandwich && homo_ok && limit_ok && cauchy_ok,
         "homogeneity ratio " + fmt(homo_ratio) + ", 1D rel dev " +
             fmt(std::abs(cells1.back().value - p1 * p1) / (p1 * p1)) + ", Lbar gap " +
             fmt(cauchy) + ", " + fmt(secs) + " s");
}

}  // namespace

int main() {
  const auto cos1d = PeriodicPotential::cos1d();
  const auto cos2d = PeriodicPotential::cos2d();
  criterion_1(cos1d);
  criterion_2(cos1d);
  criterion_3(cos1d);
  criterion_4(cos1d);
  criterion_5(cos1d);
  criterion_6(cos1d);
  criterion_7(cos1d);
  criterion_8(cos1d);
  criterion_9(cos2d);
  criterion_10(cos1d, cos2d);
  if (g_failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures;
}
