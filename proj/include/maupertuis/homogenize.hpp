#pragma once

#include <cmath>
#include <future>
#include <limits>
#include <vector>

#include "maupertuis/dynamics.hpp"
#include "maupertuis/potential.hpp"
#include "maupertuis/quadrature.hpp"

namespace maupertuis {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double at(double t) const { return slope * t + intercept; }
};

// Least-squares slope of log(y) against log(x). NaN when any y vanishes
// (machine-zero errors carry no rate information).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
  for (double v : y)
    if (!(v > 1e-300)) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double num = 0, den = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    num += dx * (std::log(y[i]) - my);
    den += dx * dx;
  }
  return num / den;
}

// eps-sweep of sup-errors against the analytic O(eps) bound C_E*eps/sigma(E).
struct ConvergenceReport {
  std::vector<double> eps;        // strictly decreasing
  std::vector<double> sup_error;  // per eps
  std::vector<double> bound;      // C_E*eps/sigma(E) per eps
  std::vector<bool> within_bound; // sup_error <= bound + slack
  double slope = std::numeric_limits<double>::quiet_NaN();
  double T_obs = 0.0;
  double sigma_E = 0.0;
  double C_E = 0.0;
  double slack = 0.0;

  bool all_within_bound() const {
    for (bool b : within_bound)
      if (!b) return false;
    return !within_bound.empty();
  }
};

// Family of admissible limit slopes for fixed initial velocity.
struct SlopeFamily {
  double energy_lo = 0.0;  // open end
  double energy_hi = 0.0;  // closed end
  std::vector<std::pair<double, double>> samples;  // (E, 1/sigma(E))
  bool inf_slope_zero = false;  // true iff p_a < sqrt(-2 min V)
};

// Subsequence eps_k = q_a/(V0inv + k) along which the initial energy is
// exactly E even though the initial velocity is held at p_a.
struct NonuniquenessSequence {
  double V0_inv = 0.0;
  double energy = 0.0;
  double limit_slope = 0.0;
  std::vector<double> eps;  // k = 1..k_max
};

struct BvpFixedEnergy {
  double T_eps = 0.0;
  double T_bar = 0.0;
  double bound = 0.0;  // 2*eps/sqrt(2E)
};

struct BvpFixedTime {
  double E_eps = 0.0;
  double tau_residual = 0.0;  // |tau_eps(E_eps) - T|
  int iterations = 0;
};

// q(t) = t/sigma(E) + q_a, the homogenized limit of the fixed-energy IVP.
inline Line limit_solution(const PeriodicPotential& V, double E, double q_a,
                           const QuadratureConfig& cfg = {}) {
  return Line{1.0 / sigma(V, E, cfg), q_a};
}

// Measures sup |q_eps - q| over [0, T_obs] for each eps and fits the rate.
// T_obs <= 0 selects the default horizon 10*sigma(E).
inline ConvergenceReport ivp_convergence_experiment(const PeriodicPotential& V, double E,
                                                    double q_a, std::vector<double> eps_list,
                                                    double T_obs = -1.0, int samples = 2048,
                                                    double slack = 1e-7,
                                                    const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  detail::require_energy_above_floor(E);
  if (samples < 2) throw std::invalid_argument("samples must be >= 2");
  for (size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("eps list must be strictly decreasing");

  ConvergenceReport rep;
  rep.sigma_E = sigma(V, E, cfg);
  rep.C_E = 2.0 / std::sqrt(2.0 * E);
  rep.T_obs = T_obs > 0 ? T_obs : 10.0 * rep.sigma_E;
  rep.slack = slack;
  rep.eps = std::move(eps_list);
  const Line line = limit_solution(V, E, q_a, cfg);

  // the sweep is embarrassingly parallel over eps
  std::vector<std::future<double>> tasks;
  for (double eps : rep.eps)
    tasks.push_back(std::async(std::launch::async, [&V, &cfg, &rep, line, E, q_a, eps, samples] {
      double sup = 0.0;
      for (int i = 0; i < samples; ++i) {
        const double t = rep.T_obs * i / (samples - 1);
        const double q = solve_1d_closed_form(V, E, eps, q_a, t, cfg);
        sup = std::max(sup, std::abs(q - line.at(t)));
      }
      return sup;
    }));
  for (size_t i = 0; i < tasks.size(); ++i) {
    const double sup = tasks[i].get();
    rep.sup_error.push_back(sup);
    rep.bound.push_back(rep.C_E * rep.eps[i] / rep.sigma_E);
    rep.within_bound.push_back(sup <= rep.bound.back() + slack);
  }
  rep.slope = loglog_slope(rep.eps, rep.sup_error);
  return rep;
}

namespace detail {

// Root of V(x) = target on (0, 1] by scan plus bisection. A target of 0 is
// met only on the maximizer set, where there is no sign change; that case
// returns a located maximizer directly.
inline double level_set_point(const PeriodicPotential& V, double target) {
  if (target > 1e-12 || target < V.min_value() - 1e-12)
    throw NoRoot("level V = " + std::to_string(target) + " is empty");
  if (target >= -1e-13) {
    const double m = V.cell_maximizers().front();
    return m > 0.0 ? m : 1.0;  // shift the lattice maximizer into (0, 1]
  }
  const int n = 8192;
  double x_lo = -1.0, x_hi = -1.0;
  double prev_x = 0.0, prev_f = V.eval1(0.0) - target;
  for (int i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double f = V.eval1(x) - target;
    if (f == 0.0) return x;
    if (prev_f * f < 0.0) {
      x_lo = prev_x;
      x_hi = x;
      break;
    }
    prev_x = x;
    prev_f = f;
  }
  if (x_lo < 0) throw NoRoot("bracketing scan found no crossing of the level set");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (x_lo + x_hi);
    const double f = V.eval1(mid) - target;
    if (std::abs(f) < 1e-15 || x_hi - x_lo < 1e-16) return mid;
    if ((V.eval1(x_lo) - target) * f <= 0.0)
      x_hi = mid;
    else
      x_lo = mid;
  }
  return 0.5 * (x_lo + x_hi);
}

}  // namespace detail

// Fixed q_a != 0 and p_a > 0: picks V0inv with V(V0inv) = E - p_a^2/2 so that
// every eps_k = q_a/(V0inv + k) starts at energy exactly E.
inline NonuniquenessSequence nonuniqueness_sequence(const PeriodicPotential& V, double q_a,
                                                    double p_a, double E, int k_max = 40,
                                                    const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  detail::require_energy_above_floor(E);
  if (q_a == 0.0) throw std::invalid_argument("nonuniqueness construction needs q_a != 0");
  if (!(p_a > 0)) throw std::invalid_argument("p_a must be positive");
  const double target = E - 0.5 * p_a * p_a;
  if (target > 1e-12 || target < V.min_value() - 1e-12)
    throw NoRoot("E outside the admissible interval (min V <= E - p_a^2/2 <= 0)");

  NonuniquenessSequence seq;
  seq.V0_inv = detail::level_set_point(V, target);
  seq.energy = E;
  seq.limit_slope = 1.0 / sigma(V, E, cfg);
  for (int k = 1; k <= k_max; ++k) seq.eps.push_back(q_a / (seq.V0_inv + k));
  return seq;
}

// Admissible energies (min{p_a^2/2 + min V, 0}, p_a^2/2] cut to (0, inf),
// sampled as (E, 1/sigma(E)) pairs.
inline SlopeFamily slope_family(const PeriodicPotential& V, double p_a, int n_samples = 16,
                                const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  if (!(p_a > 0)) throw std::invalid_argument("p_a must be positive");
  SlopeFamily fam;
  const double hi = 0.5 * p_a * p_a;
  const double lo = std::max(0.0, std::min(hi + V.min_value(), 0.0));
  fam.energy_lo = lo;
  fam.energy_hi = hi;
  fam.inf_slope_zero = p_a < std::sqrt(-2.0 * V.min_value());
  for (int i = 0; i < n_samples; ++i) {
    // closed at the top end, open at the bottom
    const double E = hi - (hi - lo) * i / n_samples;
    fam.samples.emplace_back(E, 1.0 / sigma(V, E, cfg));
  }
  return fam;
}

// Fixed energy: arrival time T_eps = t_eps(q_b) and its limit sigma(E)(q_b - q_a).
inline BvpFixedEnergy bvp_fixed_energy(const PeriodicPotential& V, double E, double q_a,
                                       double q_b, double eps,
                                       const QuadratureConfig& cfg = {}) {
  if (!(q_b > q_a)) throw std::invalid_argument("bvp requires q_b > q_a");
  BvpFixedEnergy r;
  r.T_eps = t_eps(V, E, eps, q_a, q_b, cfg);
  r.T_bar = sigma(V, E, cfg) * (q_b - q_a);
  r.bound = 2.0 * eps / std::sqrt(2.0 * E);
  return r;
}

// Fixed time: solves tau_eps(E_eps) = T by bracket expansion and bisection,
// using that tau_eps is strictly decreasing in the energy.
inline BvpFixedTime bvp_fixed_time(const PeriodicPotential& V, double T, double q_a, double q_b,
                                   double eps, const QuadratureConfig& cfg = {},
                                   double tau_tol = 1e-10) {
  if (!(T > 0)) throw std::invalid_argument("bvp_fixed_time requires T > 0");
  if (!(q_b > q_a)) throw std::invalid_argument("bvp requires q_b > q_a");

  auto tau = [&](double e) { return tau_eps(V, e, eps, q_a, q_b, cfg); };
  const double L = q_b - q_a;
  double e_hi = std::max(1.0, L * L / (2.0 * T * T));  // tau(e_hi) <= L/sqrt(2 e_hi)
  while (tau(e_hi) > T) e_hi *= 2.0;
  double e_lo = e_hi;
  try {
    while (tau(e_lo) < T) {
      e_lo *= 0.5;
      if (e_lo < 1e-12)
        throw BracketFailure(
            "energy bracket underflowed 1e-12; T is beyond the desk-scale regime");
    }
  } catch (const NonConvergent&) {
    // the integrand already needs more resolution than the cell budget:
    // same regime signal as the bracket floor
    throw BracketFailure("energy bracket drove tau into the near-separatrix regime (T = " +
                         std::to_string(T) + " is beyond desk scale)");
  } catch (const std::invalid_argument&) {
    throw BracketFailure("energy bracket underflowed the positivity floor");
  }

  BvpFixedTime r;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (e_lo + e_hi);
    const double f = tau(mid) - T;
    r.iterations = it + 1;
    if (std::abs(f) <= tau_tol) {
      r.E_eps = mid;
      r.tau_residual = std::abs(f);
      return r;
    }
    if (f > 0)
      e_lo = mid;  // tau too long: energy too small
    else
      e_hi = mid;
  }
  throw NonConvergent("bvp_fixed_time bisection stalled");
}

}  // namespace maupertuis
