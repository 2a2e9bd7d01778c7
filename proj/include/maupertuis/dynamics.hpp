#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "maupertuis/errors.hpp"
#include "maupertuis/potential.hpp"
#include "maupertuis/quadrature.hpp"

namespace maupertuis {

// Fine-scale trajectory samples (t_i, q_i, p_i) at a given eps, unit mass.
struct Trajectory {
  double eps = 0.0;
  int dim = 1;
  std::vector<double> t;       // strictly increasing, t[0] = 0
  std::vector<double> q;       // n * dim, row-major
  std::vector<double> p;       // n * dim
  std::vector<double> energy;  // n

  size_t size() const { return t.size(); }
  std::span<const double> q_at(size_t i) const { return {q.data() + i * static_cast<size_t>(dim), static_cast<size_t>(dim)}; }
  std::span<const double> p_at(size_t i) const { return {p.data() + i * static_cast<size_t>(dim), static_cast<size_t>(dim)}; }

  double max_energy_drift() const {
    double d = 0.0;
    for (double e : energy) d = std::max(d, std::abs(e - energy.front()));
    return d;
  }
};

// ||p||^2/2 + V(q/eps).
inline double total_energy(const PeriodicPotential& V, double eps, std::span<const double> q,
                           std::span<const double> p) {
  double kin = 0.0;
  std::vector<double> scaled(q.size());
  for (size_t a = 0; a < q.size(); ++a) {
    kin += 0.5 * p[a] * p[a];
    scaled[a] = q[a] / eps;
  }
  return kin + V.eval(scaled);
}

// p = +sqrt(2(E - V(q_a/eps))): the rightward branch.
inline double initial_momentum_for_energy(const PeriodicPotential& V, double E, double q_a,
                                          double eps) {
  detail::require_1d(V);
  detail::require_energy_above_floor(E);
  const double v = V.eval1(q_a / eps);
  return std::sqrt(2.0 * (E - v));
}

// Stormer-Verlet (kick-drift-kick) for q'' = -(1/eps) grad V(q/eps).
// dt must resolve the eps-wavelength forcing: dt <= eps/50.
inline Trajectory integrate_verlet(const PeriodicPotential& V, double eps,
                                   std::span<const double> q0, std::span<const double> p0,
                                   double t_end, double dt, int record_stride = 1) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (dt > eps / 50.0 * (1.0 + 1e-12))
    throw StepTooLarge("dt = " + std::to_string(dt) + " exceeds eps/50 = " +
                       std::to_string(eps / 50.0));
  const int d = V.dim();
  if (static_cast<int>(q0.size()) != d || static_cast<int>(p0.size()) != d)
    throw std::invalid_argument("state dimension mismatch");

  const long n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  Trajectory traj;
  traj.eps = eps;
  traj.dim = d;
  const size_t reserve = static_cast<size_t>(n_steps / record_stride + 2);
  traj.t.reserve(reserve);
  traj.q.reserve(reserve * static_cast<size_t>(d));
  traj.p.reserve(reserve * static_cast<size_t>(d));
  traj.energy.reserve(reserve);

  std::vector<double> q(q0.begin(), q0.end());
  std::vector<double> p(p0.begin(), p0.end());
  std::vector<double> scaled(static_cast<size_t>(d));
  std::vector<double> g(static_cast<size_t>(d));

  auto force_kick = [&](double half_dt) {
    for (int a = 0; a < d; ++a) scaled[static_cast<size_t>(a)] = q[static_cast<size_t>(a)] / eps;
    V.grad(scaled, g);
    for (int a = 0; a < d; ++a) p[static_cast<size_t>(a)] -= half_dt / eps * g[static_cast<size_t>(a)];
  };
  auto record = [&](double t) {
    traj.t.push_back(t);
    traj.q.insert(traj.q.end(), q.begin(), q.end());
    traj.p.insert(traj.p.end(), p.begin(), p.end());
    traj.energy.push_back(total_energy(V, eps, q, p));
  };

  record(0.0);
  double t = 0.0;
  for (long s = 0; s < n_steps; ++s) {
    const double h = std::min(dt, t_end - t);
    force_kick(0.5 * h);
    for (int a = 0; a < d; ++a) q[static_cast<size_t>(a)] += h * p[static_cast<size_t>(a)];
    force_kick(0.5 * h);
    t = (s + 1 == n_steps) ? t_end : t + h;
    if ((s + 1) % record_stride == 0 || s + 1 == n_steps) record(t);
  }
  return traj;
}

// Inverts t_eps by bracketing plus safeguarded Newton; the 1D trajectory is
// strictly monotone for E > 0 = max V, so this is the exact flow map.
inline double solve_1d_closed_form(const PeriodicPotential& V, double E, double eps, double q_a,
                                   double t, const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  detail::require_energy_above_floor(E);
  if (t == 0.0) return q_a;

  const double s_min = std::sqrt(2.0 * E);
  const double s_max = std::sqrt(2.0 * (E - V.min_value()));
  double lo = q_a + t * (t > 0 ? s_min : s_max);
  double hi = q_a + t * (t > 0 ? s_max : s_min);
  const double pad = 1e-9 * (1.0 + std::abs(t)) * s_max;
  lo -= pad;
  hi += pad;

  auto g = [&](double q) { return t_eps(V, E, eps, q_a, q, cfg) - t; };
  double g_lo = g(lo), g_hi = g(hi);
  if (g_lo > 0 || g_hi < 0)
    throw RootNotBracketed("solve_1d_closed_form: speed bounds failed to bracket");

  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  double q = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double gq = g(q);
    if (std::abs(gq) <= tol) return q;
    if (gq > 0)
      hi = q;
    else
      lo = q;
    const double speed = std::sqrt(2.0 * (E - V.eval1(q / eps)));
    double next = q - gq * speed;  // Newton: dt/dq = 1/speed
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    q = next;
  }
  throw NonConvergent("solve_1d_closed_form did not reach tolerance");
}

}  // namespace maupertuis
