#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <span>
#include <vector>

#include "maupertuis/dynamics.hpp"
#include "maupertuis/errors.hpp"
#include "maupertuis/optimize.hpp"
#include "maupertuis/potential.hpp"
#include "maupertuis/quadrature.hpp"

namespace maupertuis {

// Polyline gamma: [0,1] -> R^d with s_i = i/N and fixed endpoints.
struct Curve {
  int dim = 1;
  std::vector<double> nodes;  // (N+1)*dim, row-major

  int segments() const { return static_cast<int>(nodes.size()) / dim - 1; }
  std::span<const double> node(int i) const {
    return {nodes.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
  }
  std::span<double> node(int i) {
    return {nodes.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
  }

  static Curve straight(std::span<const double> a, std::span<const double> b, int N) {
    if (N < 1) throw std::invalid_argument("curve needs at least one segment");
    if (a.size() != b.size()) throw std::invalid_argument("endpoint dimension mismatch");
    Curve c;
    c.dim = static_cast<int>(a.size());
    c.nodes.resize(static_cast<size_t>(N + 1) * a.size());
    for (int i = 0; i <= N; ++i) {
      const double t = static_cast<double>(i) / N;
      for (size_t k = 0; k < a.size(); ++k)
        c.nodes[static_cast<size_t>(i) * a.size() + k] = (1.0 - t) * a[k] + t * b[k];
    }
    return c;
  }
};

// Curve plus physical node times from the Maupertuis reparametrization.
struct TimedCurve {
  Curve curve;
  std::vector<double> times;  // psi_i, psi_0 = 0, strictly increasing
  double total_time() const { return times.back(); }
};

namespace detail {

inline void midpoint_scaled(std::span<const double> a, std::span<const double> b, double eps,
                            std::vector<double>& out) {
  for (size_t k = 0; k < a.size(); ++k) out[k] = 0.5 * (a[k] + b[k]) / eps;
}

}  // namespace detail

// Discrete Jacobi energy: sum_i 2(E - V(m_i/eps)) |dgamma_i|^2 N.
inline double jacobi_energy(const Curve& c, const PeriodicPotential& V, double E, double eps) {
  detail::require_energy_above_floor(E);
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  std::vector<double> m(d);
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto a = c.node(i), b = c.node(i + 1);
    detail::midpoint_scaled(a, b, eps, m);
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    sum += 2.0 * (E - V.eval(m)) * w2;
  }
  return sum * N;
}

// Discrete Jacobi length: sum_i sqrt(2(E - V(m_i/eps))) |dgamma_i|.
inline double jacobi_length(const Curve& c, const PeriodicPotential& V, double E, double eps) {
  detail::require_energy_above_floor(E);
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  std::vector<double> m(d);
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto a = c.node(i), b = c.node(i + 1);
    detail::midpoint_scaled(a, b, eps, m);
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    sum += std::sqrt(2.0 * (E - V.eval(m)) * w2);
  }
  return sum;
}

namespace detail {

// Value and gradient of the discrete Jacobi energy; endpoint entries of the
// gradient are left untouched by the caller's packing.
inline double jacobi_energy_grad(const Curve& c, const PeriodicPotential& V, double E,
                                 double eps, std::vector<double>& grad) {
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  grad.assign(c.nodes.size(), 0.0);
  std::vector<double> m(d), gv(d);
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto a = c.node(i), b = c.node(i + 1);
    midpoint_scaled(a, b, eps, m);
    const double coef = 2.0 * (E - V.eval(m));
    V.grad(m, gv);
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    sum += coef * w2;
    double* ga = grad.data() + static_cast<size_t>(i) * d;
    double* gb = ga + d;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      ga[k] += N * (-2.0 * coef * dk - w2 / eps * gv[k]);
      gb[k] += N * (2.0 * coef * dk - w2 / eps * gv[k]);
    }
  }
  return sum * N;
}

// Discrete action over arbitrary strictly increasing node times.
inline double discrete_action(std::span<const double> times, std::span<const double> nodes,
                              int dim, const PeriodicPotential& V, double eps) {
  const size_t n = times.size();
  const size_t d = static_cast<size_t>(dim);
  std::vector<double> m(d);
  double sum = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    const double dt = times[i + 1] - times[i];
    if (!(dt > 0)) throw std::invalid_argument("action requires strictly increasing times");
    std::span<const double> a{nodes.data() + i * d, d};
    std::span<const double> b{nodes.data() + (i + 1) * d, d};
    midpoint_scaled(a, b, eps, m);
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    sum += 0.5 * w2 / dt - V.eval(m) * dt;
  }
  return sum;
}

inline double action_fixed_grid_grad(const std::vector<double>& nodes, int dim,
                                     const PeriodicPotential& V, double eps, double dt,
                                     std::vector<double>& grad) {
  const size_t d = static_cast<size_t>(dim);
  const size_t n = nodes.size() / d;
  grad.assign(nodes.size(), 0.0);
  std::vector<double> m(d), gv(d);
  double sum = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    std::span<const double> a{nodes.data() + i * d, d};
    std::span<const double> b{nodes.data() + (i + 1) * d, d};
    midpoint_scaled(a, b, eps, m);
    V.grad(m, gv);
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    sum += 0.5 * w2 / dt - V.eval(m) * dt;
    double* ga = grad.data() + i * d;
    double* gb = ga + d;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      ga[k] += -dk / dt - 0.5 * dt / eps * gv[k];
      gb[k] += dk / dt - 0.5 * dt / eps * gv[k];
    }
  }
  return sum;
}

}  // namespace detail

// Action of a timed curve: time-midpoint rule for int |q'|^2/2 - V(q/eps) dt.
inline double action(const TimedCurve& tc, const PeriodicPotential& V, double eps) {
  return detail::discrete_action(tc.times, tc.curve.nodes, tc.curve.dim, V, eps);
}

inline double action(const Trajectory& traj, const PeriodicPotential& V, double eps) {
  return detail::discrete_action(traj.t, traj.q, traj.dim, V, eps);
}

// Resamples the polyline so that every segment carries the same discrete
// Jacobi length w_i = sqrt(2(E - V(m_i/eps))) |dgamma_i|. Node positions are
// equidistributed on the original polyline by fixed-point iteration on the
// chord-based w (a single placement pass is not enough: new chords cut the
// polyline's corners by segment-dependent amounts).
inline Curve reparametrize_arclength(const Curve& c, const PeriodicPotential& V, double E,
                                     double eps, int max_sweeps = 64) {
  detail::require_energy_above_floor(E);
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  std::vector<double> m(d);

  // u in [0, N]: original segment index plus fraction
  auto point_at = [&](double u, std::span<double> out) {
    const int seg = std::min(N - 1, std::max(0, static_cast<int>(std::floor(u))));
    const double t = u - seg;
    const auto a = c.node(seg), b = c.node(seg + 1);
    for (size_t k = 0; k < d; ++k) out[k] = (1.0 - t) * a[k] + t * b[k];
  };

  std::vector<double> u(static_cast<size_t>(N) + 1);
  for (int j = 0; j <= N; ++j) u[static_cast<size_t>(j)] = j;
  std::vector<double> u_next = u;

  std::vector<double> nodes(c.nodes.size());
  std::vector<double> cum(static_cast<size_t>(N) + 1, 0.0);
  double spread = 0.0, prev_spread = 1e300;
  double damping = 1.0;  // halved whenever a sweep fails to contract
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int j = 0; j <= N; ++j)
      point_at(u[static_cast<size_t>(j)], {nodes.data() + static_cast<size_t>(j) * d, d});
    spread = 0.0;
    for (int i = 0; i < N; ++i) {
      const double* a = nodes.data() + static_cast<size_t>(i) * d;
      const double* b = a + d;
      double w2 = 0.0;
      for (size_t k = 0; k < d; ++k) {
        m[k] = 0.5 * (a[k] + b[k]) / eps;
        const double dk = b[k] - a[k];
        w2 += dk * dk;
      }
      const double w = std::sqrt(2.0 * (E - V.eval(m)) * w2);
      cum[static_cast<size_t>(i) + 1] = cum[static_cast<size_t>(i)] + w;
    }
    const double W = cum.back();
    if (!(W > 0)) throw DegenerateSegment("curve has zero Jacobi length");
    for (int i = 0; i < N; ++i) {
      const double w = cum[static_cast<size_t>(i) + 1] - cum[static_cast<size_t>(i)];
      spread = std::max(spread, std::abs(w * N / W - 1.0));
    }
    if (spread <= 1e-12) break;
    if (spread > 0.75 * prev_spread) damping = std::max(0.125, 0.5 * damping);
    prev_spread = spread;

    size_t seg = 0;
    for (int j = 1; j < N; ++j) {
      const double target = W * j / N;
      while (seg + 1 < cum.size() - 1 && cum[seg + 1] < target) ++seg;
      const double frac = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
      const double proposal = u[seg] + frac * (u[seg + 1] - u[seg]);
      u_next[static_cast<size_t>(j)] =
          u[static_cast<size_t>(j)] + damping * (proposal - u[static_cast<size_t>(j)]);
    }
    u.swap(u_next);
  }
  for (int j = 0; j <= N; ++j)
    point_at(u[static_cast<size_t>(j)], {nodes.data() + static_cast<size_t>(j) * d, d});

  Curve out;
  out.dim = c.dim;
  out.nodes = std::move(nodes);
  for (size_t k = 0; k < d; ++k) {
    out.nodes[k] = c.nodes[k];
    out.nodes[static_cast<size_t>(N) * d + k] = c.nodes[static_cast<size_t>(N) * d + k];
  }
  return out;
}

// psi_i from the cumulative midpoint rule of |dgamma| / sqrt(2(E - V)).
// The chord velocities of the result satisfy the energy constraint exactly
// at segment midpoints.
inline TimedCurve reparametrize_to_time(const Curve& c, const PeriodicPotential& V, double E,
                                        double eps) {
  detail::require_energy_above_floor(E);
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  TimedCurve tc;
  tc.curve = c;
  tc.times.assign(static_cast<size_t>(N) + 1, 0.0);
  std::vector<double> m(d);
  for (int i = 0; i < N; ++i) {
    const auto a = c.node(i), b = c.node(i + 1);
    detail::midpoint_scaled(a, b, eps, m);
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    if (!(w2 > 0)) throw DegenerateSegment("zero-length segment at index " + std::to_string(i));
    tc.times[static_cast<size_t>(i) + 1] =
        tc.times[static_cast<size_t>(i)] + std::sqrt(w2 / (2.0 * (E - V.eval(m))));
  }
  return tc;
}

// Max deviation of the chord energies |dq/dpsi|^2/2 + V(m/eps) from E.
inline double max_energy_deviation(const TimedCurve& tc, const PeriodicPotential& V, double E,
                                   double eps) {
  const int N = tc.curve.segments();
  const size_t d = static_cast<size_t>(tc.curve.dim);
  std::vector<double> m(d);
  double dev = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto a = tc.curve.node(i), b = tc.curve.node(i + 1);
    detail::midpoint_scaled(a, b, eps, m);
    const double dt = tc.times[static_cast<size_t>(i) + 1] - tc.times[static_cast<size_t>(i)];
    double w2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double dk = b[k] - a[k];
      w2 += dk * dk;
    }
    dev = std::max(dev, std::abs(0.5 * w2 / (dt * dt) + V.eval(m) - E));
  }
  return dev;
}

struct MinimizeOptions {
  int max_iter = 0;           // 0: 50 * N, capped at 200000
  double grad_tol = 1e-8;     // relative to max(1, initial objective)
  int multistart = 5;         // starts beyond the first get smooth random perturbations
  double perturb_scale = -1;  // <0: 0.1 * |q_b - q_a|
  std::uint64_t seed = 0;
};

namespace detail {

inline void perturb_curve(Curve& c, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  constexpr int kModes = 3;
  std::vector<double> amp(d * kModes);
  for (auto& a : amp) a = gauss(rng);
  for (int i = 1; i < N; ++i) {
    const double s = static_cast<double>(i) / N;
    for (size_t k = 0; k < d; ++k) {
      double p = 0.0;
      for (int mo = 1; mo <= kModes; ++mo)
        p += amp[k * kModes + mo - 1] / mo * std::sin(mo * 3.14159265358979323846 * s);
      c.nodes[static_cast<size_t>(i) * d + k] += scale * p;
    }
  }
}

template <class FG>
CgResult minimize_over_interior(Curve& c, FG&& fg_nodes, const MinimizeOptions& opt,
                                double scale_value) {
  const int N = c.segments();
  const size_t d = static_cast<size_t>(c.dim);
  std::vector<double> x(static_cast<size_t>(N - 1) * d);
  for (int i = 1; i < N; ++i)
    for (size_t k = 0; k < d; ++k)
      x[static_cast<size_t>(i - 1) * d + k] = c.nodes[static_cast<size_t>(i) * d + k];

  std::vector<double> full_grad;
  auto fg = [&](const std::vector<double>& xi, std::vector<double>& gi) {
    for (int i = 1; i < N; ++i)
      for (size_t k = 0; k < d; ++k)
        c.nodes[static_cast<size_t>(i) * d + k] = xi[static_cast<size_t>(i - 1) * d + k];
    const double v = fg_nodes(c, full_grad);
    gi.resize(xi.size());
    for (int i = 1; i < N; ++i)
      for (size_t k = 0; k < d; ++k)
        gi[static_cast<size_t>(i - 1) * d + k] = full_grad[static_cast<size_t>(i) * d + k];
    return v;
  };

  CgOptions copt;
  copt.max_iter = opt.max_iter > 0 ? opt.max_iter : std::min(50 * N, 200000);
  copt.grad_tol = opt.grad_tol * std::max(1.0, scale_value);
  auto res = nonlinear_cg(fg, x, copt);
  for (int i = 1; i < N; ++i)
    for (size_t k = 0; k < d; ++k)
      c.nodes[static_cast<size_t>(i) * d + k] = x[static_cast<size_t>(i - 1) * d + k];
  return res;
}

}  // namespace detail

// Minimizes the discrete Jacobi energy by nonlinear conjugate gradient from
// the straight segment (pre-equalized in Jacobi arc length), optionally with
// multistart over smooth random perturbations; returns the best curve found.
inline Curve minimize_jacobi(const PeriodicPotential& V, double E, double eps,
                             std::span<const double> q_a, std::span<const double> q_b, int N,
                             const MinimizeOptions& opt = {}) {
  detail::require_energy_above_floor(E);
  if (static_cast<int>(q_a.size()) != V.dim() || static_cast<int>(q_b.size()) != V.dim())
    throw std::invalid_argument("endpoint dimension mismatch");
  if (N < 2) throw std::invalid_argument("minimize_jacobi needs N >= 2");

  double sep = 0.0;
  for (size_t k = 0; k < q_a.size(); ++k) sep += (q_b[k] - q_a[k]) * (q_b[k] - q_a[k]);
  sep = std::sqrt(sep);
  const double pscale = opt.perturb_scale >= 0 ? opt.perturb_scale : 0.1 * sep;

  const Curve base = reparametrize_arclength(Curve::straight(q_a, q_b, N), V, E, eps);
  const double scale_value = jacobi_energy(base, V, E, eps);

  auto fg_nodes = [&](const Curve& c, std::vector<double>& grad) {
    return detail::jacobi_energy_grad(c, V, E, eps, grad);
  };

  Curve best;
  double best_value = 0.0;
  bool have_best = false;
  std::string last_error;
  const int starts = std::max(1, opt.multistart);
  for (int s = 0; s < starts; ++s) {
    Curve c = base;
    if (s > 0)
      detail::perturb_curve(c, pscale, opt.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s)));
    try {
      detail::minimize_over_interior(c, fg_nodes, opt, scale_value);
      const double v = jacobi_energy(c, V, E, eps);
      if (!have_best || v < best_value) {
        best = std::move(c);
        best_value = v;
        have_best = true;
      }
    } catch (const NoDescent& e) {
      last_error = e.what();
    }
  }
  if (!have_best) throw NoDescent(last_error.empty() ? "all starts failed" : last_error);
  return best;
}

// Minimizes the discrete action on a fixed uniform time grid over [0, T];
// interior nodes are free, q(0) and q(T) are pinned.
inline TimedCurve minimize_action_fixed_time(const PeriodicPotential& V, double eps,
                                             std::span<const double> q_a,
                                             std::span<const double> q_b, double T, int N,
                                             const MinimizeOptions& opt = {}) {
  if (!(T > 0)) throw std::invalid_argument("minimize_action_fixed_time requires T > 0");
  if (N < 2) throw std::invalid_argument("minimize_action_fixed_time needs N >= 2");
  const double dt = T / N;

  double sep = 0.0;
  for (size_t k = 0; k < q_a.size(); ++k) sep += (q_b[k] - q_a[k]) * (q_b[k] - q_a[k]);
  sep = std::sqrt(sep);
  const double pscale = opt.perturb_scale >= 0 ? opt.perturb_scale : 0.1 * sep;

  const Curve base = Curve::straight(q_a, q_b, N);
  std::vector<double> g0;
  const double scale_value = detail::action_fixed_grid_grad(base.nodes, base.dim, V, eps, dt, g0);

  auto fg_nodes = [&](const Curve& c, std::vector<double>& grad) {
    return detail::action_fixed_grid_grad(c.nodes, c.dim, V, eps, dt, grad);
  };

  Curve best;
  double best_value = 0.0;
  bool have_best = false;
  std::string last_error;
  const int starts = std::max(1, opt.multistart);
  for (int s = 0; s < starts; ++s) {
    Curve c = base;
    if (s > 0)
      detail::perturb_curve(c, pscale, opt.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s)));
    try {
      detail::minimize_over_interior(c, fg_nodes, opt, std::abs(scale_value));
      std::vector<double> gtmp;
      const double v = detail::action_fixed_grid_grad(c.nodes, c.dim, V, eps, dt, gtmp);
      if (!have_best || v < best_value) {
        best = std::move(c);
        best_value = v;
        have_best = true;
      }
    } catch (const NoDescent& e) {
      last_error = e.what();
    }
  }
  if (!have_best) throw NoDescent(last_error.empty() ? "all starts failed" : last_error);

  TimedCurve tc;
  tc.curve = std::move(best);
  tc.times.resize(static_cast<size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) tc.times[static_cast<size_t>(i)] = T * i / N;
  return tc;
}

// Tangent of the timed curve at t = 0 from a one-sided quadratic fit,
// rescaled to the exact energy-E speed.
inline std::vector<double> initial_velocity(const TimedCurve& tc, const PeriodicPotential& V,
                                            double E, double eps) {
  const size_t d = static_cast<size_t>(tc.curve.dim);
  if (tc.curve.segments() < 2) throw std::invalid_argument("need at least two segments");
  const double t0 = tc.times[0], t1 = tc.times[1], t2 = tc.times[2];
  std::vector<double> v(d);
  const double c0 = (2.0 * t0 - t1 - t2) / ((t0 - t1) * (t0 - t2));
  const double c1 = (t0 - t2) / ((t1 - t0) * (t1 - t2));
  const double c2 = (t0 - t1) / ((t2 - t0) * (t2 - t1));
  double norm = 0.0;
  for (size_t k = 0; k < d; ++k) {
    v[k] = c0 * tc.curve.node(0)[k] + c1 * tc.curve.node(1)[k] + c2 * tc.curve.node(2)[k];
    norm += v[k] * v[k];
  }
  norm = std::sqrt(norm);
  if (!(norm > 0)) throw DegenerateSegment("vanishing initial tangent");
  std::vector<double> x0(tc.curve.node(0).begin(), tc.curve.node(0).end());
  for (auto& xk : x0) xk /= eps;
  const double speed = std::sqrt(2.0 * (E - V.eval(x0)));
  for (size_t k = 0; k < d; ++k) v[k] *= speed / norm;
  return v;
}

// Theorem-level consistency of the Maupertuis correspondence on a Jacobi
// minimizer at energy E: the length/action identity, the sharp
// length-energy relation at constant-speed parametrization, the pointwise
// energy constraint, and a symplectic shooting cross-check.
struct CorrespondenceReport {
  double jacobi_energy_value = 0.0;
  double jacobi_length_value = 0.0;
  double action_value = 0.0;
  double total_time = 0.0;
  double identity_residual = 0.0;      // |L - (A + E T)| / max(1, |L|)
  double energy_length_residual = 0.0; // |J - L^2| / max(1, J)
  double energy_deviation = 0.0;       // max midpoint energy error
  double verlet_endpoint_error = 0.0;
  bool identity_ok = false;
  bool energy_length_ok = false;
  bool constraint_ok = false;
  bool verlet_ok = false;
  TimedCurve timed;       // the reparametrized minimizer
  Trajectory trajectory;  // the Verlet cross-check run

  bool all_ok() const { return identity_ok && energy_length_ok && constraint_ok && verlet_ok; }
};

struct VerifyOptions {
  MinimizeOptions minimize;
  int dt_divisor = 400;          // Verlet step eps/dt_divisor
  double tol_identity = 1e-5;
  double tol_energy_length = 1e-5;
  double tol_constraint = 1e-6;
  double tol_endpoint = 1e-3;
};

inline CorrespondenceReport verify_correspondence(const PeriodicPotential& V, double E,
                                                  double eps, std::span<const double> q_a,
                                                  std::span<const double> q_b, int N,
                                                  const VerifyOptions& opt = {}) {
  CorrespondenceReport rep;
  const Curve minimizer = minimize_jacobi(V, E, eps, q_a, q_b, N, opt.minimize);
  const Curve arc = reparametrize_arclength(minimizer, V, E, eps);

  rep.jacobi_energy_value = jacobi_energy(arc, V, E, eps);
  rep.jacobi_length_value = jacobi_length(arc, V, E, eps);
  rep.energy_length_residual =
      std::abs(rep.jacobi_energy_value - rep.jacobi_length_value * rep.jacobi_length_value) /
      std::max(1.0, rep.jacobi_energy_value);

  const TimedCurve tc = reparametrize_to_time(arc, V, E, eps);
  rep.total_time = tc.total_time();
  rep.action_value = action(tc, V, eps);
  rep.identity_residual =
      std::abs(rep.jacobi_length_value - (rep.action_value + E * rep.total_time)) /
      std::max(1.0, std::abs(rep.jacobi_length_value));
  rep.energy_deviation = max_energy_deviation(tc, V, E, eps);

  const auto v0 = initial_velocity(tc, V, E, eps);
  const long steps = static_cast<long>(std::ceil(rep.total_time * opt.dt_divisor / eps));
  const int stride = static_cast<int>(std::max(1L, steps / 2048));
  rep.trajectory =
      integrate_verlet(V, eps, q_a, v0, rep.total_time, eps / opt.dt_divisor, stride);
  double err = 0.0;
  const auto qend = rep.trajectory.q_at(rep.trajectory.size() - 1);
  for (size_t k = 0; k < q_b.size(); ++k) err += (qend[k] - q_b[k]) * (qend[k] - q_b[k]);
  rep.verlet_endpoint_error = std::sqrt(err);
  rep.timed = tc;

  rep.identity_ok = rep.identity_residual <= opt.tol_identity;
  rep.energy_length_ok = rep.energy_length_residual <= opt.tol_energy_length;
  rep.constraint_ok = rep.energy_deviation <= opt.tol_constraint;
  rep.verlet_ok = rep.verlet_endpoint_error <= opt.tol_endpoint;
  return rep;
}

// One cell-problem estimate at a given eps.
struct JacobiCellEstimate {
  double eps = 0.0;
  int nodes = 0;
  double value = 0.0;
  double lower_bound = 0.0;  // 2E|z|^2
  double upper_bound = 0.0;  // 2(E - min V)|z|^2
};

struct ActionCellEstimate {
  double eps = 0.0;
  int nodes = 0;
  double value = 0.0;
};

struct CellOptions {
  double nodes_per_unit = 40.0;  // N >= nodes_per_unit * |z| / eps
  int min_nodes = 64;
  int max_nodes = 1 << 15;
  MinimizeOptions minimize;
};

inline int cell_node_count(double z_norm, double eps, const CellOptions& opt) {
  const double n = opt.nodes_per_unit * z_norm / eps;
  return std::min(opt.max_nodes, std::max(opt.min_nodes, static_cast<int>(std::ceil(n))));
}

// inf of the Jacobi energy over curves 0 -> z, per eps (Gamma-limit density
// estimate for Jbar). Every estimate obeys the Finsler sandwich
// 2E|z|^2 <= est <= 2(E - min V)|z|^2 by construction of the discretization.
inline std::vector<JacobiCellEstimate> cell_problem_jacobi(const PeriodicPotential& V, double E,
                                                           std::span<const double> z,
                                                           std::span<const double> eps_list,
                                                           const CellOptions& opt = {}) {
  detail::require_energy_above_floor(E);
  double z2 = 0.0;
  for (double zk : z) z2 += zk * zk;
  if (!(z2 > 0)) throw std::invalid_argument("cell problem needs z != 0");

  std::vector<double> origin(z.size(), 0.0);
  std::vector<double> zv(z.begin(), z.end());

  // optimizations across eps are independent; run them concurrently
  std::vector<std::future<JacobiCellEstimate>> tasks;
  for (double eps : eps_list)
    tasks.push_back(std::async(std::launch::async, [&V, E, eps, z2, origin, zv, opt] {
      JacobiCellEstimate est;
      est.eps = eps;
      est.nodes = cell_node_count(std::sqrt(z2), eps, opt);
      const Curve c = minimize_jacobi(V, E, eps, origin, zv, est.nodes, opt.minimize);
      est.value = jacobi_energy(c, V, E, eps);
      est.lower_bound = 2.0 * E * z2;
      est.upper_bound = 2.0 * (E - V.min_value()) * z2;
      return est;
    }));
  std::vector<JacobiCellEstimate> out;
  for (auto& t : tasks) out.push_back(t.get());
  return out;
}

// inf of the action over timed curves 0 -> z in fixed time T, per eps
// (Gamma-limit density estimate for Lbar).
inline std::vector<ActionCellEstimate> cell_problem_action(const PeriodicPotential& V, double T,
                                                           std::span<const double> z,
                                                           std::span<const double> eps_list,
                                                           const CellOptions& opt = {}) {
  if (!(T > 0)) throw std::invalid_argument("cell_problem_action requires T > 0");
  double z2 = 0.0;
  for (double zk : z) z2 += zk * zk;

  std::vector<double> origin(z.size(), 0.0);
  std::vector<double> zv(z.begin(), z.end());

  std::vector<std::future<ActionCellEstimate>> tasks;
  for (double eps : eps_list)
    tasks.push_back(std::async(std::launch::async, [&V, T, eps, z2, origin, zv, opt] {
      ActionCellEstimate est;
      est.eps = eps;
      est.nodes = cell_node_count(std::max(1.0, std::sqrt(z2)), eps, opt);
      const TimedCurve tc =
          minimize_action_fixed_time(V, eps, origin, zv, T, est.nodes, opt.minimize);
      est.value = action(tc, V, eps);
      return est;
    }));
  std::vector<ActionCellEstimate> out;
  for (auto& t : tasks) out.push_back(t.get());
  return out;
}

}  // namespace maupertuis
