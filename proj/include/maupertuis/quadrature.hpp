#pragma once

#include <cmath>
#include <cstring>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "maupertuis/errors.hpp"
#include "maupertuis/potential.hpp"

namespace maupertuis {

struct QuadratureConfig {
  int nodes_per_cell = 16;   // Gauss-Legendre order per panel
  int remainder_nodes = 32;  // initial node budget on remainder intervals
  double abs_tol = 1e-12;
  int max_panels = 1 << 21;  // doubling past this throws NonConvergent

  void validate() const {
    if (nodes_per_cell < 8) throw std::invalid_argument("nodes_per_cell must be >= 8");
    if (remainder_nodes < 32) throw std::invalid_argument("remainder_nodes must be >= 32");
    if (!(abs_tol > 0)) throw std::invalid_argument("abs_tol must be positive");
    if (max_panels < 4) throw std::invalid_argument("max_panels must be >= 4");
  }
};

namespace detail {

struct GaussRule {
  std::vector<double> nodes;    // on (0,1)
  std::vector<double> weights;  // sum to 1
};

// Nodes by Newton iteration on the Legendre recurrence.
inline GaussRule make_gauss_rule(int n) {
  GaussRule r;
  r.nodes.resize(static_cast<size_t>(n));
  r.weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[static_cast<size_t>(i)] = 0.5 * (1.0 - x);  // ascending on (0,1)
    r.weights[static_cast<size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

inline const GaussRule& gauss_rule(int n) {
  static std::mutex mu;
  static std::unordered_map<int, GaussRule> rules;
  std::scoped_lock lock(mu);
  auto it = rules.find(n);
  if (it == rules.end()) it = rules.emplace(n, make_gauss_rule(n)).first;
  return it->second;
}

template <class F>
double composite_gauss(F&& f, double a, double b, int panels, const GaussRule& rule) {
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double x0 = a + p * h;
    double local = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      local += rule.weights[i] * f(x0 + h * rule.nodes[i]);
    sum += local;
  }
  return sum * h;
}

// Panel doubling until two successive composite values agree to abs_tol.
template <class F>
double integrate_doubling(F&& f, double a, double b, double abs_tol, int order,
                          int initial_panels, int max_panels = 1 << 21) {
  if (a == b) return 0.0;
  const GaussRule& rule = gauss_rule(order);
  int panels = std::max(1, initial_panels);
  double prev = composite_gauss(f, a, b, panels, rule);
  while (panels < max_panels) {
    panels *= 2;
    const double cur = composite_gauss(f, a, b, panels, rule);
    if (std::abs(cur - prev) <= abs_tol) return cur;
    prev = cur;
  }
  throw NonConvergent("panel doubling stalled on [" + std::to_string(a) + ", " +
                      std::to_string(b) + "]");
}

// Integrates with interior breakpoints (quadrature panels never straddle them).
template <class F>
double integrate_split(F&& f, double a, double b, std::span<const double> splits,
                       const QuadratureConfig& cfg, int initial_panels) {
  std::vector<double> pts{a};
  for (double s : splits)
    if (s > a + 1e-14 && s < b - 1e-14) pts.push_back(s);
  pts.push_back(b);
  const double tol = cfg.abs_tol / static_cast<double>(pts.size() - 1);
  double total = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    total += integrate_doubling(f, pts[i], pts[i + 1], tol, cfg.nodes_per_cell, initial_panels,
                                cfg.max_panels);
  return total;
}

inline void require_energy_above_floor(double E) {
  if (!(E >= 1e-12))
    throw std::invalid_argument("energy must be positive (floor 1e-12); E <= 0 is out of scope");
}

inline void require_1d(const PeriodicPotential& V) {
  if (V.dim() != 1) throw std::invalid_argument("operation requires a 1D potential");
}

// Guarded memo for the one-period integral; the same (V, E) pair is hit
// thousands of times per experiment through t_eps.
class CellIntegralCache {
 public:
  template <class Compute>
  double get(const PeriodicPotential& V, double E, const QuadratureConfig& cfg,
             Compute&& compute) {
    std::string key;
    key.reserve(64 + V.modes().size() * 16);
    append(key, E);
    append(key, cfg.abs_tol);
    append(key, static_cast<double>(cfg.nodes_per_cell));
    append(key, static_cast<double>(cfg.max_panels));
    append(key, V.offset());
    for (const Mode& m : V.modes()) {
      append(key, m.amplitude);
      append(key, static_cast<double>(m.k[0]));
    }
    std::scoped_lock lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    const double v = compute();
    if (map_.size() > 4096) map_.clear();
    map_.emplace(std::move(key), v);
    return v;
  }

  static CellIntegralCache& instance() {
    static CellIntegralCache c;
    return c;
  }

 private:
  static void append(std::string& key, double v) {
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    key.append(buf, sizeof(double));
  }

  std::mutex mu_;
  std::unordered_map<std::string, double> map_;
};

}  // namespace detail

// sigma(E) = int_0^1 (2(E - V))^{-1/2}, the reciprocal homogenized velocity.
inline double sigma(const PeriodicPotential& V, double E, const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  detail::require_energy_above_floor(E);
  cfg.validate();
  return detail::CellIntegralCache::instance().get(V, E, cfg, [&] {
    auto f = [&](double x) { return 1.0 / std::sqrt(2.0 * (E - V.eval1(x))); };
    return detail::integrate_split(f, 0.0, 1.0, V.cell_maximizers(), cfg, 2);
  });
}

// (1/sqrt(C_V)) arcsinh(sqrt(C_V/(2E))); a lower bound for sigma when the
// maximum of V sits on the lattice.
inline double sigma_lower_bound(double C_V, double E) {
  if (!(C_V > 0)) throw std::invalid_argument("C_V must be positive");
  detail::require_energy_above_floor(E);
  return std::asinh(std::sqrt(C_V / (2.0 * E))) / std::sqrt(C_V);
}

// p(alpha) = int_0^1 sqrt(2(alpha - V)); strictly increasing in alpha.
inline double p_of_alpha(const PeriodicPotential& V, double alpha,
                         const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  detail::require_energy_above_floor(alpha);
  cfg.validate();
  auto f = [&](double x) { return std::sqrt(2.0 * (alpha - V.eval1(x))); };
  return detail::integrate_split(f, 0.0, 1.0, V.cell_maximizers(), cfg, 2);
}

// t_eps(q) = int_{q_a}^{q} (2(E - V(g/eps)))^{-1/2} dg, evaluated by the
// substitution g = eps*u and a split of [q_a/eps, q/eps] into whole unit
// cells plus remainder intervals; whole cells reuse one cached cell integral.
inline double t_eps(const PeriodicPotential& V, double E, double eps, double q_a, double q,
                    const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  detail::require_energy_above_floor(E);
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  cfg.validate();
  if (q == q_a) return 0.0;
  if (q < q_a) return -t_eps(V, E, eps, q, q_a, cfg);

  const double a = q_a / eps;
  const double b = q / eps;
  const double k0 = std::ceil(a);
  const double k1 = std::floor(b);
  auto f = [&](double u) { return 1.0 / std::sqrt(2.0 * (E - V.eval1(u))); };
  const int rem_panels = std::max(1, cfg.remainder_nodes / cfg.nodes_per_cell);

  double total = 0.0;
  if (k0 <= k1) {
    total += (k1 - k0) * sigma(V, E, cfg);
    if (k0 > a)
      total += detail::integrate_doubling(f, a, k0, cfg.abs_tol, cfg.nodes_per_cell,
                                          rem_panels, cfg.max_panels);
    if (b > k1)
      total += detail::integrate_doubling(f, k1, b, cfg.abs_tol, cfg.nodes_per_cell,
                                          rem_panels, cfg.max_panels);
  } else {
    total = detail::integrate_doubling(f, a, b, cfg.abs_tol, cfg.nodes_per_cell, rem_panels,
                                       cfg.max_panels);
  }
  return eps * total;
}

// tau_eps(e): crossing time of [q_a, q_b] at energy e; strictly decreasing in e.
inline double tau_eps(const PeriodicPotential& V, double e, double eps, double q_a, double q_b,
                      const QuadratureConfig& cfg = {}) {
  if (!(q_b > q_a)) throw std::invalid_argument("tau_eps requires q_b > q_a");
  return t_eps(V, e, eps, q_a, q_b, cfg);
}

}  // namespace maupertuis
