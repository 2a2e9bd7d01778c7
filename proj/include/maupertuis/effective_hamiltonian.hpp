#pragma once

#include <cmath>
#include <vector>

#include "maupertuis/errors.hpp"
#include "maupertuis/homogenize.hpp"
#include "maupertuis/potential.hpp"
#include "maupertuis/quadrature.hpp"

namespace maupertuis {

// int_0^1 sqrt(-2V): the critical momentum below which hbar is flat.
// Splitting at the maximizers is essential: -2V vanishes to even order
// there, so the integrand is analytic on every panel after the split.
inline double p_critical(const PeriodicPotential& V, const QuadratureConfig& cfg = {}) {
  detail::require_1d(V);
  cfg.validate();
  auto f = [&](double x) { return std::sqrt(std::max(0.0, -2.0 * V.eval1(x))); };
  return detail::integrate_split(f, 0.0, 1.0, V.cell_maximizers(), cfg, 2);
}

struct HbarDerivative {
  double value = 0.0;
  bool flat = false;  // |p| <= p_crit: derivative is exactly 0
};

// u(x,t) = sign * p(E) * x + E * t + C solves du/dt = hbar(du/dx).
struct HJSolution {
  int sign = +1;
  double energy = 0.0;
  double slope = 0.0;  // p(E)
  double constant = 0.0;

  double at(double x, double t) const { return sign * slope * x + energy * t + constant; }
  double space_derivative() const { return sign * slope; }
  double time_derivative() const { return energy; }
};

// hbar(p): 0 on [0, p_crit], otherwise the unique alpha > 0 with
// p(alpha) = |p|. A monotone (alpha, p(alpha)) table brackets the inversion;
// safeguarded Newton with p'(alpha) = sigma(alpha) refines it.
class EffectiveHamiltonian1D {
 public:
  static EffectiveHamiltonian1D build(const PeriodicPotential& V,
                                      const QuadratureConfig& cfg = {},
                                      double alpha_min = 1e-4, double alpha_max = 1e2,
                                      int points_per_decade = 10, double table_tol = 1e-4,
                                      double inversion_tol = 1e-13) {
    detail::require_1d(V);
    cfg.validate();
    EffectiveHamiltonian1D h;
    h.V_ = V;
    h.cfg_ = cfg;
    h.inversion_tol_ = inversion_tol;
    h.p_crit_ = p_critical(V, cfg);

    const double decades = std::log10(alpha_max / alpha_min);
    const int n = static_cast<int>(std::round(decades * points_per_decade)) + 1;
    for (int i = 0; i < n; ++i) {
      const double a = alpha_min * std::pow(alpha_max / alpha_min, static_cast<double>(i) / (n - 1));
      h.alpha_.push_back(a);
      h.p_.push_back(p_of_alpha(V, a, cfg));
    }

    // midpoint refinement until piecewise interpolation meets table_tol
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> na, np;
      bool refined = false;
      for (size_t i = 0; i + 1 < h.alpha_.size(); ++i) {
        na.push_back(h.alpha_[i]);
        np.push_back(h.p_[i]);
        const double am = std::sqrt(h.alpha_[i] * h.alpha_[i + 1]);
        const double pm = p_of_alpha(V, am, cfg);
        if (std::abs(h.interp(am) - pm) > table_tol * std::max(1.0, pm)) {
          na.push_back(am);
          np.push_back(pm);
          refined = true;
        }
      }
      na.push_back(h.alpha_.back());
      np.push_back(h.p_.back());
      h.alpha_ = std::move(na);
      h.p_ = std::move(np);
      if (!refined) break;
    }
    return h;
  }

  double p_crit() const { return p_crit_; }
  const PeriodicPotential& potential() const { return V_; }
  const std::vector<double>& alpha_table() const { return alpha_; }
  const std::vector<double>& p_table() const { return p_; }
  const QuadratureConfig& quadrature() const { return cfg_; }

  double hbar(double p) const {
    const double ap = std::abs(p);
    if (ap <= p_crit_) return 0.0;
    return invert(ap);
  }

  HbarDerivative hbar_prime(double p) const {
    if (std::abs(p) <= p_crit_) return {0.0, true};
    const double alpha = invert(std::abs(p));
    const double v = 1.0 / sigma(V_, alpha, cfg_);
    return {p > 0 ? v : -v, false};
  }

 private:
  double interp(double a) const {
    // linear in log(alpha); used only to seed brackets
    size_t i = 0;
    while (i + 2 < alpha_.size() && alpha_[i + 1] < a) ++i;
    const double t = std::log(a / alpha_[i]) / std::log(alpha_[i + 1] / alpha_[i]);
    return p_[i] + t * (p_[i + 1] - p_[i]);
  }

  double invert(double ap) const {
    double lo = 0.0, hi = 0.0;
    if (ap <= p_.front()) {
      hi = alpha_.front();
      lo = hi;
      while (p_of_alpha(V_, lo, cfg_) > ap) {
        hi = lo;
        lo *= 0.25;
        if (lo < 1e-300) throw NonConvergent("hbar inversion underflowed alpha");
      }
    } else if (ap >= p_.back()) {
      lo = alpha_.back();
      hi = lo;
      while (p_of_alpha(V_, hi, cfg_) < ap) {
        lo = hi;
        hi *= 4.0;  // p ~ sqrt(2 alpha), so this terminates
      }
    } else {
      size_t i = 0;
      while (p_[i + 1] < ap) ++i;
      lo = alpha_[i];
      hi = alpha_[i + 1];
    }

    double a = 0.5 * (lo + hi);
    const double tol = inversion_tol_ * std::max(1.0, ap);
    for (int it = 0; it < 200; ++it) {
      const double g = p_of_alpha(V_, a, cfg_) - ap;
      if (std::abs(g) <= tol) return a;
      if (g > 0)
        hi = a;
      else
        lo = a;
      double next = a - g / sigma(V_, a, cfg_);  // dp/dalpha = sigma(alpha)
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      a = next;
    }
    throw NonConvergent("hbar inversion did not reach tolerance");
  }

  PeriodicPotential V_ = PeriodicPotential::zero();
  QuadratureConfig cfg_;
  double p_crit_ = 0.0;
  double inversion_tol_ = 1e-13;
  std::vector<double> alpha_, p_;
};

// Characteristic flow of the homogenized Hamilton-Jacobi equation:
// p = p(E) constant, q' = hbar'(p) = 1/sigma(E).
inline Line hj_characteristic_flow(const EffectiveHamiltonian1D& H, double E, double q_a) {
  detail::require_energy_above_floor(E);
  const double p = p_of_alpha(H.potential(), E, H.quadrature());
  return Line{H.hbar_prime(p).value, q_a};
}

// Separation-ansatz solution u = sign*p(E)*x + E*t + C.
inline HJSolution hj_solution(const EffectiveHamiltonian1D& H, double E, int sign, double C) {
  detail::require_energy_above_floor(E);
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
  HJSolution u;
  u.sign = sign;
  u.energy = E;
  u.slope = p_of_alpha(H.potential(), E, H.quadrature());
  u.constant = C;
  return u;
}

}  // namespace maupertuis
