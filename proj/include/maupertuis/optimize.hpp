#pragma once

#include <cmath>
#include <vector>

#include "maupertuis/errors.hpp"

namespace maupertuis {

struct CgOptions {
  int max_iter = 20000;
  double grad_tol = 1e-8;  // absolute tolerance on the gradient infinity norm
  double armijo_c = 1e-4;
  double wolfe_c = 0.1;    // curvature constant; small keeps directions conjugate
  int max_line_evals = 20;
};

struct CgResult {
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Polak-Ribiere+ nonlinear conjugate gradient. The line search refines the
// step by secant iteration on phi'(alpha) = g(x + alpha d) . d (gradients
// come with every objective call anyway) and accepts on strong Wolfe or, once
// f-differences sit at roundoff, approximate-Wolfe conditions; accepted
// iterates never increase the objective beyond machine precision. A stalled
// search restarts once on steepest descent; if the objective is flat to
// machine precision along the probes the best visited point is returned,
// otherwise NoDescent is thrown.
template <class F>
CgResult nonlinear_cg(F&& fg, std::vector<double>& x, const CgOptions& opt = {}) {
  const size_t n = x.size();
  std::vector<double> g(n), g_prev(n), d(n), xt(n), gt(n);

  CgResult res;
  double f = fg(x, g);
  res.value = f;
  res.grad_norm = detail::inf_norm(g);
  double alpha_prev = 0.0;
  bool restart = true;

  // iterates can dither at the machine-precision floor; hand back the best
  // point visited (objective first, gradient norm as tie-break)
  std::vector<double> x_best = x;
  double f_best = f, g_best = res.grad_norm;
  auto consider_best = [&] {
    const double tie = 1e-13 * std::max(1.0, std::abs(f_best));
    if (f < f_best - tie || (f <= f_best + tie && res.grad_norm < g_best)) {
      x_best = x;
      f_best = f;
      g_best = res.grad_norm;
    }
  };

  // returns accepted alpha (> 0) or 0 on failure; updates x, g, f on success.
  // observed_change records the largest |phi - f| seen across trials, which
  // distinguishes a genuine stall from the machine-precision floor.
  auto line_search = [&](double alpha0, double gd0, double& observed_change) -> double {
    double lo = 0.0, lo_phi = f, lo_der = gd0;
    double hi = 0.0, hi_der = 0.0;  // upper bracket once found
    double a = alpha0;
    double best_a = 0.0, best_phi = f;
    for (int ev = 0; ev < opt.max_line_evals; ++ev) {
      for (size_t i = 0; i < n; ++i) xt[i] = x[i] + a * d[i];
      const double phi = fg(xt, gt);
      observed_change = std::max(observed_change, std::abs(phi - f));
      const double der = detail::dot(gt, d);
      const bool armijo = phi <= f + opt.armijo_c * a * gd0;
      // near the minimum the decrease drops below roundoff; accept on the
      // curvature condition alone when f is unchanged to machine precision
      // (approximate Wolfe in the sense of Hager-Zhang)
      const bool flat = phi <= f + 1e-13 * std::max(1.0, std::abs(f));
      if (armijo && phi < best_phi) {
        best_a = a;
        best_phi = phi;
      }
      if ((armijo || flat) && std::abs(der) <= opt.wolfe_c * std::abs(gd0)) {
        x.swap(xt);
        g_prev.swap(g);
        g.swap(gt);
        f = phi;
        return a;
      }
      if (!armijo || phi >= lo_phi || der > 0.0) {
        hi = a;  // minimum lies in [lo, a]
        hi_der = der;
      } else {
        lo = a;
        lo_phi = phi;
        lo_der = der;
        if (hi == 0.0) {  // no upper bracket yet: keep growing
          a *= 2.0;
          continue;
        }
      }
      if (hi - lo <= 1e-16 * std::max(1.0, hi)) break;
      double next = lo - lo_der * (hi - lo) / (hi_der - lo_der);  // secant on phi'
      if (!std::isfinite(next) || !(next > lo + 1e-12 * (hi - lo)) ||
          !(next < hi - 1e-12 * (hi - lo)))
        next = 0.5 * (lo + hi);
      a = next;
    }
    // fall back to the best Armijo point seen, if any
    if (best_a > 0.0) {
      for (size_t i = 0; i < n; ++i) xt[i] = x[i] + best_a * d[i];
      const double phi = fg(xt, gt);
      x.swap(xt);
      g_prev.swap(g);
      g.swap(gt);
      f = phi;
      return best_a;
    }
    return 0.0;
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (res.grad_norm <= opt.grad_tol) {
      res.converged = true;
      return res;
    }

    bool steepest = restart;
    if (restart) {
      for (size_t i = 0; i < n; ++i) d[i] = -g[i];
      restart = false;
    } else {
      double beta = (detail::dot(g, g) - detail::dot(g, g_prev)) / detail::dot(g_prev, g_prev);
      beta = std::max(0.0, beta);
      for (size_t i = 0; i < n; ++i) d[i] = -g[i] + beta * d[i];
      if (!(detail::dot(g, d) < 0)) {
        for (size_t i = 0; i < n; ++i) d[i] = -g[i];
        steepest = true;
      }
    }

    const double gd0 = detail::dot(g, d);
    double alpha0 = alpha_prev > 0.0 ? alpha_prev : 1.0 / std::max(1.0, detail::inf_norm(d));
    double observed_change = 0.0;
    double accepted = line_search(alpha0, gd0, observed_change);
    if (accepted == 0.0 && !steepest) {
      for (size_t i = 0; i < n; ++i) d[i] = -g[i];
      steepest = true;
      accepted = line_search(1.0 / std::max(1.0, detail::inf_norm(d)), detail::dot(g, d),
                             observed_change);
      restart = true;
    }
    if (accepted == 0.0) {
      // the objective is flat to machine precision along the probes: the
      // iterate is the numerical minimum, which counts as termination
      if (observed_change <= 1e-12 * std::max(1.0, std::abs(f))) {
        x = std::move(x_best);
        res.value = f_best;
        res.grad_norm = g_best;
        res.converged = true;
        return res;
      }
      throw NoDescent("line search stalled with gradient norm " +
                      std::to_string(res.grad_norm) + " above tolerance " +
                      std::to_string(opt.grad_tol));
    }
    alpha_prev = accepted;

    res.value = f;
    res.grad_norm = detail::inf_norm(g);
    consider_best();
  }
  x = std::move(x_best);
  res.value = f_best;
  res.grad_norm = g_best;
  res.converged = res.grad_norm <= opt.grad_tol;
  return res;
}

}  // namespace maupertuis
