#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maupertuis/errors.hpp"

namespace maupertuis {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

// One cosine mode a * cos(2*pi k.x), k an integer multi-index, k != 0.
struct Mode {
  std::array<int, 3> k{0, 0, 0};
  double amplitude = 0.0;
};

// [0,1]^d-periodic finite cosine series with the cell maximum shifted to 0.
// Immutable after construction; safe to share across threads.
class PeriodicPotential {
 public:
  // Builds the series and chooses the offset so that max V = 0.
  static PeriodicPotential from_series(int dim, std::vector<Mode> modes) {
    PeriodicPotential v(dim, std::move(modes), 0.0);
    v.offset_ = -v.refined_series_max();
    v.finalize();
    return v;
  }

  // Uses the given offset; rejects it if the cell maximum is not 0.
  static PeriodicPotential from_series(int dim, std::vector<Mode> modes, double offset) {
    PeriodicPotential v(dim, std::move(modes), offset);
    const double vmax = v.refined_series_max() + offset;
    if (std::abs(vmax) > 1e-8)
      throw std::invalid_argument("potential offset violates max V = 0 (max = " +
                                  std::to_string(vmax) + ")");
    v.finalize();
    return v;
  }

  static PeriodicPotential zero(int dim = 1) { return from_series(dim, {}); }

  // V(x) = (cos 2*pi*x - 1)/2, range [-1, 0].
  static PeriodicPotential cos1d() {
    return from_series(1, {Mode{{1, 0, 0}, 0.5}});
  }

  // V(x,y) = (cos 2*pi*x + cos 2*pi*y - 2)/4, range [-1, 0].
  static PeriodicPotential cos2d() {
    return from_series(2, {Mode{{1, 0, 0}, 0.25}, Mode{{0, 1, 0}, 0.25}});
  }

  // Key-value descriptor:
  //   dim d
  //   mode k1 [k2 [k3]] amplitude      (repeated)
  //   offset c0                        (optional)
  static PeriodicPotential load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open potential file: " + path);
    int dim = 0;
    bool have_offset = false;
    double offset = 0.0;
    std::vector<Mode> modes;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string key;
      if (!(ls >> key)) continue;
      const std::string where = path + ":" + std::to_string(lineno);
      if (key == "dim") {
        if (!(ls >> dim)) throw std::invalid_argument(where + ": bad dim");
      } else if (key == "mode") {
        if (dim == 0) throw std::invalid_argument(where + ": dim must precede mode");
        Mode m;
        std::array<double, 4> vals{};
        int n = 0;
        while (n < dim + 1 && (ls >> vals[static_cast<size_t>(n)])) ++n;
        if (n != dim + 1)
          throw std::invalid_argument(where + ": mode needs " + std::to_string(dim) +
                                      " indices and an amplitude");
        for (int a = 0; a < dim; ++a) {
          const double kv = vals[static_cast<size_t>(a)];
          if (kv != std::floor(kv))
            throw std::invalid_argument(where + ": mode indices must be integers");
          m.k[static_cast<size_t>(a)] = static_cast<int>(kv);
        }
        m.amplitude = vals[static_cast<size_t>(dim)];
        modes.push_back(m);
      } else if (key == "offset") {
        if (!(ls >> offset)) throw std::invalid_argument(where + ": bad offset");
        have_offset = true;
      } else {
        throw std::invalid_argument(where + ": unknown key '" + key + "'");
      }
    }
    if (dim == 0) throw std::invalid_argument(path + ": missing dim");
    return have_offset ? from_series(dim, std::move(modes), offset)
                       : from_series(dim, std::move(modes));
  }

  // Builtin name or descriptor file path.
  static PeriodicPotential named(const std::string& name) {
    if (name == "zero") return zero();
    if (name == "cos1d") return cos1d();
    if (name == "cos2d") return cos2d();
    return load(name);
  }

  int dim() const { return dim_; }
  const std::vector<Mode>& modes() const { return modes_; }
  double offset() const { return offset_; }

  // C_V with V'' > -C_V along every direction: (2 pi)^2 sum |k|^2 |a_k|.
  double curvature_bound() const { return curvature_bound_; }
  double min_value() const { return min_value_; }

  // A global maximizer in [0,1)^d.
  std::span<const double> maximizer() const {
    return {maximizer_.data(), static_cast<size_t>(dim_)};
  }

  // All cell maximizers in [0,1), d = 1 only; used to split quadrature panels.
  const std::vector<double>& cell_maximizers() const {
    if (dim_ != 1) throw std::invalid_argument("cell_maximizers requires d = 1");
    return cell_maximizers_;
  }

  double eval(std::span<const double> x) const { return offset_ + series(x); }

  void grad(std::span<const double> x, std::span<double> g) const {
    std::array<double, 3> xr{};
    for (int a = 0; a < dim_; ++a) {
      const double xa = x[static_cast<size_t>(a)];
      xr[static_cast<size_t>(a)] = xa - std::floor(xa);
      g[static_cast<size_t>(a)] = 0.0;
    }
    for (const Mode& m : modes_) {
      double phase = 0.0;
      for (int a = 0; a < dim_; ++a) phase += m.k[static_cast<size_t>(a)] * xr[static_cast<size_t>(a)];
      const double s = -two_pi * m.amplitude * std::sin(two_pi * phase);
      for (int a = 0; a < dim_; ++a) g[static_cast<size_t>(a)] += s * m.k[static_cast<size_t>(a)];
    }
  }

  double eval1(double x) const { return eval({&x, 1}); }

  double grad1(double x) const {
    double g = 0.0;
    grad({&x, 1}, {&g, 1});
    return g;
  }

 private:
  PeriodicPotential(int dim, std::vector<Mode> modes, double offset)
      : dim_(dim), modes_(std::move(modes)), offset_(offset) {
    if (dim_ < 1 || dim_ > 3)
      throw std::invalid_argument("potential dimension must be 1, 2 or 3");
    for (const Mode& m : modes_) {
      bool zero_index = true;
      for (int a = 0; a < dim_; ++a) zero_index = zero_index && m.k[static_cast<size_t>(a)] == 0;
      for (int a = dim_; a < 3; ++a)
        if (m.k[static_cast<size_t>(a)] != 0)
          throw std::invalid_argument("mode index beyond potential dimension");
      if (zero_index) throw std::invalid_argument("mode k = 0 is not allowed; use offset");
    }
  }

  double series(std::span<const double> x) const {
    double v = 0.0;
    std::array<double, 3> xr{};
    for (int a = 0; a < dim_; ++a) {
      const double xa = x[static_cast<size_t>(a)];
      xr[static_cast<size_t>(a)] = xa - std::floor(xa);
    }
    for (const Mode& m : modes_) {
      double phase = 0.0;
      for (int a = 0; a < dim_; ++a) phase += m.k[static_cast<size_t>(a)] * xr[static_cast<size_t>(a)];
      v += m.amplitude * std::cos(two_pi * phase);
    }
    return v;
  }

  void series_grad_hess(std::span<const double> x, std::array<double, 3>& g,
                        std::array<std::array<double, 3>, 3>& h) const {
    g = {0, 0, 0};
    h = {};
    for (const Mode& m : modes_) {
      double phase = 0.0;
      for (int a = 0; a < dim_; ++a) phase += m.k[static_cast<size_t>(a)] * x[static_cast<size_t>(a)];
      const double s = std::sin(two_pi * phase), c = std::cos(two_pi * phase);
      for (int a = 0; a < dim_; ++a) {
        g[static_cast<size_t>(a)] += -two_pi * m.amplitude * s * m.k[static_cast<size_t>(a)];
        for (int b = 0; b < dim_; ++b)
          h[static_cast<size_t>(a)][static_cast<size_t>(b)] +=
              -two_pi * two_pi * m.amplitude * c * m.k[static_cast<size_t>(a)] * m.k[static_cast<size_t>(b)];
      }
    }
  }

  // Local ascent from a grid seed: Newton step when it ascends, otherwise a
  // backtracked gradient step. The series is smooth, so a handful of Newton
  // iterations reaches machine precision.
  std::array<double, 3> ascend(std::array<double, 3> x) const {
    const double gtol = 1e-13 * std::max(1.0, series_scale());
    std::array<double, 3> g{};
    std::array<std::array<double, 3>, 3> h{};
    for (int it = 0; it < 80; ++it) {
      series_grad_hess({x.data(), static_cast<size_t>(dim_)}, g, h);
      double gn = 0.0;
      for (int a = 0; a < dim_; ++a) gn = std::max(gn, std::abs(g[static_cast<size_t>(a)]));
      if (gn <= gtol) break;
      std::array<double, 3> step{};
      bool use_newton = solve_dense(h, g, step);  // solves H step = g
      if (use_newton) {
        double ascent = 0.0;  // Newton ascent direction is -H^{-1} g
        for (int a = 0; a < dim_; ++a) ascent += g[static_cast<size_t>(a)] * -step[static_cast<size_t>(a)];
        use_newton = ascent > 0.0;
      }
      std::array<double, 3> dir{};
      for (int a = 0; a < dim_; ++a)
        dir[static_cast<size_t>(a)] = use_newton ? -step[static_cast<size_t>(a)] : g[static_cast<size_t>(a)];
      const double v0 = series({x.data(), static_cast<size_t>(dim_)});
      double alpha = 1.0;
      std::array<double, 3> xn = x;
      for (int bt = 0; bt < 50; ++bt) {
        for (int a = 0; a < dim_; ++a)
          xn[static_cast<size_t>(a)] = x[static_cast<size_t>(a)] + alpha * dir[static_cast<size_t>(a)];
        if (series({xn.data(), static_cast<size_t>(dim_)}) >= v0) break;
        alpha *= 0.5;
      }
      x = xn;
    }
    for (int a = 0; a < dim_; ++a) {
      double& xa = x[static_cast<size_t>(a)];
      xa -= std::floor(xa);
    }
    return x;
  }

  // Gaussian elimination with partial pivoting, d <= 3.
  bool solve_dense(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
                   std::array<double, 3>& out) const {
    const int n = dim_;
    for (int c = 0; c < n; ++c) {
      int piv = c;
      for (int r = c + 1; r < n; ++r)
        if (std::abs(a[static_cast<size_t>(r)][static_cast<size_t>(c)]) >
            std::abs(a[static_cast<size_t>(piv)][static_cast<size_t>(c)]))
          piv = r;
      if (std::abs(a[static_cast<size_t>(piv)][static_cast<size_t>(c)]) < 1e-14) return false;
      std::swap(a[static_cast<size_t>(piv)], a[static_cast<size_t>(c)]);
      std::swap(b[static_cast<size_t>(piv)], b[static_cast<size_t>(c)]);
      for (int r = c + 1; r < n; ++r) {
        const double f = a[static_cast<size_t>(r)][static_cast<size_t>(c)] /
                         a[static_cast<size_t>(c)][static_cast<size_t>(c)];
        for (int cc = c; cc < n; ++cc)
          a[static_cast<size_t>(r)][static_cast<size_t>(cc)] -=
              f * a[static_cast<size_t>(c)][static_cast<size_t>(cc)];
        b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(c)];
      }
    }
    for (int r = n - 1; r >= 0; --r) {
      double s = b[static_cast<size_t>(r)];
      for (int c = r + 1; c < n; ++c)
        s -= a[static_cast<size_t>(r)][static_cast<size_t>(c)] * out[static_cast<size_t>(c)];
      out[static_cast<size_t>(r)] = s / a[static_cast<size_t>(r)][static_cast<size_t>(r)];
    }
    return true;
  }

  double series_scale() const {
    double s = 0.0;
    for (const Mode& m : modes_) {
      double kn = 0.0;
      for (int a = 0; a < dim_; ++a) kn += static_cast<double>(m.k[static_cast<size_t>(a)]) * m.k[static_cast<size_t>(a)];
      s += two_pi * std::sqrt(kn) * std::abs(m.amplitude);
    }
    return s;
  }

  int grid_per_axis() const { return dim_ <= 2 ? 1024 : 128; }

  // Dense grid scan followed by local ascent.
  double refined_series_max() {
    if (modes_.empty()) {
      maximizer_.assign(static_cast<size_t>(dim_), 0.0);
      return 0.0;
    }
    const int n = grid_per_axis();
    const int n1 = dim_ >= 2 ? n : 1;
    const int n2 = dim_ >= 3 ? n : 1;
    double best = -1e300;
    std::array<double, 3> bx{};
    std::array<double, 3> x{};
    for (int i = 0; i < n; ++i) {
      x[0] = static_cast<double>(i) / n;
      for (int j = 0; j < n1; ++j) {
        x[1] = static_cast<double>(j) / n;
        for (int l = 0; l < n2; ++l) {
          x[2] = static_cast<double>(l) / n;
          const double v = series({x.data(), static_cast<size_t>(dim_)});
          if (v > best) {
            best = v;
            bx = x;
          }
        }
      }
    }
    const auto refined = ascend(bx);
    maximizer_.assign(refined.begin(), refined.begin() + dim_);
    return series({maximizer_.data(), static_cast<size_t>(dim_)});
  }

  void finalize() {
    double cb = 0.0;
    for (const Mode& m : modes_) {
      double kn = 0.0;
      for (int a = 0; a < dim_; ++a) kn += static_cast<double>(m.k[static_cast<size_t>(a)]) * m.k[static_cast<size_t>(a)];
      cb += kn * std::abs(m.amplitude);
    }
    curvature_bound_ = two_pi * two_pi * cb;
    min_value_ = refined_min();
    if (dim_ == 1) collect_cell_maximizers();
  }

  double refined_min() {
    if (modes_.empty()) return offset_;
    const int n = grid_per_axis();
    const int n1 = dim_ >= 2 ? n : 1;
    const int n2 = dim_ >= 3 ? n : 1;
    double best = 1e300;
    std::array<double, 3> bx{};
    std::array<double, 3> x{};
    for (int i = 0; i < n; ++i) {
      x[0] = static_cast<double>(i) / n;
      for (int j = 0; j < n1; ++j) {
        x[1] = static_cast<double>(j) / n;
        for (int l = 0; l < n2; ++l) {
          x[2] = static_cast<double>(l) / n;
          const double v = series({x.data(), static_cast<size_t>(dim_)});
          if (v < best) {
            best = v;
            bx = x;
          }
        }
      }
    }
    // descend -V by ascending the negated series
    PeriodicPotential neg(dim_, modes_, 0.0);
    for (Mode& m : neg.modes_) m.amplitude = -m.amplitude;
    const auto refined = neg.ascend(bx);
    return offset_ + series({refined.data(), static_cast<size_t>(dim_)});
  }

  void collect_cell_maximizers() {
    cell_maximizers_.clear();
    if (modes_.empty()) {
      cell_maximizers_.push_back(0.0);
      return;
    }
    const int n = 4096;
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = eval1(static_cast<double>(i) / n);
    for (int i = 0; i < n; ++i) {
      const double prev = v[static_cast<size_t>((i + n - 1) % n)];
      const double next = v[static_cast<size_t>((i + 1) % n)];
      if (v[static_cast<size_t>(i)] >= prev && v[static_cast<size_t>(i)] >= next) {
        auto r = ascend({static_cast<double>(i) / n, 0, 0});
        if (eval1(r[0]) >= -1e-9) {
          const double x = r[0] - std::floor(r[0]);
          bool dup = false;
          for (double m : cell_maximizers_)
            dup = dup || std::abs(m - x) < 1e-9 || std::abs(std::abs(m - x) - 1.0) < 1e-9;
          if (!dup) cell_maximizers_.push_back(x);
        }
      }
    }
    std::sort(cell_maximizers_.begin(), cell_maximizers_.end());
  }

  int dim_ = 1;
  std::vector<Mode> modes_;
  double offset_ = 0.0;
  double curvature_bound_ = 0.0;
  double min_value_ = 0.0;
  std::vector<double> maximizer_;
  std::vector<double> cell_maximizers_;
};

}  // namespace maupertuis
