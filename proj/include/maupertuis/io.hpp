#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "maupertuis/dynamics.hpp"
#include "maupertuis/geodesics.hpp"
#include "maupertuis/homogenize.hpp"

namespace maupertuis {

// Fixed 17-significant-digit formatting: round-trip exact and byte-stable
// for identical inputs on one platform.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
  }

  void header(const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) out_ << ',';
      out_ << names[i];
    }
    out_ << '\n';
  }

  void row(std::span<const double> values) {
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_double(values[i]);
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    row(std::span<const double>(values.begin(), values.size()));
  }

 private:
  std::ofstream out_;
};

// t,q1..qd,p1..pd,E
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  CsvWriter w(path);
  std::vector<std::string> names{"t"};
  for (int k = 1; k <= traj.dim; ++k) names.push_back("q" + std::to_string(k));
  for (int k = 1; k <= traj.dim; ++k) names.push_back("p" + std::to_string(k));
  names.push_back("E");
  w.header(names);
  std::vector<double> row(names.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    size_t c = 0;
    row[c++] = traj.t[i];
    for (double v : traj.q_at(i)) row[c++] = v;
    for (double v : traj.p_at(i)) row[c++] = v;
    row[c++] = traj.energy[i];
    w.row(row);
  }
}

// eps,sup_error,bound,ratio
inline void write_convergence_csv(const std::string& path, const ConvergenceReport& rep) {
  CsvWriter w(path);
  w.header({"eps", "sup_error", "bound", "ratio"});
  for (size_t i = 0; i < rep.eps.size(); ++i)
    w.row({rep.eps[i], rep.sup_error[i], rep.bound[i],
           rep.bound[i] > 0 ? rep.sup_error[i] / rep.bound[i] : 0.0});
}

// s,x1..xd
inline void write_curve_csv(const std::string& path, const Curve& c) {
  CsvWriter w(path);
  std::vector<std::string> names{"s"};
  for (int k = 1; k <= c.dim; ++k) names.push_back("x" + std::to_string(k));
  w.header(names);
  const int N = c.segments();
  std::vector<double> row(names.size());
  for (int i = 0; i <= N; ++i) {
    row[0] = static_cast<double>(i) / N;
    for (int k = 0; k < c.dim; ++k) row[static_cast<size_t>(k) + 1] = c.node(i)[static_cast<size_t>(k)];
    w.row(row);
  }
}

// s,x1..xd,t
inline void write_timed_curve_csv(const std::string& path, const TimedCurve& tc) {
  CsvWriter w(path);
  std::vector<std::string> names{"s"};
  for (int k = 1; k <= tc.curve.dim; ++k) names.push_back("x" + std::to_string(k));
  names.push_back("t");
  w.header(names);
  const int N = tc.curve.segments();
  std::vector<double> row(names.size());
  for (int i = 0; i <= N; ++i) {
    row[0] = static_cast<double>(i) / N;
    for (int k = 0; k < tc.curve.dim; ++k)
      row[static_cast<size_t>(k) + 1] = tc.curve.node(i)[static_cast<size_t>(k)];
    row.back() = tc.times[static_cast<size_t>(i)];
    w.row(row);
  }
}

// eps,z_norm,estimate,lower_bound,upper_bound
inline void write_jacobi_cells_csv(const std::string& path,
                                   const std::vector<JacobiCellEstimate>& cells, double z_norm) {
  CsvWriter w(path);
  w.header({"eps", "z_norm", "estimate", "lower_bound", "upper_bound"});
  for (const auto& c : cells) w.row({c.eps, z_norm, c.value, c.lower_bound, c.upper_bound});
}

// eps,z_norm,estimate
inline void write_action_cells_csv(const std::string& path,
                                   const std::vector<ActionCellEstimate>& cells, double z_norm) {
  CsvWriter w(path);
  w.header({"eps", "z_norm", "estimate"});
  for (const auto& c : cells) w.row({c.eps, z_norm, c.value});
}

}  // namespace maupertuis
