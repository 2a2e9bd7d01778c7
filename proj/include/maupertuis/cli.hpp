#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "maupertuis/dynamics.hpp"
#include "maupertuis/effective_hamiltonian.hpp"
#include "maupertuis/geodesics.hpp"
#include "maupertuis/homogenize.hpp"
#include "maupertuis/io.hpp"
#include "maupertuis/potential.hpp"
#include "maupertuis/quadrature.hpp"

namespace maupertuis::cli {

inline constexpr const char* kVersion = "maupertuis 0.1.0";

// Accumulates the JSON report: config echo, results, per-assertion pass/fail.
class ReportBuilder {
 public:
  ReportBuilder() {
    j_["version"] = kVersion;
    j_["config"] = nlohmann::json::object();
    j_["results"] = nlohmann::json::array();
    j_["assertions"] = nlohmann::json::array();
  }

  nlohmann::json& config() { return j_["config"]; }

  void result(nlohmann::json v) { j_["results"].push_back(std::move(v)); }

  void check(const std::string& name, bool pass, const std::string& detail) {
    j_["assertions"].push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
    all_pass_ = all_pass_ && pass;
  }

  bool all_pass() const { return all_pass_; }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << j_.dump(2) << "\n";
  }

 private:
  nlohmann::json j_;
  bool all_pass_ = true;
};

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of numbers");
  return out;
}

namespace detail_cli {

struct CommonArgs {
  std::string potential = "cos1d";
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

inline void add_common(CLI::App* cmd, CommonArgs& c) {
  cmd->add_option("--potential", c.potential, "builtin name (zero|cos1d|cos2d) or descriptor file");
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--seed", c.seed, "seed for multistart perturbations");
}

inline std::string path_in(const CommonArgs& c, const std::string& name) {
  return c.out_dir + "/" + name;
}

inline std::string fmt(double v) { return format_double(v); }

inline void convergence_assertions(ReportBuilder& rep, const ConvergenceReport& r,
                                   const std::string& prefix) {
  for (size_t i = 0; i < r.eps.size(); ++i)
    rep.check(prefix + " bound eps=" + fmt(r.eps[i]), r.within_bound[i],
              "sup_error=" + fmt(r.sup_error[i]) + " bound=" + fmt(r.bound[i]) +
                  " slack=" + fmt(r.slack));
  bool machine_zero = true;
  for (double e : r.sup_error) machine_zero = machine_zero && e <= 1e-12;
  if (machine_zero) {
    rep.check(prefix + " rate", true, "sup errors at machine zero; no rate to fit");
  } else if (r.eps.size() >= 3 && std::isfinite(r.slope)) {
    rep.check(prefix + " rate in [0.8, 1.2]", r.slope >= 0.8 && r.slope <= 1.2,
              "fitted slope=" + fmt(r.slope));
  }
}

inline nlohmann::json convergence_json(const ConvergenceReport& r) {
  nlohmann::json j;
  j["eps"] = r.eps;
  j["sup_error"] = r.sup_error;
  j["bound"] = r.bound;
  j["slope"] = r.slope;
  j["T_obs"] = r.T_obs;
  j["sigma"] = r.sigma_E;
  return j;
}

// ---- ivp ------------------------------------------------------------------

struct IvpArgs {
  CommonArgs common;
  double energy = 0.0;
  double velocity = 0.0;
  bool has_energy = false, has_velocity = false;
  double q_a = std::numeric_limits<double>::quiet_NaN();
  std::string eps_list = "0.1,0.05,0.025,0.0125";
  std::string energies;  // velocity mode override
  double horizon = -1.0;
  int samples = 2048;
  int k_max = 40;
};

inline int run_ivp(const IvpArgs& a) {
  const auto V = PeriodicPotential::named(a.common.potential);
  ReportBuilder rep;
  rep.config()["subcommand"] = "ivp";
  rep.config()["potential"] = a.common.potential;
  rep.config()["seed"] = a.common.seed;

  if (a.has_energy == a.has_velocity)
    throw CLI::ValidationError("ivp needs exactly one of --energy or --velocity");

  if (a.has_energy) {
    const double q_a = std::isnan(a.q_a) ? 0.0 : a.q_a;
    rep.config()["energy"] = a.energy;
    rep.config()["q_a"] = q_a;
    rep.config()["eps"] = a.eps_list;
    const auto r = ivp_convergence_experiment(V, a.energy, q_a, parse_list(a.eps_list),
                                              a.horizon, a.samples);
    write_convergence_csv(path_in(a.common, "ivp_report.csv"), r);
    rep.result(convergence_json(r));
    convergence_assertions(rep, r, "ivp");
  } else {
    const double q_a = std::isnan(a.q_a) ? 1.0 : a.q_a;
    rep.config()["velocity"] = a.velocity;
    rep.config()["q_a"] = q_a;
    rep.config()["k_max"] = a.k_max;
    const auto fam = slope_family(V, a.velocity);
    rep.result({{"admissible_energy_lo", fam.energy_lo},
                {"admissible_energy_hi", fam.energy_hi},
                {"inf_slope_zero", fam.inf_slope_zero}});

    std::vector<double> energies;
    if (!a.energies.empty()) {
      energies = parse_list(a.energies);
    } else {
      energies = {fam.energy_hi, 0.5 * (fam.energy_lo + fam.energy_hi)};
    }

    CsvWriter csv(path_in(a.common, "ivp_nonuniqueness.csv"));
    csv.header({"energy", "eps", "sup_error", "bound", "ratio"});
    std::vector<double> slopes;
    std::vector<double> slope_tols;
    for (double E : energies) {
      const auto seq = nonuniqueness_sequence(V, q_a, a.velocity, E, a.k_max);
      double worst_init = 0.0;
      for (double eps : seq.eps) {
        const double e0 = 0.5 * a.velocity * a.velocity + V.eval1(q_a / eps);
        worst_init = std::max(worst_init, std::abs(e0 - E));
      }
      rep.check("initial energy exact E=" + fmt(E), worst_init <= 1e-10,
                "max |E_0(eps_k) - E| = " + fmt(worst_init));
      const auto r = ivp_convergence_experiment(V, E, q_a, seq.eps, a.horizon, a.samples);
      for (size_t i = 0; i < r.eps.size(); ++i)
        csv.row({E, r.eps[i], r.sup_error[i], r.bound[i],
                 r.bound[i] > 0 ? r.sup_error[i] / r.bound[i] : 0.0});
      convergence_assertions(rep, r, "ivp E=" + fmt(E));
      auto j = convergence_json(r);
      j["energy"] = E;
      j["V0_inv"] = seq.V0_inv;
      j["limit_slope"] = seq.limit_slope;
      rep.result(j);
      slopes.push_back(seq.limit_slope);
      slope_tols.push_back((r.bound.back() + r.slack) / r.T_obs);
    }
    if (slopes.size() >= 2) {
      double min_gap = 1e300, max_tol = 0.0;
      for (size_t i = 0; i < slopes.size(); ++i) {
        max_tol = std::max(max_tol, slope_tols[i]);
        for (size_t j = i + 1; j < slopes.size(); ++j)
          min_gap = std::min(min_gap, std::abs(slopes[i] - slopes[j]));
      }
      rep.check("limit slopes distinct", min_gap > 10.0 * max_tol,
                "min gap=" + fmt(min_gap) + " vs 10x tolerance=" + fmt(10.0 * max_tol));
    }
  }

  rep.write(path_in(a.common, "ivp_report.json"));
  return rep.all_pass() ? 0 : 2;
}

// ---- bvp ------------------------------------------------------------------

struct BvpArgs {
  CommonArgs common;
  double energy = 0.0, time = 0.0;
  bool has_energy = false, has_time = false;
  double q_a = 0.0, q_b = 1.0;
  std::string eps_list = "0.1,0.05,0.02,0.01,0.005";
};

inline int run_bvp(const BvpArgs& a) {
  const auto V = PeriodicPotential::named(a.common.potential);
  ReportBuilder rep;
  rep.config()["subcommand"] = "bvp";
  rep.config()["potential"] = a.common.potential;
  rep.config()["q_a"] = a.q_a;
  rep.config()["q_b"] = a.q_b;
  rep.config()["eps"] = a.eps_list;
  const auto eps_list = parse_list(a.eps_list);

  if (a.has_energy == a.has_time)
    throw CLI::ValidationError("bvp needs exactly one of --energy or --time");

  if (a.has_energy) {
    rep.config()["energy"] = a.energy;
    const double lip = std::sqrt(2.0 * (a.energy - V.min_value()));
    CsvWriter csv(path_in(a.common, "bvp_report.csv"));
    csv.header({"eps", "sup_error", "bound", "ratio"});
    std::vector<double> errs;
    for (double eps : eps_list) {
      const auto r = bvp_fixed_energy(V, a.energy, a.q_a, a.q_b, eps);
      const double err = std::abs(r.T_eps - r.T_bar);
      errs.push_back(err);
      csv.row({eps, err, r.bound, r.bound > 0 ? err / r.bound : 0.0});
      rep.check("bvp arrival-time bound eps=" + fmt(eps), err <= r.bound + 1e-7,
                "|T_eps - T_bar|=" + fmt(err) + " bound=" + fmt(r.bound));
      // equicontinuity surrogate: |q_eps(T_bar) - q_b| <= Lip |T_eps - T_bar|
      const double q_at_tbar = solve_1d_closed_form(V, a.energy, eps, a.q_a, r.T_bar);
      rep.check("bvp equicontinuity eps=" + fmt(eps),
                std::abs(q_at_tbar - a.q_b) <= lip * err + 1e-9,
                "|q(T_bar) - q_b|=" + fmt(std::abs(q_at_tbar - a.q_b)) + " Lip*err=" +
                    fmt(lip * err));
      rep.result({{"eps", eps}, {"T_eps", r.T_eps}, {"T_bar", r.T_bar}, {"bound", r.bound}});
    }
    rep.result({{"rate", loglog_slope(eps_list, errs)}});
  } else {
    rep.config()["time"] = a.time;
    const double L = a.q_b - a.q_a;
    const double free_energy = L * L / (2.0 * a.time * a.time);
    CsvWriter csv(path_in(a.common, "bvp_energy_roots.csv"));
    csv.header({"eps", "E_eps", "tau_residual"});
    for (double eps : eps_list) {
      const auto r = bvp_fixed_time(V, a.time, a.q_a, a.q_b, eps);
      csv.row({eps, r.E_eps, r.tau_residual});
      rep.check("bvp root residual eps=" + fmt(eps), r.tau_residual <= 1e-10,
                "|tau(E_eps) - T|=" + fmt(r.tau_residual));
      const double lo = std::max(1e-12, free_energy + V.min_value());
      const double hi = free_energy - V.min_value();
      rep.check("bvp energy bounds eps=" + fmt(eps),
                r.E_eps >= lo - 1e-9 && r.E_eps <= hi + 1e-9,
                "E_eps=" + fmt(r.E_eps) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
      rep.result({{"eps", eps}, {"E_eps", r.E_eps}, {"tau_residual", r.tau_residual}});
    }
  }

  rep.write(path_in(a.common, "bvp_report.json"));
  return rep.all_pass() ? 0 : 2;
}

// ---- effective-hamiltonian --------------------------------------------------

struct EffHamArgs {
  CommonArgs common;
  double p_max = 3.0;
  int p_count = 121;
};

inline int run_effective_hamiltonian(const EffHamArgs& a) {
  const auto V = PeriodicPotential::named(a.common.potential);
  ReportBuilder rep;
  rep.config()["subcommand"] = "effective-hamiltonian";
  rep.config()["potential"] = a.common.potential;
  rep.config()["p_max"] = a.p_max;

  const auto H = EffectiveHamiltonian1D::build(V);
  rep.result({{"p_crit", H.p_crit()}, {"table_size", H.alpha_table().size()}});

  CsvWriter csv(path_in(a.common, "effective_hamiltonian.csv"));
  csv.header({"p", "hbar", "hbar_prime"});
  double prev = 0.0;
  bool monotone = true;
  for (int i = 0; i < a.p_count; ++i) {
    const double p = a.p_max * i / (a.p_count - 1);
    const double h = H.hbar(p);
    csv.row({p, h, H.hbar_prime(p).value});
    monotone = monotone && h >= prev - 1e-12;
    prev = h;
  }
  rep.check("hbar monotone on the sampled grid", monotone, "flat then strictly increasing");

  if (H.p_crit() > 0)
    rep.check("flat piece", H.hbar(0.5 * H.p_crit()) == 0.0, "hbar(p_crit/2) = 0");

  double worst_rt = 0.0;
  for (double alpha : {0.5, 1.0, 2.0})
    worst_rt = std::max(worst_rt, std::abs(H.hbar(p_of_alpha(V, alpha)) - alpha));
  rep.check("round trip hbar(p(alpha)) = alpha", worst_rt <= 1e-9,
            "max deviation=" + fmt(worst_rt));

  if (H.p_crit() > 0) {
    bool decreasing = true;
    double last = 1e300;
    for (int k = 1; k <= 6; ++k) {
      const double d = H.hbar_prime(H.p_crit() * (1.0 + std::pow(10.0, -k))).value;
      decreasing = decreasing && d < last && d > 0;
      last = d;
    }
    rep.check("C1 join: hbar_prime -> 0 at p_crit", decreasing,
              "hbar_prime decreasing along p_crit(1+10^-k), k=1..6");
  }

  const double E_ref = 1.0;
  const double slope = hj_characteristic_flow(H, E_ref, 0.0).slope;
  const double direct = 1.0 / sigma(V, E_ref);
  rep.check("characteristic slope equals 1/sigma", std::abs(slope - direct) <= 1e-10,
            "|" + fmt(slope) + " - " + fmt(direct) + "|");

  rep.write(path_in(a.common, "effective_hamiltonian.json"));
  return rep.all_pass() ? 0 : 2;
}

// ---- geodesic ---------------------------------------------------------------

struct GeodesicArgs {
  CommonArgs common;
  double energy = 1.0;
  double eps = 0.25;
  std::string from = "0,0", to = "1,0";
  int nodes = 0;  // 0: auto
  int multistart = 5;
  double perturb = -1.0;
};

inline int run_geodesic(const GeodesicArgs& a) {
  const auto V = PeriodicPotential::named(a.common.potential);
  const auto q_a = parse_list(a.from);
  const auto q_b = parse_list(a.to);
  ReportBuilder rep;
  rep.config()["subcommand"] = "geodesic";
  rep.config()["potential"] = a.common.potential;
  rep.config()["energy"] = a.energy;
  rep.config()["eps"] = a.eps;
  rep.config()["seed"] = a.common.seed;

  double sep = 0.0;
  for (size_t k = 0; k < q_a.size(); ++k) sep += (q_b[k] - q_a[k]) * (q_b[k] - q_a[k]);
  sep = std::sqrt(sep);
  const int N = a.nodes > 0 ? a.nodes
                            : std::max(64, static_cast<int>(std::ceil(40.0 * sep / a.eps)));
  rep.config()["nodes"] = N;

  MinimizeOptions mopt;
  mopt.multistart = a.multistart;
  mopt.perturb_scale = a.perturb;
  mopt.seed = a.common.seed;

  const Curve straight = Curve::straight(q_a, q_b, N);
  const double straight_energy = jacobi_energy(straight, V, a.energy, a.eps);
  const Curve c = minimize_jacobi(V, a.energy, a.eps, q_a, q_b, N, mopt);
  const Curve arc = reparametrize_arclength(c, V, a.energy, a.eps);
  const TimedCurve tc = reparametrize_to_time(arc, V, a.energy, a.eps);

  const double J = jacobi_energy(arc, V, a.energy, a.eps);
  const double L = jacobi_length(arc, V, a.energy, a.eps);
  const double A = action(tc, V, a.eps);
  write_curve_csv(path_in(a.common, "geodesic_curve.csv"), arc);
  write_timed_curve_csv(path_in(a.common, "geodesic_timed.csv"), tc);

  rep.result({{"jacobi_energy", J},
              {"jacobi_length", L},
              {"action", A},
              {"total_time", tc.total_time()},
              {"straight_energy", straight_energy}});
  rep.check("descent below the straight segment", J <= straight_energy + 1e-12,
            "J=" + fmt(J) + " straight=" + fmt(straight_energy));
  const double ident = std::abs(L - (A + a.energy * tc.total_time())) / std::max(1.0, L);
  rep.check("length/action identity", ident <= 1e-5, "relative residual=" + fmt(ident));

  rep.write(path_in(a.common, "geodesic.json"));
  return rep.all_pass() ? 0 : 2;
}

// ---- cell-problem -----------------------------------------------------------

struct CellArgs {
  CommonArgs common;
  std::string mode = "jacobi";  // jacobi | action | both
  double energy = 1.0;
  double time = 0.0;
  std::string z = "1,0";
  std::string eps_list = "0.25,0.125,0.0625";
  double nodes_per_unit = 40.0;
  int multistart = 5;
  bool homogeneity = false;
};

inline int run_cell(const CellArgs& a) {
  const auto V = PeriodicPotential::named(a.common.potential);
  const auto z = parse_list(a.z);
  const auto eps_list = parse_list(a.eps_list);
  double z2 = 0.0;
  for (double v : z) z2 += v * v;
  const double z_norm = std::sqrt(z2);

  ReportBuilder rep;
  rep.config()["subcommand"] = "cell-problem";
  rep.config()["potential"] = a.common.potential;
  rep.config()["mode"] = a.mode;
  rep.config()["z"] = a.z;
  rep.config()["eps"] = a.eps_list;
  rep.config()["seed"] = a.common.seed;

  CellOptions copt;
  copt.nodes_per_unit = a.nodes_per_unit;
  copt.minimize.multistart = a.multistart;
  copt.minimize.seed = a.common.seed;

  const bool do_jacobi = a.mode == "jacobi" || a.mode == "both";
  const bool do_action = a.mode == "action" || a.mode == "both";
  if (!do_jacobi && !do_action) throw CLI::ValidationError("mode must be jacobi|action|both");

  if (do_jacobi) {
    rep.config()["energy"] = a.energy;
    const auto cells = cell_problem_jacobi(V, a.energy, z, eps_list, copt);
    write_jacobi_cells_csv(path_in(a.common, "cell_jacobi.csv"), cells, z_norm);
    for (const auto& c : cells) {
      rep.check("Finsler sandwich eps=" + fmt(c.eps),
                c.value >= c.lower_bound - 1e-9 && c.value <= c.upper_bound + 1e-9,
                fmt(c.lower_bound) + " <= " + fmt(c.value) + " <= " + fmt(c.upper_bound));
      rep.result({{"kind", "jacobi"}, {"eps", c.eps}, {"nodes", c.nodes}, {"value", c.value}});
    }
    if (cells.size() >= 2) {
      const auto& u = cells[cells.size() - 2];
      const auto& v = cells.back();
      rep.result({{"kind", "jacobi_cauchy"},
                  {"rel_gap", std::abs(u.value - v.value) / std::max(1e-300, v.value)}});
    }
    if (a.homogeneity) {
      std::vector<double> z2x(z.size());
      for (size_t k = 0; k < z.size(); ++k) z2x[k] = 2.0 * z[k];
      const double eps_min = eps_list.back();
      const std::vector<double> single{eps_min};
      const auto doubled = cell_problem_jacobi(V, a.energy, z2x, single, copt);
      const double ratio = doubled.front().value / cells.back().value;
      rep.check("2-homogeneity", std::abs(ratio / 4.0 - 1.0) <= 0.02,
                "estimate(2z)/estimate(z)=" + fmt(ratio));
      rep.result({{"kind", "jacobi_2z"}, {"eps", eps_min}, {"value", doubled.front().value}});
    }
  }

  if (do_action) {
    if (!(a.time > 0)) throw CLI::ValidationError("--time is required for the action cell problem");
    rep.config()["time"] = a.time;
    const auto cells = cell_problem_action(V, a.time, z, eps_list, copt);
    write_action_cells_csv(path_in(a.common, "cell_action.csv"), cells, z_norm);
    for (const auto& c : cells)
      rep.result({{"kind", "action"}, {"eps", c.eps}, {"nodes", c.nodes}, {"value", c.value}});
    if (cells.size() >= 2) {
      const auto& u = cells[cells.size() - 2];
      const auto& v = cells.back();
      const double gap = std::abs(u.value - v.value) / std::max(1e-300, std::abs(v.value));
      rep.check("action estimates Cauchy", gap <= 0.02, "relative gap=" + fmt(gap));
    }
  }

  rep.write(path_in(a.common, "cell_problem.json"));
  return rep.all_pass() ? 0 : 2;
}

// ---- verify -----------------------------------------------------------------

struct VerifyArgs {
  CommonArgs common;
  double energy = 1.0;
  double eps = 0.25;
  std::string from = "0,0", to = "1,0";
  int nodes = 200;
  int dt_divisor = 400;
  int multistart = 5;
};

inline int run_verify(const VerifyArgs& a) {
  const auto V = PeriodicPotential::named(a.common.potential);
  const auto q_a = parse_list(a.from);
  const auto q_b = parse_list(a.to);
  ReportBuilder rep;
  rep.config()["subcommand"] = "verify";
  rep.config()["potential"] = a.common.potential;
  rep.config()["energy"] = a.energy;
  rep.config()["eps"] = a.eps;
  rep.config()["nodes"] = a.nodes;
  rep.config()["dt_divisor"] = a.dt_divisor;
  rep.config()["seed"] = a.common.seed;

  VerifyOptions vopt;
  vopt.dt_divisor = a.dt_divisor;
  vopt.minimize.multistart = a.multistart;
  vopt.minimize.seed = a.common.seed;
  const auto r = verify_correspondence(V, a.energy, a.eps, q_a, q_b, a.nodes, vopt);

  write_timed_curve_csv(path_in(a.common, "verify_timed.csv"), r.timed);
  write_trajectory_csv(path_in(a.common, "verify_trajectory.csv"), r.trajectory);
  rep.result({{"jacobi_energy", r.jacobi_energy_value},
              {"jacobi_length", r.jacobi_length_value},
              {"action", r.action_value},
              {"total_time", r.total_time},
              {"identity_residual", r.identity_residual},
              {"energy_length_residual", r.energy_length_residual},
              {"energy_deviation", r.energy_deviation},
              {"verlet_endpoint_error", r.verlet_endpoint_error}});
  rep.check("length = action + E T", r.identity_ok,
            "relative residual=" + fmt(r.identity_residual));
  rep.check("energy = length^2 at arc-length parametrization", r.energy_length_ok,
            "relative residual=" + fmt(r.energy_length_residual));
  rep.check("pointwise energy constraint", r.constraint_ok,
            "max deviation=" + fmt(r.energy_deviation));
  rep.check("Verlet endpoint cross-check", r.verlet_ok,
            "endpoint error=" + fmt(r.verlet_endpoint_error));

  rep.write(path_in(a.common, "verify.json"));
  return rep.all_pass() ? 0 : 2;
}

}  // namespace detail_cli

// Experiment runner: exit 0 when every in-run assertion passes, 2 on
// assertion failure or numerical error, 1 on usage errors.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"homogenization laboratory for a particle in a rapidly oscillating potential"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  detail_cli::IvpArgs ivp;
  auto* c_ivp = app.add_subcommand("ivp", "fixed-energy convergence or fixed-velocity non-uniqueness");
  detail_cli::add_common(c_ivp, ivp.common);
  auto* ivp_E = c_ivp->add_option("--energy", ivp.energy, "fixed total energy");
  auto* ivp_v = c_ivp->add_option("--velocity", ivp.velocity, "fixed initial velocity");
  c_ivp->add_option("--qa", ivp.q_a, "initial position (default 0; 1 in velocity mode)");
  c_ivp->add_option("--eps", ivp.eps_list, "comma-separated, strictly decreasing");
  c_ivp->add_option("--energies", ivp.energies, "velocity mode: energies to construct");
  c_ivp->add_option("--horizon", ivp.horizon, "observation horizon (default 10 sigma)");
  c_ivp->add_option("--samples", ivp.samples, "sup-error sample count");
  c_ivp->add_option("--kmax", ivp.k_max, "velocity mode: eps_k up to k_max");

  detail_cli::BvpArgs bvp;
  auto* c_bvp = app.add_subcommand("bvp", "boundary value problem, fixed energy or fixed time");
  detail_cli::add_common(c_bvp, bvp.common);
  auto* bvp_E = c_bvp->add_option("--energy", bvp.energy, "fixed total energy");
  auto* bvp_T = c_bvp->add_option("--time", bvp.time, "fixed arrival time");
  c_bvp->add_option("--qa", bvp.q_a, "left endpoint");
  c_bvp->add_option("--qb", bvp.q_b, "right endpoint");
  c_bvp->add_option("--eps", bvp.eps_list, "comma-separated, strictly decreasing");

  detail_cli::EffHamArgs eff;
  auto* c_eff = app.add_subcommand("effective-hamiltonian", "hbar(p) table with flat piece");
  detail_cli::add_common(c_eff, eff.common);
  c_eff->add_option("--pmax", eff.p_max, "momentum grid upper end");
  c_eff->add_option("--pcount", eff.p_count, "momentum grid size");

  detail_cli::GeodesicArgs geo;
  auto* c_geo = app.add_subcommand("geodesic", "Jacobi minimizer and its time reparametrization");
  detail_cli::add_common(c_geo, geo.common);
  c_geo->add_option("--energy", geo.energy, "Jacobi energy level");
  c_geo->add_option("--eps", geo.eps, "microscale");
  c_geo->add_option("--from", geo.from, "start point, comma-separated");
  c_geo->add_option("--to", geo.to, "end point, comma-separated");
  c_geo->add_option("--nodes", geo.nodes, "segment count (default 40|z|/eps)");
  c_geo->add_option("--multistart", geo.multistart, "perturbed initializations");
  c_geo->add_option("--perturb", geo.perturb, "perturbation scale (default 0.1|z|)");

  detail_cli::CellArgs cell;
  auto* c_cell = app.add_subcommand("cell-problem", "Gamma-limit density estimates");
  detail_cli::add_common(c_cell, cell.common);
  c_cell->add_option("--mode", cell.mode, "jacobi | action | both");
  c_cell->add_option("--energy", cell.energy, "Jacobi energy level");
  c_cell->add_option("--time", cell.time, "action horizon T");
  c_cell->add_option("--z", cell.z, "cell displacement, comma-separated");
  c_cell->add_option("--eps", cell.eps_list, "comma-separated, strictly decreasing");
  c_cell->add_option("--nodes-per-unit", cell.nodes_per_unit, "N >= this * |z|/eps");
  c_cell->add_option("--multistart", cell.multistart, "perturbed initializations");
  c_cell->add_flag("--homogeneity", cell.homogeneity, "also run 2z at the smallest eps");

  detail_cli::VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Maupertuis correspondence identities");
  detail_cli::add_common(c_ver, ver.common);
  c_ver->add_option("--energy", ver.energy, "Jacobi energy level");
  c_ver->add_option("--eps", ver.eps, "microscale");
  c_ver->add_option("--from", ver.from, "start point");
  c_ver->add_option("--to", ver.to, "end point");
  c_ver->add_option("--nodes", ver.nodes, "segment count");
  c_ver->add_option("--dt-div", ver.dt_divisor, "Verlet step eps/dt_div");
  c_ver->add_option("--multistart", ver.multistart, "perturbed initializations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (c_ivp->parsed()) {
      ivp.has_energy = ivp_E->count() > 0;
      ivp.has_velocity = ivp_v->count() > 0;
      return detail_cli::run_ivp(ivp);
    }
    if (c_bvp->parsed()) {
      bvp.has_energy = bvp_E->count() > 0;
      bvp.has_time = bvp_T->count() > 0;
      return detail_cli::run_bvp(bvp);
    }
    if (c_eff->parsed()) return detail_cli::run_effective_hamiltonian(eff);
    if (c_geo->parsed()) return detail_cli::run_geodesic(geo);
    if (c_cell->parsed()) return detail_cli::run_cell(cell);
    if (c_ver->parsed()) return detail_cli::run_verify(ver);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace maupertuis::cli
