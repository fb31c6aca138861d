#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rotochain/bessel.hpp"
#include "rotochain/chain_model.hpp"
#include "rotochain/config_space.hpp"
#include "rotochain/error.hpp"
#include "rotochain/lumped.hpp"
#include "rotochain/parallel.hpp"
#include "rotochain/planner.hpp"
#include "rotochain/shape_ode.hpp"
#include "rotochain/shooting.hpp"
#include "rotochain/stability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rotochain;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config;
  std::string out = ".";
  int threads = 0;
  std::uint64_t seed = 1;
};

ChainParams chain_of(const Globals& g) {
  ChainParams p = g.config.empty() ? ChainParams{} : load_chain_params(g.config);
  p.validate();
  return p;
}

fs::path out_file(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << std::setprecision(12);
  return f;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

// solve -------------------------------------------------------------------

struct SolveArgs {
  double r = 0.0;
  double omega = 0.0;
  bool shapes = false;
  double a_max = 5.0;
  int grid = 2048;
};

int cmd_solve(const Globals& g, const SolveArgs& a) {
  const ChainParams p = chain_of(g);
  if (!(a.omega > 0.0)) throw std::invalid_argument("--omega must be positive");
  if (!(a.r >= 0.0)) throw std::invalid_argument("--r must be non-negative");
  const DimensionlessBVP bvp = nondimensionalize(p, {a.r, a.omega});
  EnumerationOptions eo;
  eo.a_max = a.a_max;
  eo.grid_n = a.grid;
  eo.shooting.tip_offset = tip_offset(p, a.omega);
  const auto sols = enumerate_solutions(bvp, eo);

  json j;
  j["r_m"] = a.r;
  j["omega_rad_s"] = a.omega;
  j["Lbar"] = bvp.Lbar;
  j["rbar"] = bvp.rbar;
  j["solutions"] = json::array();
  int k = 0;
  for (const auto& s : sols) {
    const PhysicalShape shape = recover_physical(s.curve, p, a.omega);
    j["solutions"].push_back({{"a", s.orientation * s.a_star},
                              {"mode", s.mode},
                              {"residual", s.residual},
                              {"rho0_m", shape.free_end_radius}});
    if (a.shapes) {
      auto f = open_out(out_file(g, "solution_" + std::to_string(k) + ".csv"));
      write_physical_csv(f, shape);
    }
    ++k;
  }
  print(j);
  return kExitOk;
}

// table -------------------------------------------------------------------

struct TableArgs {
  int n = 3;
  double Lbar = 0.0;
};

int cmd_table(const Globals& g, const TableArgs& a) {
  const ChainParams p = chain_of(g);
  if (a.n < 1 || a.n > 20) throw std::invalid_argument("--n must be in 1..20");
  const auto speeds = critical_speeds(p, a.n);
  std::cout << "critical speeds, L = " << p.length << " m, g = " << p.gravity << " m/s^2\n";
  std::cout << "  i   lambda_i    omega_i [rad/s]   [rpm]\n";
  json j;
  j["length_m"] = p.length;
  j["critical_speeds_rad_s"] = speeds;
  for (int i = 0; i < a.n; ++i) {
    std::cout << std::setw(3) << i + 1 << std::fixed << std::setprecision(5) << std::setw(11)
              << branch_length(i + 1) << std::setw(14) << speeds[i] << std::setw(12)
              << std::setprecision(2) << speeds[i] * 60.0 / (2.0 * std::numbers::pi) << '\n';
  }
  std::cout.unsetf(std::ios::fixed);
  if (a.Lbar > 0.0) {
    const CountingTable t = build_counting_table(a.Lbar);
    std::cout << "counting table at Lbar = " << a.Lbar << ": n = " << t.n << '\n';
    j["counting_table"] = {{"Lbar", t.Lbar}, {"n", t.n}, {"a", t.a_seq}, {"rbar", t.rbar_seq}};
  }
  auto f = open_out(out_file(g, "table.json"));
  f << j.dump(2) << '\n';
  return kExitOk;
}

// surface / loci ------------------------------------------------------------

struct SurfaceArgs {
  int na = 50;
  int ns = 400;
  double a_lo = 0.1;
  double a_hi = 5.0;
  double Lbar_max = 40.0;
};

int cmd_surface(const Globals& g, const SurfaceArgs& a) {
  const SurfaceSample s = sample_surface(a.a_lo, a.a_hi, a.Lbar_max, a.na, a.ns);
  const fs::path path = out_file(g, "surface.dat");
  auto f = open_out(path);
  write_surface_gnuplot(f, s);
  print({{"rows", s.rows.size()}, {"columns", s.sbar_values.size()}, {"file", path.string()}});
  return kExitOk;
}

struct LociArgs {
  int max_mode = 3;
  int na = 100;
  double a_hi = 5.0;
  double Lbar_max = 40.0;
};

int cmd_loci(const Globals& g, const LociArgs& a) {
  if (a.max_mode < 1) throw std::invalid_argument("--max-mode must be >= 1");
  if (a.na < 2) throw std::invalid_argument("--na must be >= 2");
  std::vector<double> slopes;
  for (int i = 1; i <= a.na; ++i) slopes.push_back(a.a_hi * i / a.na);
  std::vector<ZeroRadiusLocus> loci;
  json j = json::array();
  for (int i = 1; i <= a.max_mode; ++i) {
    loci.push_back(zero_radius_locus(i, slopes, a.Lbar_max));
    j.push_back({{"index", i}, {"lambda", branch_length(i)}, {"points", loci.back().points.size()},
                 {"skipped", loci.back().skipped.size()}});
  }
  auto f = open_out(out_file(g, "loci.dat"));
  write_loci_gnuplot(f, loci);
  print({{"loci", j}});
  return kExitOk;
}

// stability-map -------------------------------------------------------------

struct MapArgs {
  bool no_aero = false;
  int na = 100;
  int nL = 160;
  int N = 10;
};

int cmd_stability(const Globals& g, const MapArgs& a) {
  const ChainParams p = chain_of(g);
  GridSpec spec;
  spec.na = a.na;
  spec.nL = a.nL;
  const StabilityMap map = stability_map(spec, p, !a.no_aero, a.N);
  auto csv = open_out(out_file(g, "stability_map.csv"));
  map.write_csv(csv);
  auto gp = open_out(out_file(g, "stability_map.dat"));
  map.write_gnuplot(gp);
  std::size_t unstable = 0;
  for (const auto& c : map.cells())
    if (c.valid && c.lambda_max >= 0.0) ++unstable;
  const double bad = map.invalid_fraction();
  print({{"cells", map.cells().size()},
         {"aero", !a.no_aero},
         {"unstable_cells", unstable},
         {"invalid_fraction", bad},
         {"min_lambda", map.min_lambda()}});
  if (bad > 0.05) {
    std::cerr << "rotochain: " << bad * 100.0 << "% of cells invalid (limit 5%)\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// plan ----------------------------------------------------------------------

struct PlanArgs {
  std::string from = "rest";
  int to = 0;
  std::string map_csv;
  PlannerOptions opts;
};

json point_json(const ParamPoint& p) { return {{"a", p.a}, {"Lbar", p.Lbar}}; }

int cmd_plan(const Globals& g, const PlanArgs& a) {
  const ChainParams p = chain_of(g);
  if (a.to < 0) throw std::invalid_argument("--to-mode must be >= 0");
  std::vector<int> modes;
  bool from_rest = false;
  if (a.from == "rest") {
    from_rest = true;
    for (int k = 0; k <= a.to; ++k) modes.push_back(k);
  } else {
    int from = 0;
    try {
      std::size_t used = 0;
      from = std::stoi(a.from, &used);
      if (used != a.from.size()) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw std::invalid_argument("--from-mode must be 'rest' or a mode number");
    }
    if (from < 0) throw std::invalid_argument("--from-mode must be >= 0");
    modes = {from};
    if (a.to != from) modes.push_back(a.to);
  }

  StabilityMap map;
  if (a.map_csv.empty()) {
    map = stability_map(GridSpec{}, p, true);
  } else {
    std::ifstream in(a.map_csv);
    if (!in) throw std::invalid_argument("cannot open " + a.map_csv);
    map = StabilityMap::read_csv(in, true);
  }

  TransitionPlan plan;
  if (a.opts.direct) {
    if (from_rest || modes.size() != 2) throw std::invalid_argument("--direct needs two distinct modes");
    PlannerOptions o = a.opts;
    plan = plan_transition(modes[0], modes[1], mode_waypoint(modes[0], o.goal_slopes.front()),
                           mode_waypoint(modes[1], o.goal_slopes.front()), map, p, o);
  } else {
    plan = plan_sequence(modes, from_rest, map, p, a.opts);
  }
  const PlanReport report = validate_plan(plan, map);

  const fs::path path = out_file(g, "control_history.csv");
  auto f = open_out(path);
  plan.control_history.write_csv(f);

  json legs = json::array();
  for (const auto& leg : plan.legs)
    legs.push_back({{"kind", leg_name(leg.kind)}, {"from", point_json(leg.from)}, {"to", point_json(leg.to)}});
  json waypoints = json::array();
  for (const auto& w : plan.waypoints) waypoints.push_back(point_json(w));
  const json j = {{"from_rest", from_rest},
                  {"modes", modes},
                  {"duration_s", plan.duration()},
                  {"samples", plan.samples.size()},
                  {"margin", report.min_margin},
                  {"violations", report.violations.size()},
                  {"waypoints", waypoints},
                  {"legs", legs},
                  {"control_history", path.string()}};
  auto pj = open_out(out_file(g, "plan.json"));
  pj << j.dump(2) << '\n';
  print(j);
  return report.valid() ? kExitOk : kExitNumerical;
}

// simulate ------------------------------------------------------------------

struct SimArgs {
  std::string schedule;
  int N = 10;
  bool no_aero = false;
  double stiffness_scale = 1.0;
  double duration = 0.0;
  double sample_every = 0.01;
  int mode = -1;
  double perturb = 0.0;
};

// Initial equilibrium for the first control row. At rest the chain hangs
// under the attachment; when turning, a shape solution of the requested mode
// (or the largest-amplitude one) is laid out on the lumped chain.
Equilibrium initial_state(const ChainParams& p, const LumpedChain& tmpl, const ControlSchedule::Row& row,
                          int mode) {
  LumpedChain c = tmpl;
  c.omega = row.omega;
  if (!(row.omega > 0.0)) return equilibrium_from_tip(c, row.radius);
  EnumerationOptions eo;
  eo.shooting.tip_offset = tip_offset(p, row.omega);
  const auto sols = enumerate_solutions(nondimensionalize(p, {row.radius, row.omega}), eo);
  for (const auto& s : sols) {
    if (mode >= 0 && s.mode != mode) continue;
    return equilibrium_shape({s.a_star, dimensionless_length(p, row.omega)}, p, tmpl);
  }
  throw NumericalError("no shape solution of mode " + std::to_string(mode) + " at the first control row");
}

int cmd_simulate(const Globals& g, const SimArgs& a) {
  const ChainParams p = chain_of(g);
  std::ifstream in(a.schedule);
  if (!in) throw std::invalid_argument("cannot open schedule " + a.schedule);
  const ControlSchedule schedule = ControlSchedule::read_csv(in);
  const LumpedChain tmpl = make_lumped_chain(p, a.N, !a.no_aero, a.stiffness_scale);
  const Equilibrium eq = initial_state(p, tmpl, schedule.rows().front(), a.mode);

  LumpedState y0 = eq.state;
  if (a.perturb > 0.0) {
    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> n01;
    Vec3 axis(n01(rng), n01(rng), n01(rng));
    y0 = perturb_tip(y0, eq.chain, a.perturb, axis.normalized());
  }
  SimulationOptions so;
  so.dt = recommended_dt(eq.chain);
  so.duration = a.duration > 0.0 ? a.duration : schedule.end_time();
  so.sample_every = a.sample_every;
  if (!(so.duration > 0.0)) throw std::invalid_argument("nothing to simulate: zero duration");
  const Trajectory tr = simulate(y0, eq.chain, schedule, so);

  const fs::path path = out_file(g, "trajectory.csv");
  auto f = open_out(path);
  write_trajectory_csv(f, tr, a.N);

  LumpedChain last = eq.chain;
  last.attach = Vec3(tr.radius.back(), 0.0, 0.0);
  const Vec3 tip = position(tr.states.back(), 0);
  print({{"duration_s", tr.time.back()},
         {"samples", tr.time.size()},
         {"final_crossings", count_crossings(tr.states.back(), last)},
         {"final_tip_m", {tip.x(), tip.y(), tip.z()}},
         {"trajectory", path.string()}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotochain: rotating hanging chain shapes, stability and mode transitions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "chain parameter JSON")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory (created on demand)");
  app.add_option("--threads", g.threads, "worker threads for sweeps, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "seed for random perturbations");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "all uniform-rotation shapes for a control (r, omega)");
  s->add_option("--r", solve.r, "attachment radius [m]")->required();
  s->add_option("--omega", solve.omega, "angular speed [rad/s]")->required();
  s->add_flag("--shapes", solve.shapes, "write solution_<k>.csv shape files");
  s->add_option("--a-max", solve.a_max, "upper end of the slope scan");
  s->add_option("--grid", solve.grid, "slope scan resolution");

  TableArgs table;
  auto* t = app.add_subcommand("table", "critical speeds of the chain");
  t->add_option("--n", table.n, "number of critical speeds");
  t->add_option("--Lbar", table.Lbar, "also build the solution-count table at this Lbar");

  SurfaceArgs surface;
  auto* su = app.add_subcommand("surface", "configuration surface as gnuplot blocks");
  su->add_option("--na", surface.na, "number of slopes");
  su->add_option("--ns", surface.ns, "samples along s-bar");
  su->add_option("--a-lo", surface.a_lo, "smallest slope");
  su->add_option("--a-hi", surface.a_hi, "largest slope");
  su->add_option("--Lbar-max", surface.Lbar_max, "s-bar range");

  LociArgs loci;
  auto* lo = app.add_subcommand("loci", "zero-radius loci as gnuplot blocks");
  lo->add_option("--max-mode", loci.max_mode, "number of loci");
  lo->add_option("--na", loci.na, "slopes per locus");
  lo->add_option("--a-hi", loci.a_hi, "largest slope");
  lo->add_option("--Lbar-max", loci.Lbar_max, "s-bar range");

  MapArgs smap;
  auto* sm = app.add_subcommand("stability-map", "lambda_max over the (a, Lbar) grid");
  sm->add_flag("--no-aero", smap.no_aero, "drop the aerodynamic forces");
  sm->add_option("--na", smap.na, "cells along a");
  sm->add_option("--nL", smap.nL, "cells along Lbar");
  sm->add_option("--N", smap.N, "masses of the lumped chain");

  PlanArgs plan;
  auto* pl = app.add_subcommand("plan", "stable transition between rotation modes");
  pl->add_option("--from-mode", plan.from, "start mode, or 'rest'");
  pl->add_option("--to-mode", plan.to, "goal mode")->required();
  pl->add_option("--map", plan.map_csv, "stability map CSV (computed when omitted)");
  pl->add_option("--a-low", plan.opts.a_low, "corridor slope");
  pl->add_option("--pacing", plan.opts.pacing, "seconds per unit path length");
  pl->add_option("--corridor-pacing", plan.opts.corridor_pacing, "same, corridor legs");
  pl->add_option("--lag-budget", plan.opts.lag_budget, "[m] allowed quasi-static lag, 0 = off");
  pl->add_option("--r-min", plan.opts.r_min, "[m] smallest attachment radius");
  pl->add_option("--rate", plan.opts.rate, "control samples per second");
  pl->add_option("--dwell", plan.opts.dwell, "[s] hold at each goal");
  pl->add_option("--lambda-tolerance", plan.opts.lambda_tolerance, "[1/s] lambda_max counted as stable below this");
  pl->add_option("--goal-slopes", plan.opts.goal_slopes, "goal slopes tried per mode");
  pl->add_flag("--direct", plan.opts.direct, "single straight leg (validated, rejected if unstable)");

  SimArgs sim;
  auto* si = app.add_subcommand("simulate", "lumped chain under a control history");
  si->add_option("--schedule", sim.schedule, "control CSV (t,r_m,omega_rad_s)")->required();
  si->add_option("--N", sim.N, "masses");
  si->add_flag("--no-aero", sim.no_aero, "drop the aerodynamic forces");
  si->add_option("--stiffness-scale", sim.stiffness_scale, "spring stiffness factor (time step follows)");
  si->add_option("--duration", sim.duration, "[s] default: schedule span");
  si->add_option("--sample-every", sim.sample_every, "[s] output stride");
  si->add_option("--mode", sim.mode, "initial shape mode when the first row turns");
  si->add_option("--perturb", sim.perturb, "[m] swing the free end by this much (axis from --seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    set_worker_count(static_cast<std::size_t>(g.threads));
    if (*s) return cmd_solve(g, solve);
    if (*t) return cmd_table(g, table);
    if (*su) return cmd_surface(g, surface);
    if (*lo) return cmd_loci(g, loci);
    if (*sm) return cmd_stability(g, smap);
    if (*pl) return cmd_plan(g, plan);
    if (*si) return cmd_simulate(g, sim);
  } catch (const std::invalid_argument& e) {
    std::cerr << "rotochain: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "rotochain: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
