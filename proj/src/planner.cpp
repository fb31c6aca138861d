#include "rotochain/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rotochain/bessel.hpp"
#include "rotochain/config_space.hpp"
#include "rotochain/shape_ode.hpp"

namespace rotochain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ParamPoint lerp(const ParamPoint& p, const ParamPoint& q, double w) {
  return {p.a + w * (q.a - p.a), p.Lbar + w * (q.Lbar - p.Lbar)};
}

// `pacing` is the ascend/descend rate; other legs keep their ratio to it.
double leg_seconds(const PlanLeg& leg, const PlannerOptions& opts, double pacing) {
  if (leg.kind == PlanLeg::Kind::hold) return leg.hold_seconds;
  const double scale = pacing / opts.pacing;
  if (leg.seconds > 0.0) return scale * leg.seconds;
  if (leg.kind == PlanLeg::Kind::corridor) return scale * opts.corridor_pacing * leg.length();
  return pacing * leg.length();
}

// Fraction of the leg covered at normalised time tau. The smooth profile
// starts and stops with zero rate and acceleration so the corners of the path
// do not kick the slow whirl modes.
double leg_progress(double tau, bool smooth) {
  tau = std::clamp(tau, 0.0, 1.0);
  if (!smooth) return tau;
  return tau * tau * tau * (10.0 + tau * (6.0 * tau - 15.0));
}

// Path fraction reached at normalised time tau.
double leg_fraction(const PlanLeg& leg, double tau, bool smooth) {
  const double u = leg_progress(tau, smooth);
  if (leg.clock.size() < 2) return u;
  const auto it = std::upper_bound(leg.clock.begin(), leg.clock.end(), u);
  if (it == leg.clock.end()) return 1.0;
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - leg.clock.begin() - 1, 0));
  const double span = leg.clock[i + 1] - leg.clock[i];
  const double f = span > 0.0 ? (u - leg.clock[i]) / span : 0.0;
  return (static_cast<double>(i) + f) / static_cast<double>(leg.clock.size() - 1);
}

// Mode-0 slope that realises radius r at Lbar, by bisection on the forward map.
double spinup_slope(const ChainParams& params, double Lbar, double r, double a_hi) {
  if (Lbar <= 0.0) return 0.0;
  double lo = 0.0, hi = a_hi;
  while (attachment_radius_for(params, {hi, Lbar}) < r && hi < 50.0) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (attachment_radius_for(params, {mid, Lbar}) < r ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

PlanSample sample_leg(const ChainParams& params, const PlannerOptions& opts, const PlanLeg& leg,
                      int index, double w, double t) {
  PlanSample s;
  s.t = t;
  s.leg = index;
  if (leg.kind == PlanLeg::Kind::spinup) {
    // omega ramps linearly at fixed radius; the slope follows from the radius.
    const double omega_end = angular_speed_for(params, leg.to.Lbar);
    s.omega = w * omega_end;
    s.radius = leg.radius;
    const double Lbar = dimensionless_length(params, s.omega);
    s.point = {spinup_slope(params, Lbar, leg.radius, std::max(leg.to.a, 1e-3)), Lbar};
    s.corridor = true;
    return s;
  }
  s.point = lerp(leg.from, leg.to, w);
  s.omega = angular_speed_for(params, s.point.Lbar);
  const double r = attachment_radius_for(params, s.point);
  s.clamped = r < opts.r_min;
  s.radius = std::max(r, opts.r_min);
  s.corridor = leg.kind == PlanLeg::Kind::corridor || s.point.a <= opts.a_low * (1.0 + 1e-12);
  return s;
}

std::vector<PlanSample> sample_legs(const ChainParams& params, const PlannerOptions& opts,
                                    const std::vector<PlanLeg>& legs, double rate, double pacing) {
  if (!(rate > 0.0)) throw std::invalid_argument("control rate must be positive");
  if (!(pacing > 0.0)) throw std::invalid_argument("leg pacing must be positive");
  std::vector<double> start(legs.size() + 1, 0.0);
  for (std::size_t k = 0; k < legs.size(); ++k) start[k + 1] = start[k] + leg_seconds(legs[k], opts, pacing);
  const double total = start.back();
  std::vector<PlanSample> out;
  if (legs.empty()) return out;
  const auto at = [&](double t) {
    std::size_t k = 0;
    while (k + 1 < legs.size() && t >= start[k + 1]) ++k;
    const double span = start[k + 1] - start[k];
    const double w = span > 0.0 ? leg_fraction(legs[k], (t - start[k]) / span, opts.smooth) : 1.0;
    return sample_leg(params, opts, legs[k], static_cast<int>(k), w, t);
  };
  const auto n = static_cast<long>(std::floor(total * rate + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(at(static_cast<double>(i) / rate));
  if (total - out.back().t > 1e-9) out.push_back(at(total));
  return out;
}

ControlSchedule schedule_of(const std::vector<PlanSample>& samples) {
  std::vector<ControlSchedule::Row> rows;
  for (const auto& s : samples) rows.push_back({s.t, s.radius, s.omega});
  return ControlSchedule(std::move(rows));
}

// Lumped equilibrium at a node of a leg and its slowest whirl frequency.
// Unavailable equilibria give an empty shape and an infinite frequency.
struct NodeModes {
  std::vector<Vec3> shape;
  double freq = std::numeric_limits<double>::infinity();
};

NodeModes node_modes(const ParamPoint& p, const ChainParams& params, const LumpedChain& tmpl) {
  NodeModes out;
  if (!(p.a > 0.0) || !(p.Lbar > 0.0)) return out;
  try {
    const Equilibrium eq = equilibrium_shape(p, params, tmpl);
    for (int i = 0; i < eq.chain.N; ++i) out.shape.push_back(position(eq.state, i));
    out.freq = slowest_frequency(jacobian(eq.chain, eq.state));
  } catch (const std::exception&) {
    out = NodeModes{};
  }
  return out;
}

// Stretches ascend/descend/direct legs where the equilibrium shape would move
// faster than lag_budget times the slowest whirl frequency: the chain lags
// its equilibrium by about speed / frequency.
void time_leg(PlanLeg& leg, const ChainParams& params, const PlannerOptions& opts) {
  using Kind = PlanLeg::Kind;
  if (!(opts.lag_budget > 0.0) || !leg.clock.empty()) return;
  if (leg.kind != Kind::ascend && leg.kind != Kind::descend && leg.kind != Kind::direct) return;
  constexpr int kNodes = 32;
  const LumpedChain tmpl = make_lumped_chain(params, opts.timing_N, true, 1.0);
  std::vector<NodeModes> nodes;
  for (int i = 0; i <= kNodes; ++i)
    nodes.push_back(node_modes(lerp(leg.from, leg.to, static_cast<double>(i) / kNodes), params, tmpl));
  const double ds = leg.length() / kNodes;
  std::vector<double> elapsed(kNodes + 1, 0.0);
  for (int i = 1; i <= kNodes; ++i) {
    const NodeModes& p = nodes[i - 1];
    const NodeModes& q = nodes[i];
    double seconds = opts.pacing * ds;
    if (!p.shape.empty() && p.shape.size() == q.shape.size()) {
      double moved = 0.0;
      for (std::size_t m = 0; m < p.shape.size(); ++m) moved = std::max(moved, (q.shape[m] - p.shape[m]).norm());
      seconds = std::max(seconds, moved / (opts.lag_budget * std::min(p.freq, q.freq)));
    }
    elapsed[i] = elapsed[i - 1] + seconds;
  }
  leg.seconds = elapsed.back();
  if (!(leg.seconds > 0.0)) {
    leg.seconds = 0.0;
    return;
  }
  leg.clock.resize(kNodes + 1);
  for (int i = 0; i <= kNodes; ++i) leg.clock[i] = elapsed[i] / leg.seconds;
}

void finalize(TransitionPlan& plan) {
  for (PlanLeg& leg : plan.legs) time_leg(leg, plan.params, plan.options);
  plan.samples = sample_legs(plan.params, plan.options, plan.legs, plan.options.rate, plan.options.pacing);
  if (plan.samples.size() == 1) {
    // Constant control still needs a time span for the schedule.
    PlanSample s = plan.samples.front();
    s.t = 1.0 / plan.options.rate;
    plan.samples.push_back(s);
  }
  plan.control_history = schedule_of(plan.samples);
}

// Checks samples of one leg: stable cells away from the corridor and the
// expected rotation mode. Returns the first offending sample.
struct LegCheck {
  bool ok = true;
  ParamPoint blocking;
  double lambda = kNaN;
  std::string reason;
};

LegCheck check_leg(const PlanLeg& leg, int mode, const StabilityMap& map, const ChainParams& params,
                   const PlannerOptions& opts) {
  LegCheck out;
  const double seconds = leg_seconds(leg, opts, opts.pacing);
  const int n = std::max(2, static_cast<int>(std::ceil(seconds * opts.rate)));
  for (int k = 0; k <= n; ++k) {
    const PlanSample s = sample_leg(params, opts, leg, 0, static_cast<double>(k) / n, 0.0);
    if (s.corridor) continue;
    double lambda;
    try {
      lambda = map.lookup(s.point);
    } catch (const std::domain_error&) {
      lambda = kNaN;
    }
    if (!(lambda < opts.lambda_tolerance)) {
      out = {false, s.point, lambda, "unstable cell"};
      return out;
    }
    if (classify_mode(s.point) != mode) {
      out = {false, s.point, lambda, "crosses a zero-radius locus above the corridor"};
      return out;
    }
  }
  return out;
}

// Corridor abscissa for which `make_leg(c)` passes. Candidates run from the
// low end of the search window up to lambda_k, then above it: the whirl
// slows down near lambda_k, so legs leaving from there respond sluggishly.
double search_corridor_end(int k, int mode, const std::function<PlanLeg(double)>& make_leg,
                           const StabilityMap& map, const ChainParams& params,
                           const PlannerOptions& opts) {
  const double lam = branch_length(k);
  const double step = 0.005 * lam;
  const int max_shift = static_cast<int>(std::floor(opts.search_fraction * lam / step + 1e-9));
  LegCheck first;
  for (int s = -max_shift; s <= max_shift; ++s) {
    const double c = lam + s * step;
    const LegCheck chk = check_leg(make_leg(c), mode, map, params, opts);
    if (chk.ok) return c;
    if (s == 0) first = chk;
  }
  std::ostringstream msg;
  msg << "no stable corridor end near Lbar = " << lam << " (a_low = " << opts.a_low << "): "
      << first.reason << " at a = " << first.blocking.a << ", Lbar = " << first.blocking.Lbar
      << ", lambda_max = " << first.lambda;
  throw PlanRejected(msg.str(), first.blocking, first.lambda);
}

void require_mode(const ParamPoint& p, int mode, const char* which) {
  if (classify_mode(p) != mode) {
    std::ostringstream msg;
    msg << which << " point (" << p.a << ", " << p.Lbar << ") is mode " << classify_mode(p)
        << ", not " << mode;
    throw std::invalid_argument(msg.str());
  }
}

void check_options(const PlannerOptions& o) {
  if (!(o.a_low > 0.0) || !(o.pacing > 0.0) || !(o.corridor_pacing > 0.0) || !(o.rate > 0.0) || !(o.r_min > 0.0) ||
      !(o.search_fraction >= 0.0) || !(o.rest_Lbar > 0.0) || !(o.dwell >= 0.0) ||
      !(o.lag_budget >= 0.0) || o.timing_N < 2 || !(o.lambda_tolerance >= 0.0))
    throw std::invalid_argument("planner options out of range");
}

}  // namespace

double PlanLeg::length() const { return std::hypot(to.a - from.a, to.Lbar - from.Lbar); }

const char* leg_name(PlanLeg::Kind kind) {
  switch (kind) {
    case PlanLeg::Kind::spinup: return "spinup";
    case PlanLeg::Kind::descend: return "descend";
    case PlanLeg::Kind::corridor: return "corridor";
    case PlanLeg::Kind::ascend: return "ascend";
    case PlanLeg::Kind::direct: return "direct";
    case PlanLeg::Kind::hold: return "hold";
  }
  return "?";
}

PlanSample TransitionPlan::at(double t) const {
  if (legs.empty()) throw std::logic_error("plan has no legs");
  double t0 = 0.0;
  for (std::size_t k = 0; k < legs.size(); ++k) {
    const double span = leg_seconds(legs[k], options, options.pacing);
    if (t <= t0 + span || k + 1 == legs.size()) {
      const double w = span > 0.0 ? leg_fraction(legs[k], (t - t0) / span, options.smooth) : 1.0;
      return sample_leg(params, options, legs[k], static_cast<int>(k), w, t);
    }
    t0 += span;
  }
  return samples.back();
}

double attachment_radius_for(const ChainParams& params, const ParamPoint& point) {
  if (!(point.Lbar > 0.0)) throw std::invalid_argument("radius needs Lbar > 0");
  if (point.a == 0.0) return 0.0;
  const double omega = angular_speed_for(params, point.Lbar);
  const ShapeCurve curve = integrate_shape(point.a, point.Lbar);
  return std::fabs(curve.back().uprime) * params.gravity / (omega * omega);
}

ParamPoint mode_waypoint(int mode, double a_goal) {
  if (mode < 0) throw std::invalid_argument("mode must be >= 0");
  return {a_goal, branch_length(mode + 1)};
}

TransitionPlan plan_direct(const ParamPoint& start, const ParamPoint& goal, const ChainParams& params,
                           const PlannerOptions& opts) {
  check_options(opts);
  TransitionPlan plan;
  plan.params = params;
  plan.options = opts;
  plan.waypoints = {start, goal};
  PlanLeg leg;
  leg.kind = PlanLeg::Kind::direct;
  leg.from = start;
  leg.to = goal;
  if (start == goal) {
    leg.kind = PlanLeg::Kind::hold;
    leg.hold_seconds = std::max(opts.dwell, 1.0 / opts.rate);
    plan.waypoints = {start};
  }
  plan.legs = {leg};
  finalize(plan);
  return plan;
}

TransitionPlan plan_transition(int start_mode, int goal_mode, const ParamPoint& start,
                               const ParamPoint& goal, const StabilityMap& map,
                               const ChainParams& params, const PlannerOptions& opts) {
  check_options(opts);
  params.validate();
  require_mode(start, start_mode, "start");
  require_mode(goal, goal_mode, "goal");

  if (opts.direct || start == goal) {
    TransitionPlan plan = plan_direct(start, goal, params, opts);
    const PlanReport report = validate_plan(plan, map);
    if (!report.valid()) {
      const PlanViolation& v = report.violations.front();
      std::ostringstream msg;
      msg << "direct path rejected: unstable cell at a = " << v.sample.point.a
          << ", Lbar = " << v.sample.point.Lbar << " (lambda_max = " << v.lambda << ")";
      throw PlanRejected(msg.str(), v.sample.point, v.lambda);
    }
    plan.margin = report.min_margin;
    return plan;
  }

  const double a_low = opts.a_low;
  const auto descend = [&](double c) {
    PlanLeg leg;
    leg.kind = PlanLeg::Kind::descend;
    leg.from = start;
    leg.to = {a_low, c};
    return leg;
  };
  const auto ascend = [&](double c) {
    PlanLeg leg;
    leg.kind = PlanLeg::Kind::ascend;
    leg.from = {a_low, c};
    leg.to = goal;
    return leg;
  };
  const double c_in = search_corridor_end(start_mode + 1, start_mode, descend, map, params, opts);
  const double c_out = search_corridor_end(goal_mode + 1, goal_mode, ascend, map, params, opts);

  TransitionPlan plan;
  plan.params = params;
  plan.options = opts;
  PlanLeg corridor;
  corridor.kind = PlanLeg::Kind::corridor;
  corridor.from = {a_low, c_in};
  corridor.to = {a_low, c_out};
  plan.legs = {descend(c_in), corridor, ascend(c_out)};
  plan.waypoints = {start, corridor.from, corridor.to, goal};
  finalize(plan);
  plan.margin = validate_plan(plan, map).min_margin;
  return plan;
}

TransitionPlan plan_from_rest(const ParamPoint& goal, const StabilityMap& map,
                              const ChainParams& params, const PlannerOptions& opts) {
  check_options(opts);
  require_mode(goal, 0, "goal");
  const ParamPoint entry{opts.a_low, opts.rest_Lbar};
  const auto ascend = [&](double c) {
    PlanLeg leg;
    leg.kind = PlanLeg::Kind::ascend;
    leg.from = {opts.a_low, c};
    leg.to = goal;
    return leg;
  };
  const double c_out = search_corridor_end(1, 0, ascend, map, params, opts);

  TransitionPlan plan;
  plan.params = params;
  plan.options = opts;
  plan.from_rest = true;
  PlanLeg spin;
  spin.kind = PlanLeg::Kind::spinup;
  spin.from = {0.0, 0.0};
  spin.to = entry;
  spin.radius = std::max(attachment_radius_for(params, entry), opts.r_min);
  PlanLeg corridor;
  corridor.kind = PlanLeg::Kind::corridor;
  corridor.from = entry;
  corridor.to = {opts.a_low, c_out};
  plan.legs = {spin, corridor, ascend(c_out)};
  plan.waypoints = {spin.from, entry, corridor.to, goal};
  finalize(plan);
  plan.margin = validate_plan(plan, map).min_margin;
  return plan;
}

TransitionPlan plan_sequence(const std::vector<int>& modes, bool from_rest, const StabilityMap& map,
                             const ChainParams& params, const PlannerOptions& opts) {
  check_options(opts);
  if (modes.empty()) throw std::invalid_argument("mode sequence is empty");
  if (opts.goal_slopes.empty()) throw std::invalid_argument("no goal slopes to try");
  if (from_rest && modes.front() != 0) throw std::invalid_argument("a spin-up from rest reaches mode 0 first");

  // Depth-first over goal slopes; parts[k] reaches the k-th goal.
  std::vector<TransitionPlan> parts;
  std::vector<ParamPoint> goals;
  std::string last_error = "no goal slope admits a stable path";
  ParamPoint last_block;
  double last_lambda = kNaN;
  std::function<bool(std::size_t)> extend = [&](std::size_t k) {
    if (k == modes.size()) return true;
    for (double a : opts.goal_slopes) {
      const ParamPoint goal = mode_waypoint(modes[k], a);
      try {
        if (classify_mode(goal) != modes[k]) continue;
        if (!(map.lookup(goal) < opts.lambda_tolerance)) continue;
      } catch (const std::domain_error&) {
        continue;
      }
      try {
        if (k == 0) {
          parts.push_back(from_rest ? plan_from_rest(goal, map, params, opts)
                                    : plan_direct(goal, goal, params, opts));
        } else {
          parts.push_back(plan_transition(modes[k - 1], modes[k], goals.back(), goal, map, params, opts));
        }
      } catch (const PlanRejected& e) {
        last_error = e.what();
        last_block = e.blocking_point();
        last_lambda = e.blocking_lambda();
        continue;
      }
      goals.push_back(goal);
      if (extend(k + 1)) return true;
      parts.pop_back();
      goals.pop_back();
    }
    return false;
  };
  if (!extend(0)) throw PlanRejected(last_error, last_block, last_lambda);

  TransitionPlan plan;
  plan.params = params;
  plan.options = opts;
  plan.from_rest = from_rest;
  PlanLeg hold;
  hold.kind = PlanLeg::Kind::hold;
  for (const TransitionPlan& part : parts) {
    for (const auto& leg : part.legs)
      if (leg.kind != PlanLeg::Kind::hold) plan.legs.push_back(leg);
    for (const auto& w : part.waypoints)
      if (plan.waypoints.empty() || !(plan.waypoints.back() == w)) plan.waypoints.push_back(w);
    hold.from = hold.to = part.waypoints.back();
    hold.hold_seconds = std::max(opts.dwell, 1.0 / opts.rate);
    plan.legs.push_back(hold);
  }
  finalize(plan);
  plan.margin = validate_plan(plan, map).min_margin;
  return plan;
}

PlanReport validate_plan(const TransitionPlan& plan, const StabilityMap& map) {
  PlanReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  std::vector<ParamPoint> bad;
  for (const auto& c : map.cells())
    if (!c.valid || !(c.lambda_max < plan.options.lambda_tolerance)) bad.push_back(c.point);
  for (const auto& s : plan.samples) {
    if (s.corridor) continue;
    ++report.checked;
    double lambda;
    try {
      lambda = map.lookup(s.point);
    } catch (const std::domain_error&) {
      lambda = kNaN;
    }
    if (!(lambda < plan.options.lambda_tolerance)) report.violations.push_back({s, lambda});
    for (const auto& p : bad)
      report.min_margin = std::min(report.min_margin, std::hypot(p.a - s.point.a, p.Lbar - s.point.Lbar));
  }
  if (report.checked == 0) report.min_margin = 0.0;
  return report;
}

std::vector<ControlSchedule::Row> emit_control_history(const TransitionPlan& plan, double rate,
                                                       double leg_duration) {
  std::vector<ControlSchedule::Row> rows;
  for (const auto& s : sample_legs(plan.params, plan.options, plan.legs, rate, leg_duration))
    rows.push_back({s.t, s.radius, s.omega});
  return rows;
}

Vec3 quasi_static_tip(const ChainParams& params, const PlanSample& sample) {
  // Barely turning: the shape recovery loses precision, the chain just hangs.
  if (!(sample.point.Lbar > 1e-3) || !(sample.point.a > 0.0))
    return {sample.radius, 0.0, -params.length};
  const ShapeCurve curve = integrate_shape(sample.point.a, sample.point.Lbar);
  const PhysicalShape shape = recover_physical(curve, params, sample.omega);
  const PhysicalSample& tip = shape.samples.front();
  const double attach = shape.samples.back().rho;
  // The lumped frame puts the attachment on +x; flip the plane to match.
  const double side = attach < 0.0 ? -1.0 : 1.0;
  return {side * tip.rho, 0.0, tip.z};
}

ClosedLoopResult run_closed_loop(const TransitionPlan& plan, const ClosedLoopOptions& opts) {
  if (plan.samples.empty()) throw std::invalid_argument("plan is empty");
  const ChainParams& params = plan.params;
  LumpedChain chain = make_lumped_chain(params, opts.N, opts.aero, opts.stiffness_scale);
  const PlanSample first = plan.samples.front();
  chain.omega = first.omega;
  Equilibrium eq;
  if (plan.from_rest || first.point.a <= 0.0) {
    eq = equilibrium_from_tip(chain, first.radius);
  } else {
    eq = equilibrium_shape(first.point, params, chain);
  }
  SimulationOptions sim;
  sim.dt = recommended_dt(chain);
  sim.duration = plan.duration();
  sim.sample_every = opts.sample_every;

  ClosedLoopResult out;
  out.trajectory = simulate(eq.state, eq.chain, plan.control_history, sim);
  const Trajectory& tr = out.trajectory;
  for (std::size_t k = 0; k < tr.time.size(); ++k) {
    const Vec3 predicted = quasi_static_tip(params, plan.at(tr.time[k]));
    const double dev = (position(tr.states[k], 0) - predicted).norm();
    if (dev > out.max_deviation) {
      out.max_deviation = dev;
      out.time_of_max = tr.time[k];
    }
  }
  // Average the crossing count over the last rotation period.
  const double omega_end = tr.omega.back();
  const double period = omega_end > 0.0 ? 2.0 * std::numbers::pi / omega_end : 0.0;
  const double t_end = tr.time.back();
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < tr.time.size(); ++k) {
    if (tr.time[k] < t_end - period - 1e-12) continue;
    LumpedChain at = chain;
    at.attach = Vec3(tr.radius[k], 0.0, 0.0);
    sum += count_crossings(tr.states[k], at);
    ++n;
  }
  out.final_mode_average = n > 0 ? sum / n : 0.0;
  out.final_mode = static_cast<int>(std::lround(out.final_mode_average));
  return out;
}

}  // namespace rotochain
