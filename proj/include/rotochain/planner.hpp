#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rotochain/chain_model.hpp"
#include "rotochain/error.hpp"
#include "rotochain/lumped.hpp"
#include "rotochain/stability.hpp"

namespace rotochain {

struct PlannerOptions {
  double a_low = 0.01;            ///< corridor height
  double pacing = 8.0;            ///< seconds per unit of (a, Lbar) path length
  double corridor_pacing = 8.0;   ///< same, for corridor legs
  double rate = 20.0;             ///< control samples per second
  double r_min = 1e-3;            ///< [m] floor for the attachment radius
  double search_fraction = 0.1;   ///< corridor end points may move this far from lambda_k
  double rest_Lbar = 0.5;         ///< corridor entry after a spin-up from rest
  double dwell = 5.0;             ///< [s] hold at each goal in a sequence
  bool direct = false;            ///< single straight leg, no corridor
  bool smooth = true;             ///< rest-to-rest easing along each leg, else constant rate
  /// [m] Ascend, descend and direct legs are slowed wherever the quasi-static
  /// tip would move faster than lag_budget times the slowest whirl frequency
  /// of the N-mass chain. 0 keeps the plain pacing.
  double lag_budget = 0.004;
  int timing_N = 10;
  /// lambda_max below this counts as stable. The nearly conservative low-a
  /// rows of the map carry finite-difference noise of a few 1e-6 1/s.
  double lambda_tolerance = 1e-5;
  /// Goal slopes tried, in order, for each mode of a sequence.
  std::vector<double> goal_slopes{1.0, 1.5, 2.0, 0.75, 2.5, 3.0};
};

struct PlanLeg {
  enum class Kind { spinup, descend, corridor, ascend, direct, hold };
  Kind kind = Kind::hold;
  ParamPoint from;
  ParamPoint to;
  double hold_seconds = 0.0;  ///< hold legs only
  double radius = 0.0;        ///< spin-up legs: fixed attachment radius [m]
  double seconds = 0.0;       ///< duration at the nominal pacing, 0 = pacing * length
  std::vector<double> clock;  ///< elapsed fraction of `seconds` at evenly spaced path nodes

  [[nodiscard]] double length() const;
};

const char* leg_name(PlanLeg::Kind kind);

/// One control sample with the configuration it is meant to realise.
struct PlanSample {
  double t = 0.0;
  ParamPoint point;
  double radius = 0.0;
  double omega = 0.0;
  int leg = 0;
  bool corridor = false;  ///< exempt from the stability check
  bool clamped = false;   ///< radius raised to r_min
};

struct TransitionPlan {
  ChainParams params;
  PlannerOptions options;
  std::vector<ParamPoint> waypoints;
  std::vector<PlanLeg> legs;
  std::vector<PlanSample> samples;
  ControlSchedule control_history;
  double margin = 0.0;  ///< smallest (a, Lbar) distance from an unstable or invalid cell
  bool from_rest = false;

  [[nodiscard]] double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
  /// Planned configuration and control at time t (clamped to the plan span).
  [[nodiscard]] PlanSample at(double t) const;
};

/// Raised when no stable path exists or a forced direct path crosses an
/// unstable cell.
class PlanRejected : public NumericalError {
 public:
  PlanRejected(const std::string& what, ParamPoint blocking, double lambda)
      : NumericalError(what), blocking_(blocking), lambda_(lambda) {}
  [[nodiscard]] ParamPoint blocking_point() const { return blocking_; }
  [[nodiscard]] double blocking_lambda() const { return lambda_; }

 private:
  ParamPoint blocking_;
  double lambda_;
};

/// Attachment radius realising `point`: |u'_a(Lbar)| g / omega^2 [m].
double attachment_radius_for(const ChainParams& params, const ParamPoint& point);

/// Default goal of a mode: (a_goal, lambda_{mode+1}), i.e. the plateau at the
/// (mode+1)-th critical speed.
ParamPoint mode_waypoint(int mode, double a_goal = 1.0);

/// Three-leg corridor transition (or one hold leg when start == goal).
TransitionPlan plan_transition(int start_mode, int goal_mode, const ParamPoint& start,
                               const ParamPoint& goal, const StabilityMap& map,
                               const ChainParams& params, const PlannerOptions& opts = {});

/// Spin-up from rest at a fixed radius into the corridor, then up to the
/// mode-0 goal.
TransitionPlan plan_from_rest(const ParamPoint& goal, const StabilityMap& map,
                              const ChainParams& params, const PlannerOptions& opts = {});

/// Chains transitions through `modes`, holding `dwell` seconds at each goal.
/// Goals are mode_waypoint(mode, a) with a taken from opts.goal_slopes; the
/// first combination for which every transition plans is used. With
/// `from_rest` the first goal is reached from rest.
TransitionPlan plan_sequence(const std::vector<int>& modes, bool from_rest, const StabilityMap& map,
                             const ChainParams& params, const PlannerOptions& opts = {});

/// Straight leg from start to goal without any check.
TransitionPlan plan_direct(const ParamPoint& start, const ParamPoint& goal, const ChainParams& params,
                           const PlannerOptions& opts = {});

struct PlanViolation {
  PlanSample sample;
  double lambda = 0.0;  ///< NaN when the lookup touched an invalid cell
};

struct PlanReport {
  std::vector<PlanViolation> violations;
  double min_margin = 0.0;
  std::size_t checked = 0;
  [[nodiscard]] bool valid() const { return violations.empty(); }
};

PlanReport validate_plan(const TransitionPlan& plan, const StabilityMap& map);

/// Uniform resampling of the plan at `rate` Hz with motion legs paced at
/// `leg_duration` seconds per unit path length.
std::vector<ControlSchedule::Row> emit_control_history(const TransitionPlan& plan, double rate,
                                                       double leg_duration);

/// Quasi-static free-end position in the rotating frame (attachment at
/// (r, 0, 0), height 0) for a planned sample.
Vec3 quasi_static_tip(const ChainParams& params, const PlanSample& sample);

struct ClosedLoopOptions {
  int N = 10;
  bool aero = true;
  double stiffness_scale = 1.0;
  double sample_every = 0.01;
};

struct ClosedLoopResult {
  double max_deviation = 0.0;      ///< [m]
  double time_of_max = 0.0;
  double final_mode_average = 0.0; ///< mean axis crossings over the last period
  int final_mode = 0;
  Trajectory trajectory;
};

/// Simulates the plan's control history on the lumped chain and compares the
/// free end with the quasi-static prediction.
ClosedLoopResult run_closed_loop(const TransitionPlan& plan, const ClosedLoopOptions& opts = {});

}  // namespace rotochain
