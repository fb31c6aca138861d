#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "rotochain/chain_model.hpp"

namespace rotochain {

using Vec3 = Eigen::Vector3d;
/// [x_0, xdot_0, ..., x_{N-1}, xdot_{N-1}] in the rotating frame.
using LumpedState = Eigen::VectorXd;

struct AeroParams {
  double air_density = 1.225;  ///< rho_a [kg/m^3]
  double skin_friction = 0.038;///< C_f
  double crossflow = 1.17;     ///< C_n
  double diameter = 0.001;     ///< d [m]
};

/// N point masses joined by N stiff springs; link i joins x_{i-1} and x_i and
/// x_N is the attachment point, fixed in the rotating frame.
struct LumpedChain {
  int N = 10;
  std::vector<double> mass;   ///< mu L / N each (tip mass added to mass 0)
  double rest_length = 0.0;   ///< L / N
  double stiffness = 8e7;     ///< k [N/m]
  double gravity = 9.81;
  double omega = 0.0;         ///< rotation speed of the frame [rad/s]
  double omega_dot = 0.0;     ///< its derivative, for the Euler force
  Vec3 attach = Vec3::Zero();
  AeroParams aero{};
  bool aero_enabled = false;

  [[nodiscard]] double length() const { return rest_length * N; }
  [[nodiscard]] double total_mass() const;
};

/// Chain template for `params`; stiffness is 8e7 N/m times `stiffness_scale`.
LumpedChain make_lumped_chain(const ChainParams& params, int N = 10, bool aero = false,
                              double stiffness_scale = 1.0);

inline Vec3 position(const LumpedState& y, int i) { return y.segment<3>(6 * i); }
inline Vec3 velocity(const LumpedState& y, int i) { return y.segment<3>(6 * i + 3); }

/// Raised when two adjacent points coincide and the link direction is undefined.
class SingularConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drag and lift of link i (i >= 1), lumped on mass i.
Vec3 aero_force(int i, const LumpedState& y, const LumpedChain& chain);

/// Aerodynamic force for link vector `link` moving at air-relative velocity `v`.
Vec3 link_aero_force(const Vec3& link, const Vec3& v, const AeroParams& aero);

/// Gravity + fictitious + spring (+ aerodynamic) force on mass i.
Vec3 net_force(int i, const LumpedState& y, const LumpedChain& chain);

/// Tension T_j of link j (j = 1..N) as the force it exerts on x_{j-1}.
Vec3 spring_force(int link, const LumpedState& y, const LumpedChain& chain);

/// ydot = f(y).
LumpedState dynamics(const LumpedState& y, const LumpedChain& chain);
void dynamics(const LumpedState& y, const LumpedChain& chain, LumpedState& out);

struct Equilibrium {
  LumpedState state;
  LumpedChain chain;           ///< template with omega and attach filled in
  double attachment_radius = 0.0;
  /// Attachment radius signed by the side of the axis it sits on relative to
  /// the free end: negative when the two ends are on opposite sides.
  double signed_radius = 0.0;
  double residual = 0.0;       ///< max-norm of the net forces [N]
};

/// Rotational equilibrium at chain.omega with the free end at `tip_radius`
/// from the axis. omega = 0 gives the hanging chain under (tip_radius, 0, 0).
Equilibrium equilibrium_from_tip(const LumpedChain& chain, double tip_radius);

/// Rotational equilibrium whose free end sits at a g / omega^2 from the axis,
/// built by the tension recursion from the free end. The result is rotated so
/// that the attachment lies on the +x axis at height 0.
Equilibrium equilibrium_shape(const ParamPoint& point, const ChainParams& params,
                              const LumpedChain& chain_template);

/// Piecewise-linear control history (t, r, omega).
class ControlSchedule {
 public:
  struct Row {
    double t = 0.0;
    double radius = 0.0;
    double omega = 0.0;
  };

  ControlSchedule() = default;
  explicit ControlSchedule(std::vector<Row> rows);
  static ControlSchedule constant(double radius, double omega);

  [[nodiscard]] Row at(double t) const;
  /// d omega / dt of the segment containing t (0 outside the table).
  [[nodiscard]] double omega_rate(double t) const;
  [[nodiscard]] double end_time() const { return rows_.empty() ? 0.0 : rows_.back().t; }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }

  static ControlSchedule read_csv(std::istream& in);
  void write_csv(std::ostream& out) const;

 private:
  std::vector<Row> rows_;
};

struct SimulationOptions {
  double dt = 2e-6;          ///< semi-implicit Euler step [s]
  double duration = 1.0;     ///< [s]
  double sample_every = 1e-2;///< output stride [s]
};

struct Trajectory {
  std::vector<double> time;
  std::vector<LumpedState> states;
  std::vector<double> omega;
  std::vector<double> radius;
};

/// Time step recommended for a chain: 2e-6 s at the nominal stiffness,
/// scaled with 1/sqrt(stiffness / 8e7).
double recommended_dt(const LumpedChain& chain);

/// Integrates the rotating-frame dynamics with omega(t) and the attachment
/// (r(t), 0, 0) taken from the schedule. Throws NumericalError on blow-up.
Trajectory simulate(const LumpedState& initial, const LumpedChain& chain,
                    const ControlSchedule& schedule, const SimulationOptions& opts);

/// Kinetic + gravitational + spring energy in the rotating frame, including
/// the centrifugal potential (conserved when omega is constant and aero off).
double mechanical_energy(const LumpedState& y, const LumpedChain& chain);

/// Rigid rotation of the whole chain about `axis` through the attachment so
/// that mass 0 moves by `tip_displacement`; link lengths are preserved.
LumpedState perturb_rigidly(const LumpedState& y, const LumpedChain& chain,
                            double tip_displacement, const Vec3& axis);

/// Swings only the free-end mass about its neighbour so that it moves by
/// `tip_displacement`; the length of the end link is preserved.
LumpedState perturb_tip(const LumpedState& y, const LumpedChain& chain, double tip_displacement,
                        const Vec3& axis);

/// Lbar of the i-th zero-radius locus of the lumped chain at slope a, where
/// the signed attachment radius changes sign. Throws ZeroNotFound-style
/// std::runtime_error when fewer than i crossings exist below Lbar_max.
double lumped_locus(int i, double a, const ChainParams& params, const LumpedChain& chain_template,
                    double Lbar_max = 40.0);

/// Sign changes of the radial coordinate along the chain (axis crossings).
int count_crossings(const LumpedState& y, const LumpedChain& chain);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int N);

}  // namespace rotochain
