#include "rotochain/lumped.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

#include "rotochain/error.hpp"

namespace rotochain {

namespace {

constexpr double kNominalStiffness = 8e7;
const Vec3 kUp(0.0, 0.0, 1.0);

Vec3 point(const LumpedState& y, const LumpedChain& chain, int i) {
  return i == chain.N ? chain.attach : position(y, i);
}

// Hooke force of link j on x_{j-1}. Length and stretch are formed in extended
// precision: at k ~ 1e8 N/m the double rounding of |l| alone is ~1e-9 N.
Vec3 hooke(const Vec3& from, const Vec3& to, double rest, double k) {
  const long double dx = static_cast<long double>(to.x()) - from.x();
  const long double dy = static_cast<long double>(to.y()) - from.y();
  const long double dz = static_cast<long double>(to.z()) - from.z();
  const long double len = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (len < 1e-12L) throw SingularConfiguration("adjacent masses coincide");
  const long double scale = static_cast<long double>(k) * (len - rest) / len;
  return {static_cast<double>(scale * dx), static_cast<double>(scale * dy),
          static_cast<double>(scale * dz)};
}

Vec3 body_force(int i, const Vec3& x, const Vec3& v, const LumpedChain& chain) {
  const double m = chain.mass[static_cast<std::size_t>(i)];
  const double w = chain.omega;
  Vec3 f(0.0, 0.0, -m * chain.gravity);
  f.x() += m * w * w * x.x();
  f.y() += m * w * w * x.y();
  // Coriolis -2 m w z x v and Euler -m wdot z x x.
  f.x() += 2.0 * m * w * v.y() + m * chain.omega_dot * x.y();
  f.y() += -2.0 * m * w * v.x() - m * chain.omega_dot * x.x();
  return f;
}

Vec3 air_velocity(const Vec3& x, const Vec3& v, double omega) {
  return v + omega * kUp.cross(x);
}

}  // namespace

double LumpedChain::total_mass() const {
  double total = 0.0;
  for (double m : mass) total += m;
  return total;
}

LumpedChain make_lumped_chain(const ChainParams& params, int N, bool aero,
                              double stiffness_scale) {
  params.validate();
  if (N < 2) throw std::invalid_argument("lumped chain needs N >= 2");
  if (!(stiffness_scale > 0.0)) throw std::invalid_argument("stiffness scale must be positive");
  LumpedChain chain;
  chain.N = N;
  chain.mass.assign(static_cast<std::size_t>(N), params.linear_density * params.length / N);
  chain.mass[0] += params.tip_mass;
  chain.rest_length = params.length / N;
  chain.stiffness = kNominalStiffness * stiffness_scale;
  chain.gravity = params.gravity;
  chain.aero.diameter = params.diameter;
  chain.aero_enabled = aero;
  return chain;
}

Vec3 link_aero_force(const Vec3& link, const Vec3& v, const AeroParams& aero) {
  const double speed = v.norm();
  const double len = link.norm();
  if (speed == 0.0 || len == 0.0) return Vec3::Zero();
  const double cos_xi = std::clamp(-link.dot(v) / (len * speed), -1.0, 1.0);
  const double sin_xi = std::sqrt(std::max(0.0, 1.0 - cos_xi * cos_xi));
  const double q = 0.5 * aero.air_density * len * aero.diameter * speed * speed;
  const double cd = aero.skin_friction + aero.crossflow * sin_xi * sin_xi * sin_xi;
  const double cl = aero.crossflow * sin_xi * sin_xi * cos_xi;
  Vec3 f = -(q * cd / speed) * v;
  const Vec3 lift_dir = -(v.cross(link)).cross(v);
  const double lift_norm = lift_dir.norm();
  // Lift is undefined when the link is aligned with the flow.
  if (lift_norm > 1e-12 * speed * speed * len) f += (q * cl / lift_norm) * lift_dir;
  return f;
}

Vec3 aero_force(int i, const LumpedState& y, const LumpedChain& chain) {
  if (i < 1 || i >= chain.N) return Vec3::Zero();
  const Vec3 x = position(y, i);
  const Vec3 link = x - position(y, i - 1);
  return link_aero_force(link, air_velocity(x, velocity(y, i), chain.omega), chain.aero);
}

Vec3 spring_force(int link, const LumpedState& y, const LumpedChain& chain) {
  if (link < 1 || link > chain.N) throw std::out_of_range("link index");
  return hooke(point(y, chain, link - 1), point(y, chain, link), chain.rest_length,
               chain.stiffness);
}

Vec3 net_force(int i, const LumpedState& y, const LumpedChain& chain) {
  if (i < 0 || i >= chain.N) throw std::out_of_range("mass index");
  Vec3 f = body_force(i, position(y, i), velocity(y, i), chain);
  f += spring_force(i + 1, y, chain);
  if (i > 0) f -= spring_force(i, y, chain);
  if (chain.aero_enabled) f += aero_force(i, y, chain);
  return f;
}

namespace {

// State derivative; the Coriolis acceleration is left out when `coriolis` is
// false so the integrator can treat it implicitly.
void derivative(const LumpedState& y, const LumpedChain& chain, LumpedState& out, bool coriolis) {
  const int N = chain.N;
  out.resize(6 * N);
  Vec3 below = Vec3::Zero();  // force of link i on mass i (from the lower link)
  for (int i = 0; i < N; ++i) {
    const Vec3 x = position(y, i);
    const Vec3 v = velocity(y, i);
    const double m = chain.mass[static_cast<std::size_t>(i)];
    const Vec3 up = hooke(x, point(y, chain, i + 1), chain.rest_length, chain.stiffness);
    Vec3 f = body_force(i, x, v, chain) + up - below;
    if (!coriolis) {
      f.x() -= 2.0 * m * chain.omega * v.y();
      f.y() += 2.0 * m * chain.omega * v.x();
    }
    if (chain.aero_enabled && i > 0)
      f += link_aero_force(x - position(y, i - 1), air_velocity(x, v, chain.omega), chain.aero);
    out.segment<3>(6 * i) = v;
    out.segment<3>(6 * i + 3) = f / m;
    below = up;
  }
}

}  // namespace

void dynamics(const LumpedState& y, const LumpedChain& chain, LumpedState& out) {
  derivative(y, chain, out, true);
}

LumpedState dynamics(const LumpedState& y, const LumpedChain& chain) {
  LumpedState out;
  dynamics(y, chain, out);
  return out;
}

Equilibrium equilibrium_from_tip(const LumpedChain& chain_in, double tip_radius) {
  if (!std::isfinite(tip_radius) || tip_radius < 0.0)
    throw std::invalid_argument("tip radius must be finite and non-negative");
  Equilibrium eq;
  eq.chain = chain_in;
  LumpedChain& chain = eq.chain;
  chain.omega_dot = 0.0;
  const int N = chain.N;

  std::vector<Vec3> x(static_cast<std::size_t>(N + 1));
  x[0] = Vec3(tip_radius, 0.0, 0.0);
  Vec3 tension = Vec3::Zero();  // force of the link above on the current mass
  for (int i = 0; i < N; ++i) {
    const Vec3& xi = x[static_cast<std::size_t>(i)];
    Vec3 external = body_force(i, xi, Vec3::Zero(), chain);
    if (chain.aero_enabled && i > 0)
      external += link_aero_force(xi - x[static_cast<std::size_t>(i - 1)],
                                  air_velocity(xi, Vec3::Zero(), chain.omega), chain.aero);
    // Balance on mass i: T_{i+1} - T_i + external = 0.
    tension = tension - external;
    const double t = tension.norm();
    if (!std::isfinite(t) || !(tension.z() > 0.0))
      throw NumericalError("tension recursion left the physical regime");
    x[static_cast<std::size_t>(i + 1)] =
        xi + (tension / t) * (chain.rest_length + t / chain.stiffness);
  }

  // Rotate about the axis so the attachment lies on +x, then drop it to z = 0.
  const Vec3 top = x.back();
  const double horizontal = std::hypot(top.x(), top.y());
  eq.signed_radius = top.x() < 0.0 ? -horizontal : horizontal;
  const double angle = horizontal > 0.0 ? -std::atan2(top.y(), top.x()) : 0.0;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, kUp).toRotationMatrix();
  const double dz = top.z();
  for (auto& p : x) {
    p = rot * p;
    p.z() -= dz;
  }
  chain.attach = Vec3(x.back().x(), 0.0, 0.0);
  eq.attachment_radius = chain.attach.x();

  eq.state = LumpedState::Zero(6 * N);
  for (int i = 0; i < N; ++i) eq.state.segment<3>(6 * i) = x[static_cast<std::size_t>(i)];
  double worst = 0.0;
  for (int i = 0; i < N; ++i)
    worst = std::max(worst, net_force(i, eq.state, chain).cwiseAbs().maxCoeff());
  eq.residual = worst;
  return eq;
}

Equilibrium equilibrium_shape(const ParamPoint& point, const ChainParams& params,
                              const LumpedChain& chain_template) {
  if (!(point.a >= 0.0 && point.Lbar > 0.0))
    throw std::invalid_argument("equilibrium needs a >= 0 and Lbar > 0");
  const DimensionalPoint dim = dimensionalize(params, point);
  LumpedChain chain = chain_template;
  chain.omega = dim.angular_speed;
  return equilibrium_from_tip(chain, dim.free_end_radius);
}

double lumped_locus(int i, double a, const ChainParams& params, const LumpedChain& chain_template,
                    double Lbar_max) {
  if (i < 1) throw std::invalid_argument("locus index must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("locus needs a > 0");
  const auto signed_r = [&](double Lbar) {
    return equilibrium_shape({a, Lbar}, params, chain_template).signed_radius;
  };
  constexpr double kScan = 0.02;
  int found = 0;
  double prev_L = 0.0, prev_r = 0.0;
  bool have_prev = false;
  for (double L = kScan; L <= Lbar_max; L += kScan) {
    double r;
    try {
      r = signed_r(L);
    } catch (const NumericalError&) {
      have_prev = false;
      continue;
    }
    if (have_prev && (r < 0.0) != (prev_r < 0.0) && ++found == i) {
      double lo = prev_L, hi = L;
      const bool lo_negative = prev_r < 0.0;
      for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((signed_r(mid) < 0.0) == lo_negative ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev_L = L;
    prev_r = r;
    have_prev = true;
  }
  throw std::runtime_error("lumped chain has fewer zero-radius crossings than requested");
}

ControlSchedule::ControlSchedule(std::vector<Row> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw std::invalid_argument("control schedule is empty");
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const Row& r = rows_[k];
    if (!std::isfinite(r.t) || !std::isfinite(r.radius) || !std::isfinite(r.omega))
      throw std::invalid_argument("control schedule has non-finite entries");
    if (r.radius < 0.0 || r.omega < 0.0)
      throw std::invalid_argument("control schedule needs r >= 0 and omega >= 0");
    if (k > 0 && !(r.t > rows_[k - 1].t))
      throw std::invalid_argument("control schedule times must increase strictly");
  }
}

ControlSchedule ControlSchedule::constant(double radius, double omega) {
  return ControlSchedule({{0.0, radius, omega}});
}

ControlSchedule::Row ControlSchedule::at(double t) const {
  if (rows_.empty()) throw std::logic_error("empty schedule");
  if (t <= rows_.front().t) return {t, rows_.front().radius, rows_.front().omega};
  if (t >= rows_.back().t) return {t, rows_.back().radius, rows_.back().omega};
  const auto it = std::upper_bound(rows_.begin(), rows_.end(), t,
                                   [](double tt, const Row& r) { return tt < r.t; });
  const Row& b = *it;
  const Row& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return {t, a.radius + w * (b.radius - a.radius), a.omega + w * (b.omega - a.omega)};
}

double ControlSchedule::omega_rate(double t) const {
  if (rows_.size() < 2 || t < rows_.front().t || t >= rows_.back().t) return 0.0;
  const auto it = std::upper_bound(rows_.begin(), rows_.end(), t,
                                   [](double tt, const Row& r) { return tt < r.t; });
  const Row& b = *it;
  const Row& a = *(it - 1);
  return (b.omega - a.omega) / (b.t - a.t);
}

ControlSchedule ControlSchedule::read_csv(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_of("abcdfghijklmnopqrstuvwxyz_") != std::string::npos) continue;  // header
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    Row r;
    if (!(fields >> r.t >> r.radius >> r.omega))
      throw std::invalid_argument("malformed control schedule row: " + line);
    rows.push_back(r);
  }
  return ControlSchedule(std::move(rows));
}

void ControlSchedule::write_csv(std::ostream& out) const {
  out << "t,r_m,omega_rad_s\n" << std::setprecision(12);
  for (const Row& r : rows_) out << r.t << ',' << r.radius << ',' << r.omega << '\n';
}

double recommended_dt(const LumpedChain& chain) {
  return 2e-6 * std::sqrt(kNominalStiffness / chain.stiffness);
}

Trajectory simulate(const LumpedState& initial, const LumpedChain& chain_in,
                    const ControlSchedule& schedule, const SimulationOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.duration >= 0.0))
    throw std::invalid_argument("simulation needs dt > 0 and duration >= 0");
  LumpedChain chain = chain_in;
  const int N = chain.N;
  if (initial.size() != 6 * N) throw std::invalid_argument("state size does not match chain");
  const double limit = 10.0 * chain.length();
  LumpedState y = initial;
  LumpedState f(6 * N);

  Trajectory traj;
  const auto steps = static_cast<long>(std::llround(opts.duration / opts.dt));
  const long stride = std::max(1L, std::lround(opts.sample_every / opts.dt));
  const auto record = [&](double t) {
    traj.time.push_back(t);
    traj.states.push_back(y);
    traj.omega.push_back(chain.omega);
    traj.radius.push_back(chain.attach.x());
  };
  for (long n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * opts.dt;
    const ControlSchedule::Row c = schedule.at(t);
    chain.omega = c.omega;
    chain.omega_dot = schedule.omega_rate(t);
    chain.attach = Vec3(c.radius, 0.0, 0.0);
    if (n % stride == 0) record(t);
    if (n == steps) break;
    derivative(y, chain, f, false);
    // Semi-implicit Euler: velocities first, then positions with the new
    // velocities. The Coriolis term uses the mean of old and new velocity,
    // an exact rotation; explicit treatment grows energy at ~2 omega^2 dt.
    const double th = chain.omega * opts.dt;
    for (int i = 0; i < N; ++i) {
      const Vec3 v = velocity(y, i);
      const Vec3 a = f.segment<3>(6 * i + 3);
      const double bx = v.x() + opts.dt * a.x() + th * v.y();
      const double by = v.y() + opts.dt * a.y() - th * v.x();
      const double vx = (bx + th * by) / (1.0 + th * th);
      y.segment<3>(6 * i + 3) = Vec3(vx, by - th * vx, v.z() + opts.dt * a.z());
      y.segment<3>(6 * i) += opts.dt * y.segment<3>(6 * i + 3);
      if (!(y.segment<3>(6 * i).norm() <= limit)) {
        std::ostringstream msg;
        msg << "simulation blew up at t = " << t << " s (mass " << i << " beyond 10 L)";
        throw NumericalError(msg.str());
      }
    }
  }
  return traj;
}

double mechanical_energy(const LumpedState& y, const LumpedChain& chain) {
  double e = 0.0;
  const double w2 = chain.omega * chain.omega;
  for (int i = 0; i < chain.N; ++i) {
    const double m = chain.mass[static_cast<std::size_t>(i)];
    const Vec3 x = position(y, i);
    e += 0.5 * m * velocity(y, i).squaredNorm();
    e += m * chain.gravity * x.z();
    e -= 0.5 * m * w2 * (x.x() * x.x() + x.y() * x.y());
  }
  for (int j = 1; j <= chain.N; ++j) {
    const double stretch = (point(y, chain, j) - point(y, chain, j - 1)).norm() - chain.rest_length;
    e += 0.5 * chain.stiffness * stretch * stretch;
  }
  return e;
}

LumpedState perturb_rigidly(const LumpedState& y, const LumpedChain& chain,
                            double tip_displacement, const Vec3& axis) {
  const Vec3 pivot = chain.attach;
  const Vec3 n = axis.normalized();
  const Vec3 arm = position(y, 0) - pivot;
  const double lever = arm.cross(n).norm();
  if (lever <= 0.0) throw std::invalid_argument("rotation axis passes through the tip");
  const double angle = tip_displacement / lever;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, n).toRotationMatrix();
  LumpedState out = y;
  for (int i = 0; i < chain.N; ++i) {
    out.segment<3>(6 * i) = pivot + rot * (position(y, i) - pivot);
    out.segment<3>(6 * i + 3) = rot * velocity(y, i);
  }
  return out;
}

LumpedState perturb_tip(const LumpedState& y, const LumpedChain& chain, double tip_displacement,
                        const Vec3& axis) {
  (void)chain;
  const Vec3 pivot = position(y, 1);
  const Vec3 n = axis.normalized();
  const Vec3 arm = position(y, 0) - pivot;
  const double lever = arm.cross(n).norm();
  if (lever <= 0.0) throw std::invalid_argument("rotation axis is parallel to the end link");
  // Chord of the swing equals the requested displacement.
  const double angle = 2.0 * std::asin(std::clamp(tip_displacement / (2.0 * lever), -1.0, 1.0));
  LumpedState out = y;
  out.segment<3>(0) = pivot + Eigen::AngleAxisd(angle, n).toRotationMatrix() * arm;
  return out;
}

int count_crossings(const LumpedState& y, const LumpedChain& chain) {
  std::vector<double> radial;
  for (int i = 0; i < chain.N; ++i) radial.push_back(position(y, i).x());
  if (std::fabs(chain.attach.x()) > 1e-9) radial.push_back(chain.attach.x());
  int crossings = 0;
  int last = 0;
  for (double r : radial) {
    const int s = (r > 0.0) - (r < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++crossings;
    last = s;
  }
  return crossings;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int N) {
  out << "t";
  for (int i = 0; i < N; ++i) out << ",x" << i << ",y" << i << ",z" << i;
  out << '\n' << std::setprecision(10);
  for (std::size_t k = 0; k < traj.time.size(); ++k) {
    out << traj.time[k];
    for (int i = 0; i < N; ++i) {
      const Vec3 p = position(traj.states[k], i);
      out << ',' << p.x() << ',' << p.y() << ',' << p.z();
    }
    out << '\n';
  }
}

}  // namespace rotochain
