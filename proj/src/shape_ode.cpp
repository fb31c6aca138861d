#include "rotochain/shape_ode.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "rotochain/error.hpp"
#include "rotochain/shape_kernels.hpp"

namespace rotochain {

double ode_rhs(double u, double sbar, double uprime, double tip_offset) {
  return kernels::rhs(u, sbar + tip_offset, uprime);
}

ShapeCurve integrate_shape(double a, double Lbar, double tip_offset, double step) {
  if (!std::isfinite(a)) throw std::invalid_argument("initial slope must be finite");
  if (!(std::isfinite(Lbar) && Lbar > 0.0)) throw std::invalid_argument("Lbar must be positive");
  if (!std::isfinite(tip_offset) || tip_offset < 0.0)
    throw std::invalid_argument("tip offset must be non-negative");
  if (step == 0.0) step = default_step(Lbar);
  if (!(std::isfinite(step) && step > 0.0)) throw std::invalid_argument("step must be positive");

  const kernels::StepSchedule sched = kernels::make_schedule(Lbar, step);
  ShapeCurve curve;
  curve.a = a;
  curve.Lbar = Lbar;
  curve.tip_offset = tip_offset;
  curve.samples.reserve(sched.full_steps + 2);

  double u = a * tip_offset;
  double p = a;
  curve.samples.push_back({0.0, u, p});
  for (std::size_t k = 0; k < sched.full_steps; ++k) {
    kernels::rk4_step(u, p, static_cast<double>(k) * sched.step, sched.step, tip_offset);
    curve.samples.push_back({static_cast<double>(k + 1) * sched.step, u, p});
  }
  kernels::rk4_step(u, p, static_cast<double>(sched.full_steps) * sched.step, sched.last_step,
                    tip_offset);
  curve.samples.push_back({Lbar, u, p});
  return curve;
}

ShapeSample ShapeCurve::interpolate(double sbar) const {
  if (samples.empty()) throw std::logic_error("empty curve");
  if (sbar <= samples.front().sbar) return samples.front();
  if (sbar >= samples.back().sbar) return samples.back();
  const auto it = std::upper_bound(samples.begin(), samples.end(), sbar,
                                   [](double s, const ShapeSample& n) { return s < n.sbar; });
  const ShapeSample& right = *it;
  const ShapeSample& left = *(it - 1);
  const double h = right.sbar - left.sbar;
  const double t = (sbar - left.sbar) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  const double dl = ode_rhs(left.u, left.sbar, left.uprime, tip_offset);
  const double dr = ode_rhs(right.u, right.sbar, right.uprime, tip_offset);
  ShapeSample out;
  out.sbar = sbar;
  out.u = h00 * left.u + h10 * h * left.uprime + h01 * right.u + h11 * h * right.uprime;
  out.uprime = h00 * left.uprime + h10 * h * dl + h01 * right.uprime + h11 * h * dr;
  return out;
}

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double refine_zero(const ShapeCurve& curve, double lo, double hi) {
  double flo = curve.interpolate(lo).uprime;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = curve.interpolate(mid).uprime;
    if (fmid == 0.0) return mid;
    if (sign_of(fmid) == sign_of(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> uprime_zeros(const ShapeCurve& curve) {
  std::vector<double> zeros;
  const auto& s = curve.samples;
  std::size_t last = 0;
  int last_sign = sign_of(s.front().uprime);
  for (std::size_t k = 1; k < s.size(); ++k) {
    const int sg = sign_of(s[k].uprime);
    if (sg == 0) continue;
    if (last_sign == 0) {
      last_sign = sg;
      last = k;
      continue;
    }
    if (sg != last_sign) zeros.push_back(refine_zero(curve, s[last].sbar, s[k].sbar));
    last_sign = sg;
    last = k;
  }
  // A trailing exact zero at Lbar is a boundary zero.
  if (s.back().uprime == 0.0 && s.size() > 1) zeros.push_back(s.back().sbar);
  return zeros;
}

int count_mode(const ShapeCurve& curve) {
  const double tol = 1e-8 * std::max(1.0, curve.Lbar);
  int mode = 0;
  for (double z : uprime_zeros(curve))
    if (z > tol && z < curve.Lbar - tol) ++mode;
  return mode;
}

PhysicalShape recover_physical(const ShapeCurve& curve, const ChainParams& params,
                               double angular_speed) {
  params.validate();
  if (!(std::isfinite(angular_speed) && angular_speed > 0.0))
    throw std::invalid_argument("angular speed must be positive");
  const double scale = params.gravity / (angular_speed * angular_speed);
  const double m = curve.tip_offset;

  PhysicalShape shape;
  shape.angular_speed = angular_speed;
  shape.samples.resize(curve.samples.size());
  for (std::size_t k = 0; k < curve.samples.size(); ++k) {
    const ShapeSample& c = curve.samples[k];
    PhysicalSample& p = shape.samples[k];
    p.s = c.sbar * scale;
    p.rho = -c.uprime * scale;
    const double x = c.sbar + m;
    if (x < kSingularityThreshold && std::fabs(c.u) < kSingularityThreshold) {
      // Limit at the free end without tip mass: u ~ a s-bar.
      const double h = std::hypot(1.0, c.uprime);
      p.rho_prime = c.uprime / h;
      p.z_prime = 1.0 / h;
    } else {
      const double h = std::hypot(x, c.u);
      p.rho_prime = c.u / h;
      p.z_prime = x / h;
    }
    if (!(std::fabs(p.rho_prime) < 1.0) || !(p.z_prime > 0.0))
      throw NumericalError("|rho'| reached 1: inextensibility cannot hold");
    p.tension = params.gravity * (params.linear_density * p.s + params.tip_mass) / p.z_prime;
  }
  // The last abscissa is Lbar exactly; pin s(L) = L against rounding.
  shape.samples.back().s = params.length * curve.samples.back().sbar / curve.Lbar;

  // z' > 0; integrate downward from z(L) = 0 with the trapezoid rule.
  auto& ps = shape.samples;
  ps.back().z = 0.0;
  for (std::size_t k = ps.size() - 1; k-- > 0;) {
    const double ds = ps[k + 1].s - ps[k].s;
    ps[k].z = ps[k + 1].z - 0.5 * ds * (ps[k].z_prime + ps[k + 1].z_prime);
  }
  shape.mode = count_mode(curve);
  shape.free_end_radius = std::fabs(ps.front().rho);
  shape.attachment_radius = std::fabs(ps.back().rho);
  return shape;
}

void write_curve_csv(std::ostream& out, const ShapeCurve& curve) {
  out << "sbar,u,uprime\n" << std::setprecision(17);
  for (const auto& s : curve.samples) out << s.sbar << ',' << s.u << ',' << s.uprime << '\n';
}

void write_physical_csv(std::ostream& out, const PhysicalShape& shape) {
  out << "s,rho,z,F\n" << std::setprecision(17);
  for (const auto& p : shape.samples)
    out << p.s << ',' << p.rho << ',' << p.z << ',' << p.tension << '\n';
}

}  // namespace rotochain
