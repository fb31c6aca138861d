#pragma once

// Batched end-point integration of the shape equation. Every lane follows the
// step schedule of integrate_shape() and performs the same IEEE operations in
// the same order, so the scalar and AVX2 variants agree bit for bit.

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

namespace rotochain::kernels {

enum class Isa { scalar, avx2 };

/// Integration grid shared by all kernels: `full_steps` steps of `step`
/// followed by an optional final step of `last_step` (0 when absent).
struct StepSchedule {
  std::size_t full_steps = 0;
  double step = 0.0;
  double last_step = 0.0;
};

StepSchedule make_schedule(double Lbar, double step);

/// Reference right-hand side; the SIMD kernel mirrors this expression.
inline double rhs(double u, double x, double uprime) {
  if (x < 1e-12 && std::fabs(u) < 1e-12) return -uprime / std::sqrt(1.0 + uprime * uprime);
  return -u / std::sqrt(x * x + u * u);
}

/// One classical RK4 step of the first-order system (u, u') at abscissa s.
inline void rk4_step(double& u, double& p, double s, double h, double tip) {
  const double half = 0.5 * h;
  const double x0 = s + tip;
  const double xm = (s + half) + tip;
  const double x1 = (s + h) + tip;

  const double k1u = p;
  const double k1p = rhs(u, x0, p);
  const double k2u = p + half * k1p;
  const double k2p = rhs(u + half * k1u, xm, k2u);
  const double k3u = p + half * k2p;
  const double k3p = rhs(u + half * k2u, xm, k3u);
  const double k4u = p + h * k3p;
  const double k4p = rhs(u + h * k3u, x1, k4u);

  const double sixth = h / 6.0;
  u = u + sixth * (((k1u + 2.0 * k2u) + 2.0 * k3u) + k4u);
  p = p + sixth * (((k1p + 2.0 * k2p) + 2.0 * k3p) + k4p);
}

/// Abscissa of node k of the schedule.
inline double node_abscissa(const StepSchedule& sched, std::size_t k, double Lbar) {
  return k > sched.full_steps ? Lbar : static_cast<double>(k) * sched.step;
}

/// For each slope a[i], integrates from (a[i] * tip, a[i]) to Lbar and stores
/// the end state in u_end[i], up_end[i].
void integrate_endpoints_scalar(std::span<const double> a, double Lbar, double tip, double step,
                                std::span<double> u_end, std::span<double> up_end);
void integrate_endpoints_avx2(std::span<const double> a, double Lbar, double tip, double step,
                              std::span<double> u_end, std::span<double> up_end);

/// Dispatches to the widest variant supported by the running CPU.
void integrate_endpoints(std::span<const double> a, double Lbar, double tip, double step,
                         std::span<double> u_end, std::span<double> up_end);

bool avx2_available();
Isa active_isa();
/// Forces a variant (testing and benchmarking); returns the previous one.
Isa set_isa(Isa isa);
std::string_view isa_name(Isa isa);

}  // namespace rotochain::kernels
