#include "rotochain/shape_kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace rotochain::kernels {

StepSchedule make_schedule(double Lbar, double step) {
  if (!(std::isfinite(Lbar) && Lbar > 0.0)) throw std::invalid_argument("Lbar must be positive");
  if (!(std::isfinite(step) && step > 0.0)) throw std::invalid_argument("step must be positive");
  const double ratio = Lbar / step;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
  StepSchedule sched;
  sched.full_steps = n - 1;
  sched.step = step;
  sched.last_step = Lbar - static_cast<double>(sched.full_steps) * step;
  return sched;
}

void integrate_endpoints_scalar(std::span<const double> a, double Lbar, double tip, double step,
                                std::span<double> u_end, std::span<double> up_end) {
  if (u_end.size() < a.size() || up_end.size() < a.size())
    throw std::invalid_argument("output spans too small");
  const StepSchedule sched = make_schedule(Lbar, step);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double u = a[i] * tip;
    double p = a[i];
    for (std::size_t k = 0; k < sched.full_steps; ++k)
      rk4_step(u, p, static_cast<double>(k) * sched.step, sched.step, tip);
    rk4_step(u, p, static_cast<double>(sched.full_steps) * sched.step, sched.last_step, tip);
    u_end[i] = u;
    up_end[i] = p;
  }
}

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

Isa detect() { return avx2_available() ? Isa::avx2 : Isa::scalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa set_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_available())
    throw std::invalid_argument("AVX2 is not supported on this CPU");
  return current().exchange(isa);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void integrate_endpoints(std::span<const double> a, double Lbar, double tip, double step,
                         std::span<double> u_end, std::span<double> up_end) {
  if (active_isa() == Isa::avx2)
    integrate_endpoints_avx2(a, Lbar, tip, step, u_end, up_end);
  else
    integrate_endpoints_scalar(a, Lbar, tip, step, u_end, up_end);
}

}  // namespace rotochain::kernels
