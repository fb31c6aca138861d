// Compiled with -mavx2 (no FMA) so every lane rounds exactly like the scalar
// reference in shape_kernels.hpp.

#include <immintrin.h>

#include <stdexcept>

#include "rotochain/shape_kernels.hpp"

namespace rotochain::kernels {

namespace {

struct Lanes {
  __m256d u;
  __m256d p;
};

inline __m256d neg(__m256d v) { return _mm256_xor_pd(v, _mm256_set1_pd(-0.0)); }
inline __m256d abs(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline __m256d rhs4(__m256d u, __m256d x, __m256d p) {
  const __m256d eps = _mm256_set1_pd(1e-12);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d regular =
      _mm256_div_pd(neg(u), _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(u, u))));
  const __m256d limit =
      _mm256_div_pd(neg(p), _mm256_sqrt_pd(_mm256_add_pd(one, _mm256_mul_pd(p, p))));
  const __m256d at_origin = _mm256_and_pd(_mm256_cmp_pd(x, eps, _CMP_LT_OQ),
                                          _mm256_cmp_pd(abs(u), eps, _CMP_LT_OQ));
  return _mm256_blendv_pd(regular, limit, at_origin);
}

inline void rk4_step4(Lanes& y, double s, double h, double tip) {
  const double half = 0.5 * h;
  const __m256d vh = _mm256_set1_pd(h);
  const __m256d vhalf = _mm256_set1_pd(half);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d x0 = _mm256_set1_pd(s + tip);
  const __m256d xm = _mm256_set1_pd((s + half) + tip);
  const __m256d x1 = _mm256_set1_pd((s + h) + tip);

  const __m256d k1u = y.p;
  const __m256d k1p = rhs4(y.u, x0, y.p);
  const __m256d k2u = _mm256_add_pd(y.p, _mm256_mul_pd(vhalf, k1p));
  const __m256d k2p = rhs4(_mm256_add_pd(y.u, _mm256_mul_pd(vhalf, k1u)), xm, k2u);
  const __m256d k3u = _mm256_add_pd(y.p, _mm256_mul_pd(vhalf, k2p));
  const __m256d k3p = rhs4(_mm256_add_pd(y.u, _mm256_mul_pd(vhalf, k2u)), xm, k3u);
  const __m256d k4u = _mm256_add_pd(y.p, _mm256_mul_pd(vh, k3p));
  const __m256d k4p = rhs4(_mm256_add_pd(y.u, _mm256_mul_pd(vh, k3u)), x1, k4u);

  const __m256d sixth = _mm256_set1_pd(h / 6.0);
  const __m256d su = _mm256_add_pd(
      _mm256_add_pd(_mm256_add_pd(k1u, _mm256_mul_pd(two, k2u)), _mm256_mul_pd(two, k3u)), k4u);
  const __m256d sp = _mm256_add_pd(
      _mm256_add_pd(_mm256_add_pd(k1p, _mm256_mul_pd(two, k2p)), _mm256_mul_pd(two, k3p)), k4p);
  y.u = _mm256_add_pd(y.u, _mm256_mul_pd(sixth, su));
  y.p = _mm256_add_pd(y.p, _mm256_mul_pd(sixth, sp));
}

}  // namespace

void integrate_endpoints_avx2(std::span<const double> a, double Lbar, double tip, double step,
                              std::span<double> u_end, std::span<double> up_end) {
  if (u_end.size() < a.size() || up_end.size() < a.size())
    throw std::invalid_argument("output spans too small");
  const StepSchedule sched = make_schedule(Lbar, step);
  const std::size_t n = a.size();
  const __m256d vtip = _mm256_set1_pd(tip);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d slope = _mm256_loadu_pd(a.data() + i);
    Lanes y{_mm256_mul_pd(slope, vtip), slope};
    for (std::size_t k = 0; k < sched.full_steps; ++k)
      rk4_step4(y, static_cast<double>(k) * sched.step, sched.step, tip);
    rk4_step4(y, static_cast<double>(sched.full_steps) * sched.step, sched.last_step, tip);
    _mm256_storeu_pd(u_end.data() + i, y.u);
    _mm256_storeu_pd(up_end.data() + i, y.p);
  }
  if (i < n)
    integrate_endpoints_scalar(a.subspan(i), Lbar, tip, step, u_end.subspan(i),
                               up_end.subspan(i));
}

}  // namespace rotochain::kernels
