#include <doctest.h>

#include <random>
#include <vector>

#include "rotochain/shape_kernels.hpp"
#include "rotochain/shape_ode.hpp"

using namespace rotochain;
namespace k = rotochain::kernels;

namespace {

std::vector<double> random_slopes(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  std::vector<double> a(n);
  for (auto& v : a) v = dist(rng);
  a[0] = 0.0;  // limit branch at the origin
  return a;
}

}  // namespace

TEST_CASE("scalar kernel matches integrate_shape") {
  const auto a = random_slopes(13, 3);
  std::vector<double> u(a.size()), up(a.size());
  for (double tip : {0.0, 0.7}) {
    k::integrate_endpoints_scalar(a, 17.3, tip, default_step(17.3), u, up);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto c = integrate_shape(a[i], 17.3, tip);
      CHECK(u[i] == c.back().u);
      CHECK(up[i] == c.back().uprime);
    }
  }
}

TEST_CASE("AVX2 kernel is bit-identical to the scalar one") {
  if (!k::avx2_available()) {
    MESSAGE("AVX2 not available, skipped");
    return;
  }
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 257u}) {
    const auto a = random_slopes(n, static_cast<unsigned>(n));
    std::vector<double> us(n), ups(n), uv(n), upv(n);
    for (double L : {0.3, 9.99, 40.0}) {
      for (double tip : {0.0, 1.25}) {
        k::integrate_endpoints_scalar(a, L, tip, default_step(L), us, ups);
        k::integrate_endpoints_avx2(a, L, tip, default_step(L), uv, upv);
        for (std::size_t i = 0; i < n; ++i) {
          CHECK(us[i] == uv[i]);
          CHECK(ups[i] == upv[i]);
        }
      }
    }
  }
}

TEST_CASE("dispatch") {
  const auto before = k::active_isa();
  k::set_isa(k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);
  CHECK(k::isa_name(k::Isa::scalar) == "scalar");
  const auto a = random_slopes(9, 11);
  std::vector<double> u1(9), p1(9), u2(9), p2(9);
  k::integrate_endpoints(a, 5.0, 0.0, 0.01, u1, p1);
  k::set_isa(before);
  k::integrate_endpoints(a, 5.0, 0.0, 0.01, u2, p2);
  CHECK(u1 == u2);
  CHECK(p1 == p2);
}

TEST_CASE("step schedule lands on Lbar") {
  const auto s = k::make_schedule(1.0, 0.3);
  CHECK(s.full_steps == 3);
  CHECK(s.last_step == doctest::Approx(0.1));
  const auto exact = k::make_schedule(1.0, 0.25);
  CHECK(exact.full_steps == 3);
  CHECK(exact.last_step == 0.25);
}
