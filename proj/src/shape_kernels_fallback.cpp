// Non-x86 builds: the AVX2 entry point forwards to the scalar kernel.

#include "rotochain/shape_kernels.hpp"

namespace rotochain::kernels {

void integrate_endpoints_avx2(std::span<const double> a, double Lbar, double tip, double step,
                              std::span<double> u_end, std::span<double> up_end) {
  integrate_endpoints_scalar(a, Lbar, tip, step, u_end, up_end);
}

}  // namespace rotochain::kernels
