#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "rotochain/chain_model.hpp"

namespace rotochain {

/// One node of the dimensionless integration: (s-bar, u, u').
struct ShapeSample {
  double sbar = 0.0;
  double u = 0.0;
  double uprime = 0.0;
};

/// Fixed-step solution of u'' = -u / sqrt((s + m)^2 + u^2) on [0, Lbar],
/// with m the tip offset (0 without tip mass).
struct ShapeCurve {
  std::vector<ShapeSample> samples;
  double a = 0.0;
  double Lbar = 0.0;
  double tip_offset = 0.0;

  /// Cubic Hermite dense output; u uses (u, u') and u' uses (u', u'') at the nodes.
  [[nodiscard]] ShapeSample interpolate(double sbar) const;
  [[nodiscard]] const ShapeSample& back() const { return samples.back(); }
};

struct PhysicalSample {
  double s = 0.0;        ///< arc length from the free end [m]
  double rho = 0.0;      ///< signed distance to the rotation axis [m]
  double z = 0.0;        ///< height, z(L) = 0 [m]
  double tension = 0.0;  ///< F [N]
  double rho_prime = 0.0;
  double z_prime = 0.0;
};

struct PhysicalShape {
  std::vector<PhysicalSample> samples;
  int mode = 0;
  double angular_speed = 0.0;
  double free_end_radius = 0.0;   ///< |rho(0)|
  double attachment_radius = 0.0; ///< |rho(L)|
};

/// Default RK4 step for an integration up to `Lbar`.
inline double default_step(double Lbar) { return Lbar / 4096.0; }

/// Below this, (s-bar + m, u) is treated as the singular point and the
/// analytic limit -u'/sqrt(1 + u'^2) is used.
inline constexpr double kSingularityThreshold = 1e-12;

/// Right-hand side u'' of the shape equation. `uprime` is only consulted on
/// the limit branch at the origin.
double ode_rhs(double u, double sbar, double uprime, double tip_offset);

/// Integrates from u(0) = a * tip_offset, u'(0) = a to Lbar. The last step is
/// shortened so the final node lands exactly on Lbar.
ShapeCurve integrate_shape(double a, double Lbar, double tip_offset = 0.0, double step = 0.0);

/// Zeros of u' on (0, Lbar], bisection-refined on the dense output to 1e-10.
std::vector<double> uprime_zeros(const ShapeCurve& curve);

/// Number of sign changes of u' strictly inside (0, Lbar). Zeros closer than
/// 1e-8 max(1, Lbar) to either end are attributed to the boundary.
int count_mode(const ShapeCurve& curve);

/// Maps the dimensionless curve back to (s, rho, z, F) for the given chain and
/// speed. Throws NumericalError if |rho'| reaches 1.
PhysicalShape recover_physical(const ShapeCurve& curve, const ChainParams& params,
                               double angular_speed);

void write_curve_csv(std::ostream& out, const ShapeCurve& curve);
void write_physical_csv(std::ostream& out, const PhysicalShape& shape);

}  // namespace rotochain
