#pragma once

#include <iosfwd>
#include <vector>

#include "rotochain/bessel.hpp"
#include "rotochain/chain_model.hpp"
#include "rotochain/shape_ode.hpp"

namespace rotochain {

/// Critical speeds omega_i = (h_i / 2) sqrt(g / L), i = 1..n.
std::vector<double> critical_speeds(const ChainParams& params, int n);

/// Rows of the configuration surface: one integration per slope, resampled
/// on a common uniform s-bar grid.
struct SurfaceSample {
  std::vector<double> a_values;
  std::vector<double> sbar_values;
  std::vector<std::vector<ShapeSample>> rows;  ///< rows[i][k] at (a_values[i], sbar_values[k])
};

/// `na` slopes spread uniformly over [a_lo, a_hi] and `ns` abscissae over [0, Lbar_max].
SurfaceSample sample_surface(double a_lo, double a_hi, double Lbar_max, int na, int ns);

struct LocusPoint {
  double a = 0.0;
  double Lbar = 0.0;  ///< z_i(a)
  double u = 0.0;     ///< u_a(z_i(a)); u' vanishes there
};

/// The i-th zero-radius locus: curve z_i(a) on the configuration surface.
struct ZeroRadiusLocus {
  int index = 0;
  std::vector<LocusPoint> points;
  std::vector<double> skipped;  ///< slopes whose i-th zero lies beyond Lbar_max
};

ZeroRadiusLocus zero_radius_locus(int i, const std::vector<double>& a_samples,
                                  double Lbar_max = 40.0);

/// Rotation mode at a parameter point: zeros of u' inside (0, Lbar).
int classify_mode(const ParamPoint& point);

/// Blocks of "sbar u uprime" lines, one block per slope, blank-line separated.
void write_surface_gnuplot(std::ostream& out, const SurfaceSample& surface);

/// One gnuplot index per locus: "Lbar u 0 a" lines.
void write_loci_gnuplot(std::ostream& out, const std::vector<ZeroRadiusLocus>& loci);

}  // namespace rotochain
