#include "rotochain/config_space.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "rotochain/parallel.hpp"
#include "rotochain/shooting.hpp"

namespace rotochain {

std::vector<double> critical_speeds(const ChainParams& params, int n) {
  params.validate();
  if (n < 1) throw std::invalid_argument("need at least one critical speed");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  const double root = std::sqrt(params.gravity / params.length);
  for (int i = 1; i <= n; ++i) out.push_back(0.5 * bessel_j0_zero(i) * root);
  return out;
}

SurfaceSample sample_surface(double a_lo, double a_hi, double Lbar_max, int na, int ns) {
  if (na < 2 || ns < 2) throw std::invalid_argument("surface needs na, ns >= 2");
  if (!(a_lo > 0.0 && a_hi > a_lo)) throw std::invalid_argument("bad slope range");
  if (!(Lbar_max > 0.0)) throw std::invalid_argument("Lbar_max must be positive");
  SurfaceSample surf;
  for (int i = 0; i < na; ++i) surf.a_values.push_back(a_lo + (a_hi - a_lo) * i / (na - 1));
  for (int k = 0; k < ns; ++k) surf.sbar_values.push_back(Lbar_max * k / (ns - 1));
  surf.rows.resize(static_cast<std::size_t>(na));
  parallel_for(static_cast<std::size_t>(na), [&](std::size_t i) {
    const ShapeCurve curve = integrate_shape(surf.a_values[i], Lbar_max);
    auto& row = surf.rows[i];
    row.reserve(surf.sbar_values.size());
    for (double s : surf.sbar_values) row.push_back(curve.interpolate(s));
  });
  return surf;
}

ZeroRadiusLocus zero_radius_locus(int i, const std::vector<double>& a_samples, double Lbar_max) {
  if (i < 1) throw std::invalid_argument("locus index must be >= 1");
  ZeroRadiusLocus locus;
  locus.index = i;
  for (double a : a_samples) {
    try {
      const double z = nth_zero(a, i, Lbar_max);
      const ShapeCurve curve = integrate_shape(a, Lbar_max);
      locus.points.push_back({a, z, curve.interpolate(z).u});
    } catch (const ZeroNotFound&) {
      locus.skipped.push_back(a);
    }
  }
  return locus;
}

int classify_mode(const ParamPoint& point) {
  if (!(point.a > 0.0 && point.Lbar > 0.0))
    throw std::invalid_argument("parameter point must have a > 0 and Lbar > 0");
  return count_mode(integrate_shape(point.a, point.Lbar));
}

void write_surface_gnuplot(std::ostream& out, const SurfaceSample& surface) {
  out << "# sbar u uprime  (one block per a; a in the block header)\n" << std::setprecision(12);
  for (std::size_t i = 0; i < surface.rows.size(); ++i) {
    out << "# a = " << surface.a_values[i] << '\n';
    for (const auto& s : surface.rows[i]) out << s.sbar << ' ' << s.u << ' ' << s.uprime << '\n';
    out << '\n';
  }
}

void write_loci_gnuplot(std::ostream& out, const std::vector<ZeroRadiusLocus>& loci) {
  out << "# Lbar u 0 a  (one gnuplot index per locus)\n" << std::setprecision(12);
  for (const auto& locus : loci) {
    out << "# locus " << locus.index << '\n';
    for (const auto& p : locus.points) out << p.Lbar << ' ' << p.u << " 0 " << p.a << '\n';
    out << "\n\n";
  }
}

}  // namespace rotochain
