#include "rotochain/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "rotochain/bessel.hpp"
#include "rotochain/shape_kernels.hpp"

namespace rotochain {

namespace {

using Fn = std::function<double(double)>;

double step_for(const ShootingOptions& opts, double Lbar) {
  return opts.step > 0.0 ? opts.step : default_step(Lbar);
}

/// u'_a(Lbar) for a single slope, through the same kernel as the batched scans.
double end_slope(double a, double Lbar, double tip, double step) {
  double u = 0.0;
  double p = 0.0;
  kernels::integrate_endpoints_scalar(std::span<const double>(&a, 1), Lbar, tip, step,
                                      std::span<double>(&u, 1), std::span<double>(&p, 1));
  return p;
}

std::vector<double> end_slopes(const std::vector<double>& a, double Lbar, double tip,
                               double step) {
  std::vector<double> u(a.size());
  std::vector<double> p(a.size());
  kernels::integrate_endpoints(a, Lbar, tip, step, u, p);
  return p;
}

/// Illinois-modified regula falsi with a bisection safeguard.
double refine_root(const Fn& f, double lo, double hi, double flo, double fhi, double ftol) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double x = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    // Every fourth iterate bisects so slow one-sided convergence cannot stall.
    if (it % 4 == 3) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (std::fabs(fx) <= ftol || hi - lo <= 4e-16 * std::max(1.0, std::fabs(hi))) return x;
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (lo + hi);
}

/// Golden-section search for the maximum of f on [lo, hi].
std::pair<double, double> golden_max(const Fn& f, double lo, double hi, double xtol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > xtol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

ShootingSolution make_solution(double a_star, const DimensionlessBVP& bvp,
                               const ShootingOptions& opts, bool tangent) {
  ShootingSolution sol;
  sol.a_star = a_star;
  sol.curve = integrate_shape(a_star, bvp.Lbar, opts.tip_offset, step_for(opts, bvp.Lbar));
  const double h = sol.curve.back().uprime;
  if (bvp.rbar == 0.0)
    sol.orientation = -1;  // free end on the positive side of the axis
  else
    sol.orientation = ((bvp.rbar < 0.0) == (h < 0.0)) ? 1 : -1;
  sol.residual = sol.orientation * h - bvp.rbar;
  sol.mode = count_mode(sol.curve);
  sol.tangent = tangent;
  return sol;
}

}  // namespace

double residual(double a, const DimensionlessBVP& bvp, const ShootingOptions& opts) {
  if (!(bvp.Lbar > 0.0)) throw std::invalid_argument("Lbar must be positive");
  return end_slope(a, bvp.Lbar, opts.tip_offset, step_for(opts, bvp.Lbar)) - bvp.rbar;
}

ShootingSolution solve_single(double a_guess, const DimensionlessBVP& bvp,
                              const ShootingOptions& opts) {
  if (!(a_guess > 0.0)) throw std::invalid_argument("initial guess must be positive");
  double a = a_guess;
  double r = residual(a, bvp, opts);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (std::fabs(r) < opts.tol) {
      // residual() works with signed slopes; report the unsigned one.
      ShootingSolution sol = make_solution(std::fabs(a), bvp, opts, false);
      if (a < 0.0) sol.orientation = -sol.orientation;
      return sol;
    }
    const double h = 1e-6 * std::max(1.0, std::fabs(a));
    const double slope = (residual(a + h, bvp, opts) - residual(a - h, bvp, opts)) / (2.0 * h);
    if (!std::isfinite(slope) || std::fabs(slope) < 1e-12)
      throw ShootingFailure("shooting residual is stationary at the current iterate", a, r);
    const double next = a - r / slope;
    if (!std::isfinite(next) || next <= 0.0)
      throw ShootingFailure("Newton step left the admissible range a > 0", a, r);
    a = next;
    r = residual(a, bvp, opts);
  }
  if (std::fabs(r) < opts.tol) return make_solution(a, bvp, opts, false);
  throw ShootingFailure("shooting did not converge", a, r);
}

std::vector<ShootingSolution> enumerate_solutions(const DimensionlessBVP& bvp,
                                                  const EnumerationOptions& opts) {
  if (opts.grid_n < 256) throw std::invalid_argument("grid_n must be at least 256");
  if (!(opts.a_max > 0.0)) throw std::invalid_argument("a_max must be positive");
  if (!(bvp.Lbar > 0.0)) throw std::invalid_argument("Lbar must be positive");
  const ShootingOptions& sopt = opts.shooting;
  const double Lbar = bvp.Lbar;
  const double tip = sopt.tip_offset;
  const double step = step_for(sopt, Lbar);
  const double target = std::fabs(bvp.rbar);
  const bool zero_radius = bvp.rbar == 0.0;

  const Fn slope_at = [&](double a) { return end_slope(a, Lbar, tip, step); };
  // Scan function: u'_a(Lbar) itself when r = 0, else |u'_a(Lbar)| - |rbar|.
  const Fn scan = [&](double a) {
    const double h = slope_at(a);
    return zero_radius ? h : std::fabs(h) - target;
  };

  double a_hi = opts.a_max;
  if (opts.extend_range) {
    // Past a_1 every zero of u' lies beyond Lbar and u'_a(Lbar) > 0.
    for (int guard = 0; guard < 40; ++guard) {
      const ShapeCurve c = integrate_shape(a_hi, Lbar, tip, step);
      if (count_mode(c) == 0 && c.back().uprime > 0.0) break;
      a_hi *= 2.0;
    }
  }

  const double eps = 1e-6 * opts.a_max;
  const auto n = static_cast<std::size_t>(opts.grid_n);
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k)
    grid[k] = eps + (a_hi - eps) * static_cast<double>(k) / static_cast<double>(n - 1);
  std::vector<double> values = end_slopes(grid, Lbar, tip, step);
  for (double& v : values) v = zero_radius ? v : std::fabs(v) - target;

  const double ftol = sopt.tol * 1e-3;
  std::vector<std::pair<double, bool>> roots;  // (a, tangent)
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if ((values[k] < 0.0) != (values[k + 1] < 0.0))
      roots.emplace_back(
          refine_root(scan, grid[k], grid[k + 1], values[k], values[k + 1], ftol), false);
  }

  if (!zero_radius) {
    // Extrema that approach the target without a sign change on the grid:
    // either a tangency or a pair of roots inside a single cell.
    const double xtol = 1e-12 * std::max(1.0, a_hi);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const bool neg_max = values[k] < 0.0 && values[k - 1] < 0.0 && values[k + 1] < 0.0 &&
                           values[k] >= values[k - 1] && values[k] >= values[k + 1];
      const bool pos_min = values[k] >= 0.0 && values[k - 1] >= 0.0 && values[k + 1] >= 0.0 &&
                           values[k] <= values[k - 1] && values[k] <= values[k + 1];
      if (!neg_max && !pos_min) continue;
      const double sgn = neg_max ? 1.0 : -1.0;
      const Fn oriented = [&](double a) { return sgn * scan(a); };
      const auto [a_ext, f_ext] = golden_max(oriented, grid[k - 1], grid[k + 1], xtol);
      const double extremum = sgn * f_ext;
      if (std::fabs(extremum) <= sopt.tol) {
        roots.emplace_back(a_ext, true);
      } else if ((extremum < 0.0) != (values[k] < 0.0)) {
        roots.emplace_back(refine_root(scan, grid[k - 1], a_ext, values[k - 1], extremum, ftol),
                           false);
        roots.emplace_back(refine_root(scan, a_ext, grid[k + 1], extremum, values[k + 1], ftol),
                           false);
      }
    }

    // Mode-0 branch beyond the scanned range: |u'_a(Lbar)| grows without bound.
    if (opts.extend_range && values.back() < 0.0) {
      double lo = a_hi;
      double flo = values.back();
      double hi = 2.0 * a_hi;
      double fhi = scan(hi);
      for (int guard = 0; fhi < 0.0 && guard < 40; ++guard) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = scan(hi);
      }
      if (fhi >= 0.0) roots.emplace_back(refine_root(scan, lo, hi, flo, fhi, ftol), false);
    }
  }

  std::sort(roots.begin(), roots.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<ShootingSolution> out;
  for (const auto& [a, tangent] : roots) {
    if (!out.empty() && std::fabs(out.back().a_star - a) <= 1e-6) {
      out.back().tangent = out.back().tangent || tangent;
      continue;
    }
    out.push_back(make_solution(a, bvp, sopt, tangent));
  }
  return out;
}

double nth_zero(double a, int i, double sbar_max, double tip_offset) {
  if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
  if (i < 1) throw std::invalid_argument("zero index must be >= 1");
  const ShapeCurve curve = integrate_shape(a, sbar_max, tip_offset);
  const double tol = 1e-8 * std::max(1.0, sbar_max);
  int seen = 0;
  for (double z : uprime_zeros(curve)) {
    if (z <= tol) continue;
    if (++seen == i) return z;
  }
  throw ZeroNotFound("u' has fewer than " + std::to_string(i) + " zeros before s-bar = " +
                     std::to_string(sbar_max));
}

CountingTable build_counting_table(double Lbar, double a_max) {
  if (!(Lbar > 0.0)) throw std::invalid_argument("Lbar must be positive");
  CountingTable table;
  table.Lbar = Lbar;
  table.n = branches_below(Lbar);
  const double step = default_step(Lbar);

  // z_i(a) < Lbar  <=>  more than i-1 zeros of u'_a inside (0, Lbar).
  const auto has_zeros = [&](double a, int i) {
    return count_mode(integrate_shape(a, Lbar, 0.0, step)) >= i;
  };
  for (int i = 1; i <= table.n; ++i) {
    double lo = 1e-9;
    double hi = std::max(a_max, table.a_seq.empty() ? a_max : table.a_seq.back());
    if (!has_zeros(lo, i)) {
      table.a_seq.push_back(lo);  // lambda_i within rounding of Lbar
      continue;
    }
    for (int guard = 0; guard < 40 && has_zeros(hi, i); ++guard) hi *= 2.0;
    while (hi - lo > 1e-13 * hi) {
      const double mid = 0.5 * (lo + hi);
      (has_zeros(mid, i) ? lo : hi) = mid;
    }
    // Polish on u'_a(Lbar) = 0, which changes sign across the bracket.
    const double flo = end_slope(lo, Lbar, 0.0, step);
    const double fhi = end_slope(hi, Lbar, 0.0, step);
    double root = 0.5 * (lo + hi);
    if ((flo < 0.0) != (fhi < 0.0))
      root = refine_root([&](double a) { return end_slope(a, Lbar, 0.0, step); }, lo, hi, flo,
                         fhi, 1e-15);
    table.a_seq.push_back(root);
  }
  for (std::size_t k = 1; k < table.a_seq.size(); ++k)
    if (!(table.a_seq[k] < table.a_seq[k - 1])) table.a_decreasing = false;

  const Fn magnitude = [&](double a) { return std::fabs(end_slope(a, Lbar, 0.0, step)); };
  constexpr std::size_t kDense = 129;
  for (int i = 1; i <= table.n; ++i) {
    const double upper = table.a_seq[static_cast<std::size_t>(i - 1)];
    const double lower =
        i < table.n ? table.a_seq[static_cast<std::size_t>(i)] : 1e-9 * upper;
    std::vector<double> dense(kDense);
    for (std::size_t k = 0; k < kDense; ++k)
      dense[k] = lower + (upper - lower) * static_cast<double>(k + 1) / (kDense + 1);
    std::vector<double> vals = end_slopes(dense, Lbar, 0.0, step);
    std::size_t best = 0;
    for (std::size_t k = 0; k < kDense; ++k) {
      vals[k] = std::fabs(vals[k]);
      if (vals[k] > vals[best]) best = k;
    }
    const double lo = best == 0 ? lower : dense[best - 1];
    const double hi = best + 1 == kDense ? upper : dense[best + 1];
    const auto [arg, val] = golden_max(magnitude, lo, hi, 1e-12 * std::max(1.0, upper));
    table.argmax_seq.push_back(arg);
    table.rbar_seq.push_back(val);
    if (val + 1e-12 < vals[best]) table.unimodal_consistent = false;
  }
  for (std::size_t k = 1; k < table.rbar_seq.size(); ++k)
    if (!(table.rbar_seq[k] < table.rbar_seq[k - 1])) table.rbar_decreasing = false;
  return table;
}

CountPrediction predict_solution_count(const CountingTable& table, double rbar, double tol) {
  const double r = std::fabs(rbar);
  const int n = table.n;
  CountPrediction p;
  if (r == 0.0) return {CountCase::zero_radius, 0, n};
  if (n == 0) return {CountCase::above_first, 0, 1};
  for (int i = 1; i <= n; ++i)
    if (std::fabs(r - table.rbar_seq[static_cast<std::size_t>(i - 1)]) <= tol)
      return {CountCase::tangent, i, 2 * i};
  if (r > table.rbar_seq.front()) return {CountCase::above_first, 0, 1};
  if (r < table.rbar_seq.back()) return {CountCase::below_last, n, 2 * n + 1};
  for (int i = 1; i < n; ++i)
    if (r < table.rbar_seq[static_cast<std::size_t>(i - 1)] &&
        r > table.rbar_seq[static_cast<std::size_t>(i)])
      return {CountCase::between, i, 2 * i + 1};
  // Only reachable when the sequence is not decreasing.
  p.which = CountCase::between;
  p.count = -1;
  return p;
}

std::vector<int> expected_modes(const CountPrediction& prediction, int n) {
  std::vector<int> modes;
  switch (prediction.which) {
    case CountCase::zero_radius:
      for (int k = 0; k < n; ++k) modes.push_back(k);
      break;
    case CountCase::above_first:
      modes.push_back(0);
      break;
    case CountCase::below_last:
    case CountCase::between:
      modes.push_back(0);
      for (int k = 1; k <= prediction.index; ++k) modes.insert(modes.end(), {k, k});
      break;
    case CountCase::tangent:
      modes.push_back(0);
      for (int k = 1; k < prediction.index; ++k) modes.insert(modes.end(), {k, k});
      modes.push_back(prediction.index);
      break;
  }
  return modes;
}

}  // namespace rotochain
