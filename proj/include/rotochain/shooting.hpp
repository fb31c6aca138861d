#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rotochain/chain_model.hpp"
#include "rotochain/error.hpp"
#include "rotochain/shape_ode.hpp"

namespace rotochain {

/// A solution of u(0) = 0, u'(Lbar) = rbar.
///
/// The integration always starts from the non-negative slope `a_star`; the
/// solution of the boundary value problem is `orientation * u_{a_star}`.
/// Mirrored solutions describe the same physical configuration.
struct ShootingSolution {
  double a_star = 0.0;
  int orientation = 1;     ///< +1 or -1
  double residual = 0.0;   ///< orientation * u'(Lbar) - rbar
  int mode = 0;
  bool tangent = false;    ///< double root |u'_a(Lbar)| = |rbar| at a local extremum
  ShapeCurve curve;        ///< integrated from a_star (unsigned)
};

/// Raised by solve_single when the Newton iteration does not converge.
class ShootingFailure : public NumericalError {
 public:
  ShootingFailure(const std::string& what, double last_a, double last_residual)
      : NumericalError(what), last_a_(last_a), last_residual_(last_residual) {}
  [[nodiscard]] double last_a() const { return last_a_; }
  [[nodiscard]] double last_residual() const { return last_residual_; }

 private:
  double last_a_;
  double last_residual_;
};

/// Raised by nth_zero when u' has fewer than i zeros before s-bar max.
class ZeroNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ShootingOptions {
  double tol = 1e-9;
  int max_iterations = 50;
  double tip_offset = 0.0;
  double step = 0.0;  ///< 0 selects default_step(Lbar)
};

/// u'_a(Lbar) - rbar, integrating from slope a (any sign).
double residual(double a, const DimensionlessBVP& bvp, const ShootingOptions& opts = {});

/// Newton iteration on residual() with a central-difference derivative.
ShootingSolution solve_single(double a_guess, const DimensionlessBVP& bvp,
                              const ShootingOptions& opts = {});

struct EnumerationOptions {
  double a_max = 5.0;
  int grid_n = 2048;
  ShootingOptions shooting{};
  /// Widen the scan beyond a_max when solutions provably lie above it
  /// (mode-0 branch with |rbar| > |u'_{a_max}(Lbar)|, or a_max < a_1).
  bool extend_range = true;
};

/// All distinct solutions, sorted by a_star descending.
std::vector<ShootingSolution> enumerate_solutions(const DimensionlessBVP& bvp,
                                                  const EnumerationOptions& opts = {});

/// i-th zero of u'_a on (0, sbar_max]. Throws ZeroNotFound if absent.
double nth_zero(double a, int i, double sbar_max, double tip_offset = 0.0);

/// Thresholds of the solution-count law at fixed Lbar.
struct CountingTable {
  double Lbar = 0.0;
  int n = 0;                      ///< largest i with lambda_i <= Lbar
  std::vector<double> a_seq;      ///< a_1 > ... > a_n, u'_{a_i}(Lbar) = 0
  std::vector<double> rbar_seq;   ///< rbar_i = max |u'_a(Lbar)| between a_{i+1} and a_i
  std::vector<double> argmax_seq; ///< a_i^* attaining rbar_i
  bool a_decreasing = true;
  bool rbar_decreasing = true;    ///< checked, not assumed
  bool unimodal_consistent = true;///< golden-section max >= dense-grid max
};

CountingTable build_counting_table(double Lbar, double a_max = 5.0);

enum class CountCase {
  zero_radius,      ///< |rbar| = 0: n solutions
  below_last,       ///< 0 < |rbar| < rbar_n: 2n + 1
  between,          ///< rbar_{i+1} < |rbar| < rbar_i: 2i + 1
  tangent,          ///< |rbar| = rbar_i: 2i
  above_first,      ///< |rbar| > rbar_1: 1
};

struct CountPrediction {
  CountCase which = CountCase::zero_radius;
  int index = 0;  ///< i for the between/tangent cases
  int count = 0;
};

/// Solution count predicted from the table. |rbar| within `tol` of some
/// rbar_i is treated as the tangent case.
CountPrediction predict_solution_count(const CountingTable& table, double rbar,
                                       double tol = 1e-9);

/// Mode labels expected for the predicted case, ordered by descending a.
std::vector<int> expected_modes(const CountPrediction& prediction, int n);

}  // namespace rotochain
