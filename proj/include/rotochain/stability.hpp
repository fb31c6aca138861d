#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rotochain/chain_model.hpp"
#include "rotochain/lumped.hpp"

namespace rotochain {

/// Central-difference Jacobian of the lumped dynamics at `y`. Position columns
/// use h = 1e-7 L and velocity columns h = 1e-7 sqrt(g L), both times `step_scale`.
Eigen::MatrixXd jacobian(const LumpedChain& chain, const LumpedState& y, double step_scale = 1.0);

/// Largest real part of the eigenvalues of a square matrix.
double lambda_max(const Eigen::MatrixXd& J);

/// Smallest nonzero |Im| among the eigenvalues of J [rad/s]: the slowest
/// whirl of the chain about its equilibrium.
double slowest_frequency(const Eigen::MatrixXd& J);

/// Threshold below which |lambda_max| is reported as marginal [1/s].
inline constexpr double kMarginalBand = 1e-3;

enum class Stability { stable, marginal, unstable, invalid };
const char* stability_name(Stability s);

struct StabilityResult {
  ParamPoint point;
  double lambda_max = 0.0;
  bool aero_enabled = false;
  double equilibrium_residual = 0.0;
  bool valid = false;
  std::string error;  ///< why the cell is invalid, empty otherwise

  [[nodiscard]] Stability classify() const;
};

/// Equilibrium, Jacobian and lambda_max at one point. Failures are recorded
/// in the result rather than thrown.
StabilityResult analyze_point(const ParamPoint& point, const ChainParams& params,
                              const LumpedChain& chain_template);

/// Cell-centred grid over (a_lo, a_hi) x (Lbar_lo, Lbar_hi).
struct GridSpec {
  double a_lo = 0.0, a_hi = 5.0;
  double Lbar_lo = 0.0, Lbar_hi = 40.0;
  int na = 100;
  int nL = 160;

  [[nodiscard]] double a_at(int i) const { return a_lo + (i + 0.5) * (a_hi - a_lo) / na; }
  [[nodiscard]] double Lbar_at(int j) const {
    return Lbar_lo + (j + 0.5) * (Lbar_hi - Lbar_lo) / nL;
  }
  void validate() const;
};

class StabilityMap {
 public:
  StabilityMap() = default;
  StabilityMap(GridSpec spec, bool aero, std::vector<StabilityResult> cells);

  [[nodiscard]] const GridSpec& spec() const { return spec_; }
  [[nodiscard]] bool aero_enabled() const { return aero_; }
  /// Row i is a fixed a, column j a fixed Lbar.
  [[nodiscard]] const StabilityResult& at(int i, int j) const;
  [[nodiscard]] const std::vector<StabilityResult>& cells() const { return cells_; }

  /// Bilinear interpolation between cell centres, clamped to the outer
  /// centres. Throws std::domain_error if a contributing cell is invalid.
  [[nodiscard]] double lookup(const ParamPoint& p) const;
  /// Nearest cell to p.
  [[nodiscard]] const StabilityResult& nearest(const ParamPoint& p) const;

  [[nodiscard]] double invalid_fraction() const;
  /// Minimum lambda_max over valid cells.
  [[nodiscard]] double min_lambda() const;

  void write_csv(std::ostream& out) const;
  void write_gnuplot(std::ostream& out) const;
  /// Reads what write_csv wrote; the grid is recovered from the cell centres.
  static StabilityMap read_csv(std::istream& in, bool aero);

 private:
  GridSpec spec_;
  bool aero_ = false;
  std::vector<StabilityResult> cells_;
};

/// Amplitude of a deviation from equilibrium in the slow (pendulum) modal
/// coordinates of the linearization. Spring modes above the widest spectral
/// gap are dropped: they are barely damped and only add beating noise.
class ModalEnvelope {
 public:
  ModalEnvelope(const LumpedChain& chain, const LumpedState& y_eq);
  [[nodiscard]] double operator()(const LumpedState& y) const;
  /// Envelope of a deviation vector (y - y_eq) given directly.
  [[nodiscard]] double of_deviation(const LumpedState& d) const;
  [[nodiscard]] double cutoff() const { return cutoff_; }
  [[nodiscard]] int slow_modes() const { return static_cast<int>(slow_.size()); }

 private:
  LumpedState y_eq_;
  Eigen::MatrixXcd modal_rows_;  ///< rows of V^{-1} for the slow modes
  std::vector<int> slow_;
  double cutoff_ = 0.0;
};

struct PerturbationOptions {
  double tip_displacement = 0.01;            ///< [m]
  Vec3 axis = Vec3(0.0, 1.0, 1.0);           ///< rotation axis of the swing
  bool tip_only = true;                      ///< swing the end mass only, else the whole chain
  double duration = 3.5;                     ///< [s]
  double dt = 0.0;                           ///< 0: recommended_dt
  double sample_every = 0.01;                ///< [s]
  /// Also run the mirrored perturbation and track half the difference of the
  /// two runs, which cancels the even-order nonlinear distortion.
  bool antisymmetric = true;
};

struct PerturbationResponse {
  std::vector<double> time;
  std::vector<double> envelope;
  double early = 0.0;  ///< mean envelope over [0, 1] s
  double late = 0.0;   ///< mean envelope over [2.5, 3.5] s
  [[nodiscard]] double ratio() const { return late / early; }
  [[nodiscard]] bool decays() const { return late < early; }
};

/// Perturbs the equilibrium, simulates it at constant control and tracks the
/// modal envelope.
PerturbationResponse perturbation_response(const Equilibrium& eq, const PerturbationOptions& opts = {});

/// For each target a, the centre cell of the widest run of `stable` (or
/// unstable) cells along the nearest map row, provided the run reaches at
/// least `margin` in Lbar past its centre on both sides. Rows without such a
/// run are skipped.
std::vector<ParamPoint> probe_points(const StabilityMap& map, bool stable,
                                     const std::vector<double>& a_targets, double margin = 0.5);

/// Full map, parallel over cells.
StabilityMap stability_map(const GridSpec& spec, const ChainParams& params, bool aero, int N = 10);

}  // namespace rotochain
