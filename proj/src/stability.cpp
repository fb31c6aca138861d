#include "rotochain/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "rotochain/error.hpp"
#include "rotochain/parallel.hpp"

namespace rotochain {

Eigen::MatrixXd jacobian(const LumpedChain& chain, const LumpedState& y, double step_scale) {
  if (!(step_scale > 0.0)) throw std::invalid_argument("jacobian step scale must be positive");
  const Eigen::Index n = y.size();
  if (n != 6 * chain.N) throw std::invalid_argument("state size does not match chain");
  const double L = chain.length();
  const double h_pos = 1e-7 * L * step_scale;
  const double h_vel = 1e-7 * std::sqrt(chain.gravity * L) * step_scale;

  Eigen::MatrixXd J(n, n);
  LumpedState yp = y, ym = y, fp(n), fm(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double h = (c % 6) < 3 ? h_pos : h_vel;
    yp[c] = y[c] + h;
    ym[c] = y[c] - h;
    dynamics(yp, chain, fp);
    dynamics(ym, chain, fm);
    // The representable step, not 2h: the rounding of y +- h is ~1e-9 of h here.
    J.col(c) = (fp - fm) / (yp[c] - ym[c]);
    yp[c] = y[c];
    ym[c] = y[c];
  }
  return J;
}

double lambda_max(const Eigen::MatrixXd& J) {
  if (J.rows() != J.cols() || J.rows() == 0) throw std::invalid_argument("lambda_max needs a square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(J, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  return solver.eigenvalues().real().maxCoeff();
}

double slowest_frequency(const Eigen::MatrixXd& J) {
  if (J.rows() != J.cols() || J.rows() == 0) throw std::invalid_argument("slowest_frequency needs a square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(J, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  const Eigen::VectorXd im = solver.eigenvalues().imag().cwiseAbs();
  const double floor = 1e-9 * std::max(1.0, im.maxCoeff());
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < im.size(); ++k)
    if (im[k] > floor) best = std::min(best, im[k]);
  return best;
}

const char* stability_name(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::marginal: return "marginal";
    case Stability::unstable: return "unstable";
    case Stability::invalid: return "invalid";
  }
  return "?";
}

Stability StabilityResult::classify() const {
  if (!valid) return Stability::invalid;
  if (std::fabs(lambda_max) < kMarginalBand) return Stability::marginal;
  return lambda_max < 0.0 ? Stability::stable : Stability::unstable;
}

StabilityResult analyze_point(const ParamPoint& point, const ChainParams& params,
                              const LumpedChain& chain_template) {
  StabilityResult r;
  r.point = point;
  r.aero_enabled = chain_template.aero_enabled;
  try {
    const Equilibrium eq = equilibrium_shape(point, params, chain_template);
    r.equilibrium_residual = eq.residual;
    const double m = *std::min_element(eq.chain.mass.begin(), eq.chain.mass.end());
    if (!(eq.residual <= 1e-6 * m * params.gravity)) {
      r.error = "equilibrium residual above tolerance";
      return r;
    }
    r.lambda_max = lambda_max(jacobian(eq.chain, eq.state));
    r.valid = std::isfinite(r.lambda_max);
    if (!r.valid) r.error = "non-finite eigenvalue";
  } catch (const std::exception& e) {
    r.error = e.what();
    r.valid = false;
  }
  return r;
}

void GridSpec::validate() const {
  if (na < 2 || nL < 2) throw std::invalid_argument("stability grid needs at least 2x2 cells");
  if (!(a_hi > a_lo) || !(Lbar_hi > Lbar_lo) || a_lo < 0.0 || Lbar_lo < 0.0)
    throw std::invalid_argument("stability grid ranges are invalid");
}

StabilityMap::StabilityMap(GridSpec spec, bool aero, std::vector<StabilityResult> cells)
    : spec_(spec), aero_(aero), cells_(std::move(cells)) {
  spec_.validate();
  if (cells_.size() != static_cast<std::size_t>(spec_.na) * static_cast<std::size_t>(spec_.nL))
    throw std::invalid_argument("stability map cell count does not match grid");
}

const StabilityResult& StabilityMap::at(int i, int j) const {
  if (i < 0 || i >= spec_.na || j < 0 || j >= spec_.nL) throw std::out_of_range("stability map index");
  return cells_[static_cast<std::size_t>(i) * static_cast<std::size_t>(spec_.nL) +
                static_cast<std::size_t>(j)];
}

namespace {

// Fractional cell-centre coordinate, clamped to [0, n-1].
double centre_coord(double x, double lo, double hi, int n) {
  const double c = (x - lo) / (hi - lo) * n - 0.5;
  return std::clamp(c, 0.0, static_cast<double>(n - 1));
}

}  // namespace

double StabilityMap::lookup(const ParamPoint& p) const {
  const double ci = centre_coord(p.a, spec_.a_lo, spec_.a_hi, spec_.na);
  const double cj = centre_coord(p.Lbar, spec_.Lbar_lo, spec_.Lbar_hi, spec_.nL);
  const int i0 = std::min(static_cast<int>(ci), spec_.na - 2);
  const int j0 = std::min(static_cast<int>(cj), spec_.nL - 2);
  const double ti = ci - i0;
  const double tj = cj - j0;
  double value = 0.0;
  for (int di = 0; di <= 1; ++di) {
    for (int dj = 0; dj <= 1; ++dj) {
      const double w = (di ? ti : 1.0 - ti) * (dj ? tj : 1.0 - tj);
      if (w == 0.0) continue;
      const StabilityResult& c = at(i0 + di, j0 + dj);
      if (!c.valid)
        throw std::domain_error("stability lookup touches an invalid cell");
      value += w * c.lambda_max;
    }
  }
  return value;
}

const StabilityResult& StabilityMap::nearest(const ParamPoint& p) const {
  const double ci = centre_coord(p.a, spec_.a_lo, spec_.a_hi, spec_.na);
  const double cj = centre_coord(p.Lbar, spec_.Lbar_lo, spec_.Lbar_hi, spec_.nL);
  return at(static_cast<int>(std::lround(ci)), static_cast<int>(std::lround(cj)));
}

double StabilityMap::invalid_fraction() const {
  if (cells_.empty()) return 0.0;
  const auto bad = std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return !c.valid; });
  return static_cast<double>(bad) / static_cast<double>(cells_.size());
}

double StabilityMap::min_lambda() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : cells_)
    if (c.valid) m = std::min(m, c.lambda_max);
  return m;
}

void StabilityMap::write_csv(std::ostream& out) const {
  out << "a,Lbar,lambda_max,valid\n" << std::setprecision(12);
  for (const auto& c : cells_)
    out << c.point.a << ',' << c.point.Lbar << ',' << (c.valid ? c.lambda_max : std::nan(""))
        << ',' << (c.valid ? 1 : 0) << '\n';
}

StabilityMap StabilityMap::read_csv(std::istream& in, bool aero) {
  std::vector<StabilityResult> cells;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("a,", 0) == 0) continue;
    std::istringstream row(line);
    std::string field[4];
    for (auto& f : field)
      if (!std::getline(row, f, ',')) throw std::invalid_argument("stability csv line " + std::to_string(lineno) + ": expected 4 fields");
    StabilityResult c;
    c.aero_enabled = aero;
    try {
      c.point = {std::stod(field[0]), std::stod(field[1])};
      c.valid = std::stoi(field[3]) != 0;
      c.lambda_max = c.valid ? std::stod(field[2]) : std::nan("");
    } catch (const std::logic_error&) {
      throw std::invalid_argument("stability csv line " + std::to_string(lineno) + ": not a number");
    }
    if (!c.valid) c.error = "invalid in source file";
    cells.push_back(c);
  }
  if (cells.empty()) throw std::invalid_argument("stability csv has no cells");
  // Cells are row-major with a fixed along each row.
  int nL = 0;
  while (nL < static_cast<int>(cells.size()) && cells[nL].point.a == cells.front().point.a) ++nL;
  const int na = static_cast<int>(cells.size()) / nL;
  if (nL < 2 || na < 2 || na * nL != static_cast<int>(cells.size()))
    throw std::invalid_argument("stability csv is not a full grid");
  GridSpec spec;
  spec.na = na;
  spec.nL = nL;
  const double da = cells[nL].point.a - cells[0].point.a;
  const double dL = cells[1].point.Lbar - cells[0].point.Lbar;
  spec.a_lo = cells.front().point.a - 0.5 * da;
  spec.a_hi = spec.a_lo + na * da;
  spec.Lbar_lo = cells.front().point.Lbar - 0.5 * dL;
  spec.Lbar_hi = spec.Lbar_lo + nL * dL;
  if (std::fabs(spec.a_lo) < 1e-9 * da) spec.a_lo = 0.0;
  if (std::fabs(spec.Lbar_lo) < 1e-9 * dL) spec.Lbar_lo = 0.0;
  return StabilityMap(spec, aero, std::move(cells));
}

void StabilityMap::write_gnuplot(std::ostream& out) const {
  out << "# pm3d block: a Lbar lambda_max (invalid cells as NaN)\n" << std::setprecision(10);
  for (int i = 0; i < spec_.na; ++i) {
    for (int j = 0; j < spec_.nL; ++j) {
      const auto& c = at(i, j);
      out << c.point.a << ' ' << c.point.Lbar << ' ';
      if (c.valid) out << c.lambda_max; else out << "NaN";
      out << '\n';
    }
    out << '\n';
  }
}

ModalEnvelope::ModalEnvelope(const LumpedChain& chain, const LumpedState& y_eq) : y_eq_(y_eq) {
  const Eigen::MatrixXd J = jacobian(chain, y_eq);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(J, true);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  const Eigen::VectorXcd lambda = solver.eigenvalues();
  const Eigen::Index n = lambda.size();

  std::vector<double> freq;
  for (Eigen::Index k = 0; k < n; ++k) freq.push_back(std::fabs(lambda[k].imag()));
  std::vector<double> sorted = freq;
  std::sort(sorted.begin(), sorted.end());
  double best = 0.0;
  cutoff_ = sorted.back() + 1.0;
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k - 1] <= 0.0) continue;
    const double gap = sorted[k] / sorted[k - 1];
    if (gap > best) {
      best = gap;
      cutoff_ = std::sqrt(sorted[k] * sorted[k - 1]);
    }
  }
  for (Eigen::Index k = 0; k < n; ++k)
    if (freq[static_cast<std::size_t>(k)] < cutoff_) slow_.push_back(static_cast<int>(k));

  const Eigen::MatrixXcd inverse = solver.eigenvectors().partialPivLu().inverse();
  modal_rows_.resize(static_cast<Eigen::Index>(slow_.size()), n);
  for (std::size_t k = 0; k < slow_.size(); ++k)
    modal_rows_.row(static_cast<Eigen::Index>(k)) = inverse.row(slow_[k]);
}

double ModalEnvelope::operator()(const LumpedState& y) const { return of_deviation(y - y_eq_); }

double ModalEnvelope::of_deviation(const LumpedState& d) const {
  return (modal_rows_ * d.cast<std::complex<double>>()).norm();
}

PerturbationResponse perturbation_response(const Equilibrium& eq, const PerturbationOptions& opts) {
  const ModalEnvelope envelope(eq.chain, eq.state);
  SimulationOptions sim;
  sim.dt = opts.dt > 0.0 ? opts.dt : recommended_dt(eq.chain);
  sim.duration = opts.duration;
  sim.sample_every = opts.sample_every;
  const ControlSchedule hold = ControlSchedule::constant(eq.attachment_radius, eq.chain.omega);
  const auto run = [&](double displacement) {
    const LumpedState y0 = opts.tip_only ? perturb_tip(eq.state, eq.chain, displacement, opts.axis)
                                         : perturb_rigidly(eq.state, eq.chain, displacement, opts.axis);
    return simulate(y0, eq.chain, hold, sim);
  };
  const Trajectory traj = run(opts.tip_displacement);
  Trajectory mirror;
  if (opts.antisymmetric) mirror = run(-opts.tip_displacement);

  PerturbationResponse out;
  double early = 0.0, late = 0.0;
  int n_early = 0, n_late = 0;
  for (std::size_t k = 0; k < traj.time.size(); ++k) {
    const double t = traj.time[k];
    const double e = opts.antisymmetric
                         ? envelope.of_deviation(0.5 * (traj.states[k] - mirror.states[k]))
                         : envelope(traj.states[k]);
    out.time.push_back(t);
    out.envelope.push_back(e);
    if (t <= 1.0 + 1e-9) { early += e; ++n_early; }
    if (t >= 2.5 - 1e-9 && t <= 3.5 + 1e-9) { late += e; ++n_late; }
  }
  if (n_early == 0 || n_late == 0) throw std::invalid_argument("perturbation run must cover 3.5 s");
  out.early = early / n_early;
  out.late = late / n_late;
  return out;
}

std::vector<ParamPoint> probe_points(const StabilityMap& map, bool stable,
                                     const std::vector<double>& a_targets, double margin) {
  const GridSpec& g = map.spec();
  const double dL = (g.Lbar_hi - g.Lbar_lo) / g.nL;
  std::vector<ParamPoint> out;
  for (double a : a_targets) {
    const int i = static_cast<int>(std::lround(centre_coord(a, g.a_lo, g.a_hi, g.na)));
    int best_len = 0, best_start = -1;
    int j = 0;
    while (j < g.nL) {
      const auto wanted = [&](int jj) {
        const auto& c = map.at(i, jj);
        return c.valid && (stable ? c.lambda_max < 0.0 : c.lambda_max > 0.0);
      };
      if (!wanted(j)) { ++j; continue; }
      int k = j;
      while (k < g.nL && wanted(k)) ++k;
      // Runs touching the grid edge have an unknown extent on that side.
      if (j > 0 && k < g.nL && k - j > best_len) {
        best_len = k - j;
        best_start = j;
      }
      j = k;
    }
    if (best_start < 0 || 0.5 * best_len * dL < margin) continue;
    const int centre = best_start + best_len / 2;
    out.push_back(map.at(i, centre).point);
  }
  return out;
}

StabilityMap stability_map(const GridSpec& spec, const ChainParams& params, bool aero, int N) {
  spec.validate();
  const LumpedChain tmpl = make_lumped_chain(params, N, aero);
  std::vector<StabilityResult> cells(static_cast<std::size_t>(spec.na) * static_cast<std::size_t>(spec.nL));
  parallel_for(cells.size(), [&](std::size_t k) {
    const int i = static_cast<int>(k / static_cast<std::size_t>(spec.nL));
    const int j = static_cast<int>(k % static_cast<std::size_t>(spec.nL));
    cells[k] = analyze_point({spec.a_at(i), spec.Lbar_at(j)}, params, tmpl);
  });
  return StabilityMap(spec, aero, std::move(cells));
}

}  // namespace rotochain
