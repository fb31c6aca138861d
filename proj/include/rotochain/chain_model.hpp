#pragma once

#include <filesystem>
#include <string>

namespace rotochain {

/// Physical description of the chain (SI units).
struct ChainParams {
  double length = 0.76;            ///< L [m]
  double linear_density = 0.13;    ///< mu [kg/m]
  double gravity = 9.81;           ///< g [m/s^2]
  double tip_mass = 0.0;           ///< M [kg]
  double diameter = 0.001;         ///< d [m], aerodynamics only

  /// Throws std::invalid_argument if any field is out of range.
  void validate() const;
};

/// Attachment radius and angular speed of the held end.
struct ControlInput {
  double radius = 0.0;         ///< r >= 0 [m]
  double angular_speed = 0.0;  ///< omega >= 0 [rad/s]
};

/// Boundary data of the dimensionless shape problem: u(0)=0, u'(Lbar)=rbar.
struct DimensionlessBVP {
  double rbar = 0.0;  ///< -r omega^2 / g, never positive
  double Lbar = 0.0;  ///< L omega^2 / g
};

/// Bounds of the parameter box (0, a_max) x (0, Lbar_max).
struct ParamBounds {
  double a_max = 5.0;
  double Lbar_max = 40.0;
};

/// A configuration coordinate: initial slope u'(0) and dimensionless length.
struct ParamPoint {
  double a = 0.0;
  double Lbar = 0.0;

  [[nodiscard]] bool inside(const ParamBounds& bounds) const {
    return a > 0.0 && a < bounds.a_max && Lbar > 0.0 && Lbar < bounds.Lbar_max;
  }
  friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
};

/// Angular speed and free-end radius realising a parameter point.
struct DimensionalPoint {
  double angular_speed = 0.0;   ///< omega [rad/s]
  double free_end_radius = 0.0; ///< rho_0 = a g / omega^2 [m], magnitude
};

DimensionlessBVP nondimensionalize(const ChainParams& params, const ControlInput& control);

DimensionalPoint dimensionalize(const ChainParams& params, const ParamPoint& point);

/// omega = sqrt(Lbar g / L).
double angular_speed_for(const ChainParams& params, double Lbar);

/// Lbar = L omega^2 / g.
double dimensionless_length(const ChainParams& params, double angular_speed);

/// M omega^2 / (mu g): the shift of the s-bar origin induced by a tip mass.
double tip_offset(const ChainParams& params, double angular_speed);

/// Reads keys length_m, linear_density_kg_per_m, gravity_m_per_s2,
/// tip_mass_kg (default 0) and diameter_m (default 0.001).
ChainParams load_chain_params(const std::filesystem::path& path);
ChainParams parse_chain_params(const std::string& json_text);

}  // namespace rotochain
