#include "rotochain/chain_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rotochain {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void ChainParams::validate() const {
  if (!positive_finite(length)) throw std::invalid_argument("chain length must be positive");
  if (!positive_finite(linear_density))
    throw std::invalid_argument("linear density must be positive");
  if (!positive_finite(gravity)) throw std::invalid_argument("gravity must be positive");
  if (!std::isfinite(tip_mass) || tip_mass < 0.0)
    throw std::invalid_argument("tip mass must be non-negative");
  if (!positive_finite(diameter)) throw std::invalid_argument("diameter must be positive");
}

DimensionlessBVP nondimensionalize(const ChainParams& params, const ControlInput& control) {
  params.validate();
  if (!positive_finite(control.angular_speed))
    throw std::invalid_argument("angular speed must be positive for a uniform rotation");
  if (!std::isfinite(control.radius) || control.radius < 0.0)
    throw std::invalid_argument("attachment radius must be non-negative");
  const double scale = control.angular_speed * control.angular_speed / params.gravity;
  // -0.0 is folded to 0 so that callers can compare against zero directly.
  const double rbar = control.radius == 0.0 ? 0.0 : -control.radius * scale;
  return {rbar, params.length * scale};
}

double angular_speed_for(const ChainParams& params, double Lbar) {
  if (!positive_finite(Lbar)) throw std::invalid_argument("Lbar must be positive");
  return std::sqrt(Lbar * params.gravity / params.length);
}

double dimensionless_length(const ChainParams& params, double angular_speed) {
  return params.length * angular_speed * angular_speed / params.gravity;
}

double tip_offset(const ChainParams& params, double angular_speed) {
  return params.tip_mass * angular_speed * angular_speed /
         (params.linear_density * params.gravity);
}

DimensionalPoint dimensionalize(const ChainParams& params, const ParamPoint& point) {
  params.validate();
  if (!std::isfinite(point.a) || point.a < 0.0)
    throw std::invalid_argument("initial slope a must be non-negative");
  const double omega = angular_speed_for(params, point.Lbar);
  return {omega, point.a * params.gravity / (omega * omega)};
}

ChainParams parse_chain_params(const std::string& json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  ChainParams p;
  p.length = doc.at("length_m").get<double>();
  p.linear_density = doc.at("linear_density_kg_per_m").get<double>();
  p.gravity = doc.value("gravity_m_per_s2", 9.81);
  p.tip_mass = doc.value("tip_mass_kg", 0.0);
  p.diameter = doc.value("diameter_m", 0.001);
  p.validate();
  return p;
}

ChainParams load_chain_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open chain config: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_chain_params(buffer.str());
}

}  // namespace rotochain
