#ifndef TERRAIN_ENERGY_SYNTHWORLD_HPP
#define TERRAIN_ENERGY_SYNTHWORLD_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "terrain_energy/geometry.hpp"
#include "terrain_energy/physics_model.hpp"
#include "terrain_energy/telemetry.hpp"
#include "terrain_energy/terrain.hpp"

namespace terrain_energy {

/// Parameters of a generated site. Terrain is smooth multi-octave value noise
/// rescaled so its steepest gradient equals tan(max_slope), plus per-cell
/// roughness whose amplitude is itself modulated by slow noise.
struct TerrainSpec {
  double width = 60.0;   // m, along x
  double height = 40.0;  // m, along y
  double resolution = 0.25;
  double max_slope_deg = 5.0;
  double roughness_amp = 0.0;  // m
  std::uint64_t seed = 1;
  Point2 origin{0.0, 0.0};
  double feature_wavelength = 24.0;   // m, coarsest smooth octave
  std::size_t octaves = 3;
  double roughness_wavelength = 3.0;  // m, scale of the roughness modulation

  void validate() const;
  nlohmann::json to_json() const;
  static TerrainSpec from_json(const nlohmann::json& doc);
};

Heightmap generate_terrain(const TerrainSpec& spec);

/// Ground-truth power model used to synthesize telemetry:
///   P = (mu(x,y) m g cos(th) + m g sin(th) + roughness_gain * R(x,y) * m g) * v
/// with R the local roughness of the heightmap (meters), multiplicative
/// Gaussian noise, and a non-regenerative floor at idle_power.
struct GroundTruthModel {
  double mu_min = 0.05;
  double mu_max = 0.30;
  double mu_wavelength = 30.0;  // m
  std::uint64_t mu_seed = 7;
  double roughness_gain = 0.0;  // 1/m
  double roughness_radius = 0.5;  // m, averaging radius of R
  double mass = kDefaultMass;
  double gravity = kStandardGravity;
  double speed = kDefaultSpeed;
  double voltage = kNominalVoltage;
  double noise_sigma = 0.03;
  double idle_power = 2.0;  // W
  std::uint64_t seed = 11;

  void validate() const;
  double mu_at(Point2 p) const;
  nlohmann::json to_json() const;
  static GroundTruthModel from_json(const nlohmann::json& doc);
};

/// Local roughness R of a heightmap: |h - 3x3 mean| averaged over a square
/// window of the given radius. Same grid as `hm`.
Heightmap roughness_field(const Heightmap& hm, double radius);

/// Drives the waypoint polyline at the model's constant speed, logging at
/// `rate` Hz. A single waypoint yields a two-sample log at idle power.
TelemetryLog simulate_run(const Heightmap& hm, const GroundTruthModel& model,
                          std::span<const Point2> waypoints, double rate = kDefaultLogRate);

/// North-south passes evenly spread across `bounds` (at least
/// ceil(width / spacing) + 1 of them), alternating direction.
std::vector<Point2> boustrophedon_waypoints(const Rect& bounds, double row_spacing);

std::vector<Point2> random_waypoints(const Rect& bounds, std::size_t k, std::uint64_t seed);

/// Smooth value noise in [-1, 1] at lattice spacing 1, quintic interpolation.
double value_noise(double x, double y, std::uint64_t seed);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_SYNTHWORLD_HPP
