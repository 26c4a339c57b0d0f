#ifndef TERRAIN_ENERGY_SCENARIO_HPP
#define TERRAIN_ENERGY_SCENARIO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "terrain_energy/conv_net.hpp"
#include "terrain_energy/evaluation.hpp"
#include "terrain_energy/learned_model.hpp"
#include "terrain_energy/synthworld.hpp"
#include "terrain_energy/telemetry.hpp"

namespace terrain_energy {

enum class MotionPattern { kBoustrophedon, kRandom };

/// How the simulated robot covers a site. Waypoints stay `margin` meters
/// inside the heightmap so every segment's patch fits.
struct MotionPlan {
  MotionPattern pattern = MotionPattern::kBoustrophedon;
  double row_spacing = 1.0;   // m, boustrophedon
  std::size_t waypoints = 60;  // random
  std::uint64_t seed = 5;      // random
  double margin = 1.5;         // m

  nlohmann::json to_json() const;
  static MotionPlan from_json(const nlohmann::json& doc);
};

struct Site {
  TerrainSpec terrain;
  GroundTruthModel oracle;

  nlohmann::json to_json() const;
  static Site from_json(const nlohmann::json& doc);
};

/// A second terrain class used to test transfer: the source model is applied
/// raw, mean-shift calibrated, and fine-tuned on its training region.
struct TransferSpec {
  Site site;
  TrainConfig fine_tune;
};

/// One reproducible experiment. Every random choice is seeded from here.
struct ScenarioConfig {
  std::string name = "scenario";
  Site site;
  std::optional<Site> second_site;
  std::optional<TransferSpec> transfer;
  MotionPlan motion;
  SegmentationOptions segmentation;
  Axis split_axis = Axis::kX;
  double split_fraction = 1.0 / 3.0;
  Architecture architecture;
  TrainConfig train;
  std::vector<std::string> predictors{"physics", "rolling", "learned"};
  double rolling_window_m = 5.0;
  double epsilon_floor = kDefaultEpsilonFloor;
  std::filesystem::path output_dir = "out";

  bool wants(const std::string& predictor) const;
  nlohmann::json to_json() const;
  /// Unknown keys anywhere in the document are rejected.
  static ScenarioConfig from_json(const nlohmann::json& doc);
  static ScenarioConfig load(const std::filesystem::path& file);
};

/// Heightmap, telemetry and usable segments of one simulated site.
struct SiteData {
  Heightmap terrain;
  TelemetryLog log;
  std::vector<PathSegment> segments;  // straight, patch in bounds, trajectory order
  std::size_t segments_total = 0;
};

SiteData simulate_site(const Site& site, const MotionPlan& motion,
                       const SegmentationOptions& segmentation);

std::vector<Point2> motion_waypoints(const Heightmap& hm, const MotionPlan& motion);

/// Physics predictions (scaled) for segments using their endpoint slopes.
std::vector<double> physics_predictions(std::span<const PathSegment> segments,
                                        const PhysicsParams& params);

struct ScenarioResult {
  nlohmann::json report;  // byte-stable summary
  std::vector<std::string> table;  // human-readable summary lines
};

/// Runs generate -> simulate -> segment -> split -> fit/train -> evaluate and
/// writes artifacts under `out_dir` (config.output_dir when empty).
ScenarioResult run_scenario(const ScenarioConfig& config, std::filesystem::path out_dir = {});

/// Prediction-versus-truth trace as a static SVG.
void write_trace_svg(std::span<const double> predictions, std::span<const double> truths,
                     const std::filesystem::path& file);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_SCENARIO_HPP
