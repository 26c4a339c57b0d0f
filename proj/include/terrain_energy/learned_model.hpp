#ifndef TERRAIN_ENERGY_LEARNED_MODEL_HPP
#define TERRAIN_ENERGY_LEARNED_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "terrain_energy/conv_net.hpp"
#include "terrain_energy/patch.hpp"
#include "terrain_energy/telemetry.hpp"
#include "terrain_energy/terrain.hpp"

namespace terrain_energy {

enum class TrainMode { kHeadOnly, kFromScratch, kFineTune };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kFromScratch;
  double momentum = 0.9;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& doc);
};

nlohmann::json architecture_to_json(const Architecture& arch);
/// Missing keys keep their defaults; unknown keys are rejected.
Architecture architecture_from_json(const nlohmann::json& doc);

/// Patches (all of one size and side) paired with scaled-energy targets.
struct Dataset {
  std::vector<HeightPatch> patches;
  std::vector<double> targets;

  std::size_t size() const { return patches.size(); }
  bool empty() const { return patches.empty(); }
  void validate() const;
};

/// Patches for every straight, in-bounds segment; curved segments and those
/// whose patch leaves the map are skipped.
Dataset build_dataset(const Heightmap& hm, std::span<const PathSegment> segments, std::size_t n);

/// Patch-to-scaled-energy regressor. predict() is const and safe to call
/// from several threads at once.
class PatchRegressor {
 public:
  explicit PatchRegressor(Architecture arch = {}, std::uint64_t seed = 0);

  const Architecture& architecture() const { return net_.architecture(); }
  std::size_t input_n() const { return net_.architecture().input_n; }
  std::span<const float> parameters() const { return params_; }
  std::span<float> mutable_parameters() { return params_; }
  const ConvNet<float>& network() const { return net_; }

  /// Scaled energy for `patch`. Throws ValidationError if patch.n != input_n().
  double predict(const HeightPatch& patch) const;
  std::vector<double> predict(std::span<const HeightPatch> patches) const;

  /// Zeros the weights and bias of the output layer.
  void zero_output_layer();

  void save(const std::filesystem::path& file) const;
  static PatchRegressor load(const std::filesystem::path& file);

 private:
  ConvNet<float> net_;
  std::vector<float> params_;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean squared error over each epoch
  std::size_t samples = 0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  PatchRegressor model;
  TrainReport report;
};

/// Mini-batch momentum descent on mean squared error from a seeded
/// initialization. kHeadOnly keeps the convolution stack at its initial
/// weights. kFineTune is rejected; use fine_tune().
TrainResult train(const Dataset& data, const TrainConfig& config, const Architecture& arch = {});

/// Continues descent from `model` with every layer trainable.
TrainResult fine_tune(PatchRegressor model, const Dataset& data, const TrainConfig& config);

/// Shifts `predictions` so their mean equals `target_mean`.
std::vector<double> mean_shift_calibrate(std::span<const double> predictions, double target_mean);

/// Writes `<model>.json` next to a saved model: config, architecture, loss trace.
void write_model_sidecar(const std::filesystem::path& model_file, const TrainConfig& config,
                         const Architecture& arch, const TrainReport& report);

/// Normalized network input for one patch (heights / height_scale).
std::vector<float> network_input(const HeightPatch& patch, double height_scale);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_LEARNED_MODEL_HPP
