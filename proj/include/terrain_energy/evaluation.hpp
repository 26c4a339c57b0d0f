#ifndef TERRAIN_ENERGY_EVALUATION_HPP
#define TERRAIN_ENERGY_EVALUATION_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "terrain_energy/telemetry.hpp"

namespace terrain_energy {

inline constexpr double kDefaultEpsilonFloor = 0.05;

/// |pred - truth| / |truth|. Throws ValidationError when |truth| < floor.
double relative_error(double pred, double truth, double epsilon_floor = kDefaultEpsilonFloor);

struct SegmentError {
  double prediction = 0.0;
  double truth = 0.0;
  double relative_error = 0.0;  // NaN when excluded
  bool used = false;
};

struct EvalReport {
  std::vector<SegmentError> per_segment;
  double mean_rel_error = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  double epsilon_floor = kDefaultEpsilonFloor;

  /// Summary only; per-segment rows go to the CSV.
  nlohmann::json to_json() const;
};

/// Mean relative error over pairs whose |truth| reaches the floor. Throws
/// ValidationError on length mismatch or when every pair is excluded.
EvalReport evaluate(std::span<const double> predictions, std::span<const double> truths,
                    double epsilon_floor = kDefaultEpsilonFloor);

// index,pred,truth,rel_err,used
void write_eval_csv(const EvalReport& report, const std::filesystem::path& file);

enum class Axis { kX, kY };
Axis axis_from_string(const std::string& name);

struct RegionSplit {
  std::vector<PathSegment> train;
  std::vector<PathSegment> test;
  double boundary = 0.0;  // coordinate along the split axis
};

/// Segments whose midpoint lies below lo + fraction * (hi - lo) along `axis`
/// train; the rest test. lo/hi span the segment midpoints.
RegionSplit split_by_region(std::span<const PathSegment> segments, Axis axis = Axis::kX,
                            double fraction = 1.0 / 3.0);

// index,pred
void write_predictions_csv(std::span<const double> predictions, const std::filesystem::path& file);
std::vector<double> read_predictions_csv(const std::filesystem::path& file);

std::vector<double> scaled_energies(std::span<const PathSegment> segments);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_EVALUATION_HPP
