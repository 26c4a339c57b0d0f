#ifndef TERRAIN_ENERGY_PLANNER_HPP
#define TERRAIN_ENERGY_PLANNER_HPP

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "terrain_energy/geometry.hpp"
#include "terrain_energy/learned_model.hpp"
#include "terrain_energy/patch.hpp"
#include "terrain_energy/physics_model.hpp"
#include "terrain_energy/terrain.hpp"

namespace terrain_energy {

/// Anything that maps a 1 m heightmap patch to scaled energy.
struct PatchPredictor {
  std::size_t patch_n = 3;
  std::function<std::vector<double>(std::span<const HeightPatch>)> predict_batch;

  double operator()(const HeightPatch& patch) const { return predict_batch(std::span(&patch, 1)).front(); }
};

PatchPredictor constant_predictor(double value, std::size_t patch_n = 3);
/// Friction-plus-gravity energy over the patch's centerline, scaled by the
/// nominal voltage.
PatchPredictor physics_predictor(const PhysicsParams& params, std::size_t patch_n = 3);
PatchPredictor learned_predictor(std::shared_ptr<const PatchRegressor> model);

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;

  auto operator<=>(const Cell&) const = default;
};

struct CellOffset {
  int d_row = 0;  // +1 is one cell south
  int d_col = 0;  // +1 is one cell east
};

/// Neighbor offsets for a 4-, 8- or 16-connected grid, in a fixed order.
std::vector<CellOffset> neighborhood_offsets(std::size_t neighborhood);

inline constexpr double kDefaultCostFloor = 1e-6;
inline constexpr double kBlocked = std::numeric_limits<double>::infinity();

/// Per-cell, per-direction edge costs. cost(u -> v) and cost(v -> u) are
/// independent entries; blocked edges hold kBlocked.
class DirectionalCostMap {
 public:
  DirectionalCostMap(std::size_t rows, std::size_t cols, double cell_size, Point2 origin,
                     std::size_t neighborhood, double cost_floor = kDefaultCostFloor);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double cell_size() const { return cell_size_; }
  Point2 origin() const { return origin_; }
  std::size_t neighborhood() const { return offsets_.size(); }
  double cost_floor() const { return cost_floor_; }
  const std::vector<CellOffset>& offsets() const { return offsets_; }

  bool contains(long row, long col) const {
    return row >= 0 && col >= 0 && row < static_cast<long>(rows_) && col < static_cast<long>(cols_);
  }
  Point2 cell_center(Cell c) const;
  /// Cell whose square contains `p`; throws OutOfBoundsError outside the grid.
  Cell cell_at(Point2 p) const;

  double cost(Cell from, std::size_t offset_index) const {
    return costs_[(from.row * cols_ + from.col) * offsets_.size() + offset_index];
  }
  /// Stores max(cost_floor, value); kBlocked stays blocked.
  void set_cost(Cell from, std::size_t offset_index, double value);
  bool blocked(Cell from, std::size_t offset_index) const { return cost(from, offset_index) == kBlocked; }

  /// Multiplies every non-blocked cost by `factor` (> 0).
  void scale(double factor);

 private:
  std::size_t rows_;
  std::size_t cols_;
  double cell_size_;
  Point2 origin_;
  std::vector<CellOffset> offsets_;
  double cost_floor_;
  std::vector<double> costs_;
};

/// Evaluates the predictor on the 1 m patch leaving every cell center toward
/// each neighbor and multiplies by the edge length. Edges whose patch or
/// target cell leaves the map are blocked.
DirectionalCostMap build_cost_map(const Heightmap& hm, const PatchPredictor& predictor,
                                  double cell_size = 1.0, std::size_t neighborhood = 8,
                                  double cost_floor = kDefaultCostFloor);

struct PlanResult {
  std::vector<Cell> waypoints;
  double total_cost = 0.0;
  std::vector<double> per_edge;
};

/// Dijkstra over directed edge costs. Ties are broken by lexicographic
/// (row, col) order. Throws UnreachableError when no route exists.
PlanResult plan_min_energy(const DirectionalCostMap& map, Cell start, Cell goal);

/// Predicted scaled energy of driving the polyline: unit chords cut as in
/// trajectory segmentation, one patch per chord, the trailing partial chord
/// weighted by its length. Predictions are summed unclamped.
double path_energy(const Heightmap& hm, const PatchPredictor& predictor,
                   std::span<const Point2> waypoints, double unit_length = 1.0);

/// Chords of horizontal length `unit_length` along a polyline, plus the
/// trailing remainder (if non-empty) as a final shorter chord.
struct Chord {
  Point2 p;
  Point2 q;
  double length = 0.0;
};
std::vector<Chord> cut_polyline(std::span<const Point2> waypoints, double unit_length);

// Cost map directory: meta.json plus one cost_<k>.f32 plane per offset.
void write_cost_map(const DirectionalCostMap& map, const std::filesystem::path& dir);
DirectionalCostMap read_cost_map(const std::filesystem::path& dir);

// index,row,col,x_m,y_m,cumulative_cost ; the last row carries the total.
void write_plan_csv(const DirectionalCostMap& map, const PlanResult& plan,
                    const std::filesystem::path& file);
void write_plan_svg(const Heightmap& hm, const DirectionalCostMap& map, const PlanResult& plan,
                    const std::filesystem::path& file);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_PLANNER_HPP
