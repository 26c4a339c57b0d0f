#ifndef TERRAIN_ENERGY_PATCH_HPP
#define TERRAIN_ENERGY_PATCH_HPP

#include <cstddef>
#include <filesystem>
#include <vector>

#include "terrain_energy/geometry.hpp"
#include "terrain_energy/telemetry.hpp"
#include "terrain_energy/terrain.hpp"

namespace terrain_energy {

inline constexpr std::size_t kFullPatchSize = 256;
inline constexpr double kPatchSide = 1.0;

/// Oriented, min-subtracted square of terrain ahead of the robot.
///
/// Row n-1 runs along the edge through `origin` (where the robot starts) and
/// row 0 along the opposite edge, `side` meters ahead along `heading`.
/// Columns go from left to right of travel.
struct HeightPatch {
  std::size_t n = 0;
  double side = kPatchSide;
  Point2 origin;
  double heading = 0.0;
  std::vector<double> values;  // n*n, row-major

  double at(std::size_t row, std::size_t col) const { return values[row * n + col]; }
};

/// Samples an n x n lattice over the square with bottom-edge midpoint `p`,
/// spaced side/(n-1) so both edge midpoints are lattice points, then
/// subtracts the minimum. Throws OutOfBoundsError if any corner of the
/// square leaves the heightmap, ValidationError for n < 2 or side <= 0.
HeightPatch extract_patch(const Heightmap& hm, Point2 p, double heading, double side = kPatchSide,
                          std::size_t n = kFullPatchSize);

HeightPatch patch_for_segment(const Heightmap& hm, const PathSegment& seg, std::size_t n);

/// True when the patch square at (p, heading, side) lies inside the map.
bool patch_fits(const Heightmap& hm, Point2 p, double heading, double side = kPatchSide);

/// Writes the patch in the heightmap directory format, with heading_rad and
/// side_m added to meta.json.
void write_patch(const HeightPatch& patch, const std::filesystem::path& dir);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_PATCH_HPP
