#ifndef TERRAIN_ENERGY_TERRAIN_HPP
#define TERRAIN_ENERGY_TERRAIN_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "terrain_energy/geometry.hpp"

namespace terrain_energy {

/// Regular grid of terrain altitudes in a local metric frame (+x east, +y north).
///
/// Row 0 is the northmost row. `origin` is the south-west corner of the grid,
/// i.e. the outer corner of cell (rows - 1, 0). Cell (r, c) is centered at
/// origin + ((c + 0.5) * res, (rows - 1 - r + 0.5) * res).
///
/// Immutable after construction; any number of threads may read it.
class Heightmap {
 public:
  /// Validates and takes ownership of row-major `values` (rows * cols).
  /// Throws ValidationError on shape mismatch, rows/cols < 2, resolution <= 0
  /// or a non-finite altitude.
  static Heightmap build_from_grid(std::size_t rows, std::size_t cols, double resolution,
                                   Point2 origin, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double resolution() const { return resolution_; }
  Point2 origin() const { return origin_; }
  std::span<const double> values() const { return values_; }

  double at(std::size_t row, std::size_t col) const { return values_[row * cols_ + col]; }
  Point2 cell_center(std::size_t row, std::size_t col) const;

  /// Extent of the grid's outer cell edges.
  Rect extent() const;
  /// Convex hull of cell centers: the region where sampling is defined.
  Rect sampling_bounds() const;
  bool in_bounds(Point2 p) const;

  /// Bilinear interpolation of cell-center values. Exact at cell centers and
  /// on planar fields. Throws OutOfBoundsError outside sampling_bounds().
  double sample_height(double x, double y) const;

  /// Bilinear interpolation of (value - reference). Used where results must
  /// not depend on a constant altitude offset of the whole map.
  double sample_relative(double x, double y, double reference) const;

 private:
  Heightmap(std::size_t rows, std::size_t cols, double resolution, Point2 origin,
            std::vector<double> values);

  std::size_t rows_;
  std::size_t cols_;
  double resolution_;
  Point2 origin_;
  std::vector<double> values_;
};

/// Default cell size for surfaces fitted from GPS traces.
inline constexpr double kDefaultFitResolution = 0.25;

/// Grids scattered (x, y, z) samples into a heightmap.
///
/// Cells are aligned so the bounding-box extremes fall on the centers of the
/// outermost cells. Each cell takes the mean of the points binned into it;
/// empty cells are filled by Gauss-Seidel neighbor averaging until converged,
/// then `smoothing_passes` 3x3 box filters are applied.
Heightmap fit_surface_from_points(std::span<const Point3> points,
                                  double resolution = kDefaultFitResolution,
                                  std::size_t smoothing_passes = 0);

/// Slope angle met when travelling `d` meters from `p` along `bearing`:
/// atan2(h(q) - h(p), d) with q = p + d * (sin b, cos b).
double slope_along(const Heightmap& hm, Point2 p, double bearing, double d);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_TERRAIN_HPP
