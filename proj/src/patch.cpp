#include "terrain_energy/patch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "terrain_energy/errors.hpp"
#include "terrain_energy/heightmap_io.hpp"

namespace terrain_energy {

namespace {

std::array<Point2, 4> corners(Point2 p, double heading, double side) {
  const Point2 d = heading_vector(heading);
  const Point2 r = right_vector(heading);
  const Point2 half = (0.5 * side) * r;
  const Point2 ahead = side * d;
  return {p - half, p + half, p - half + ahead, p + half + ahead};
}

}  // namespace

bool patch_fits(const Heightmap& hm, Point2 p, double heading, double side) {
  const auto cs = corners(p, heading, side);
  return std::all_of(cs.begin(), cs.end(), [&](Point2 c) { return hm.in_bounds(c); });
}

HeightPatch extract_patch(const Heightmap& hm, Point2 p, double heading, double side,
                          std::size_t n) {
  if (n < 2) throw ValidationError("patch size must be at least 2");
  if (!(side > 0.0)) throw ValidationError("patch side must be positive");
  if (!patch_fits(hm, p, heading, side)) {
    throw OutOfBoundsError("patch at (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                           ") leaves the heightmap");
  }

  HeightPatch patch;
  patch.n = n;
  patch.side = side;
  patch.origin = p;
  patch.heading = heading;
  patch.values.resize(n * n);

  const Point2 d = heading_vector(heading);
  const Point2 r = right_vector(heading);
  // Heights are sampled relative to a grid value so that a constant offset of
  // the whole map cancels before any interpolation rounding happens.
  const double reference = hm.at(0, 0);
  const double last = static_cast<double>(n - 1);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = side * (last - static_cast<double>(i)) / last;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = -0.5 * side + side * static_cast<double>(j) / last;
      const double x = p.x + u * r.x + w * d.x;
      const double y = p.y + u * r.y + w * d.y;
      const double h = hm.sample_relative(x, y, reference);
      patch.values[i * n + j] = h;
      lo = std::min(lo, h);
    }
  }
  for (auto& v : patch.values) v -= lo;
  return patch;
}

HeightPatch patch_for_segment(const Heightmap& hm, const PathSegment& seg, std::size_t n) {
  return extract_patch(hm, seg.p.xy(), seg.heading, seg.length_h, n);
}

void write_patch(const HeightPatch& patch, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json(dir / "meta.json", {{"rows", patch.n},
                                 {"cols", patch.n},
                                 {"resolution_m", patch.side / static_cast<double>(patch.n - 1)},
                                 {"origin_x_m", patch.origin.x},
                                 {"origin_y_m", patch.origin.y},
                                 {"heading_rad", patch.heading},
                                 {"side_m", patch.side}});
  write_f32_le(dir / "heights.f32", patch.values);
}

}  // namespace terrain_energy
