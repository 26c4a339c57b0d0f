#include "terrain_energy/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "terrain_energy/errors.hpp"

namespace terrain_energy {

namespace {

// Queries this close outside the cell-center hull (in cells) are clamped onto it.
constexpr double kEdgeSlack = 1e-9;

std::string fmt_point(double x, double y) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

}  // namespace

Heightmap::Heightmap(std::size_t rows, std::size_t cols, double resolution, Point2 origin,
                     std::vector<double> values)
    : rows_(rows), cols_(cols), resolution_(resolution), origin_(origin),
      values_(std::move(values)) {}

Heightmap Heightmap::build_from_grid(std::size_t rows, std::size_t cols, double resolution,
                                     Point2 origin, std::vector<double> values) {
  if (rows < 2 || cols < 2) {
    throw ValidationError("heightmap needs at least 2x2 cells, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ValidationError("heightmap resolution must be positive and finite");
  }
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw ValidationError("heightmap origin must be finite");
  }
  if (values.size() != rows * cols) {
    throw ValidationError("heightmap has " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(rows * cols));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("heightmap value at row " + std::to_string(i / cols) + ", col " +
                            std::to_string(i % cols) + " is not finite");
    }
  }
  return Heightmap(rows, cols, resolution, origin, std::move(values));
}

Point2 Heightmap::cell_center(std::size_t row, std::size_t col) const {
  return {origin_.x + (static_cast<double>(col) + 0.5) * resolution_,
          origin_.y + (static_cast<double>(rows_ - 1 - row) + 0.5) * resolution_};
}

Rect Heightmap::extent() const {
  return {origin_.x, origin_.y, origin_.x + static_cast<double>(cols_) * resolution_,
          origin_.y + static_cast<double>(rows_) * resolution_};
}

Rect Heightmap::sampling_bounds() const {
  const double half = 0.5 * resolution_;
  const Rect e = extent();
  return {e.min_x + half, e.min_y + half, e.max_x - half, e.max_y - half};
}

bool Heightmap::in_bounds(Point2 p) const {
  const double fc = (p.x - origin_.x) / resolution_ - 0.5;
  const double fs = (p.y - origin_.y) / resolution_ - 0.5;
  return fc >= -kEdgeSlack && fc <= static_cast<double>(cols_ - 1) + kEdgeSlack &&
         fs >= -kEdgeSlack && fs <= static_cast<double>(rows_ - 1) + kEdgeSlack;
}

double Heightmap::sample_height(double x, double y) const { return sample_relative(x, y, 0.0); }

double Heightmap::sample_relative(double x, double y, double reference) const {
  // Fractional column index and fractional row index counted from the south.
  double fc = (x - origin_.x) / resolution_ - 0.5;
  double fs = (y - origin_.y) / resolution_ - 0.5;
  const double max_c = static_cast<double>(cols_ - 1);
  const double max_s = static_cast<double>(rows_ - 1);
  if (!(fc >= -kEdgeSlack && fc <= max_c + kEdgeSlack && fs >= -kEdgeSlack &&
        fs <= max_s + kEdgeSlack)) {
    throw OutOfBoundsError("height query " + fmt_point(x, y) + " outside heightmap");
  }
  // Snap index rounding noise so cell centers reproduce stored values exactly.
  const auto snap = [](double f) {
    const double r = std::round(f);
    return std::abs(f - r) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r) ? r : f;
  };
  fc = std::clamp(snap(fc), 0.0, max_c);
  fs = std::clamp(snap(fs), 0.0, max_s);
  const auto c0 = std::min(static_cast<std::size_t>(fc), cols_ - 2);
  const auto s0 = std::min(static_cast<std::size_t>(fs), rows_ - 2);
  const double tx = fc - static_cast<double>(c0);
  const double ty = fs - static_cast<double>(s0);
  const std::size_t r_south = rows_ - 1 - s0;
  const std::size_t r_north = r_south - 1;
  const double sw = at(r_south, c0) - reference;
  const double se = at(r_south, c0 + 1) - reference;
  const double nw = at(r_north, c0) - reference;
  const double ne = at(r_north, c0 + 1) - reference;
  return (1.0 - ty) * ((1.0 - tx) * sw + tx * se) + ty * ((1.0 - tx) * nw + tx * ne);
}

Heightmap fit_surface_from_points(std::span<const Point3> points, double resolution,
                                  std::size_t smoothing_passes) {
  if (points.size() < 3) {
    throw ValidationError("surface fit needs at least 3 points, got " +
                          std::to_string(points.size()));
  }
  if (!(resolution > 0.0)) throw ValidationError("surface fit resolution must be positive");

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw ValidationError("surface fit point is not finite");
    }
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  if (max_x - min_x <= 0.0 || max_y - min_y <= 0.0) {
    throw ValidationError("surface fit points span a zero-area bounding box");
  }

  // Extremes land on the centers of the outermost cells.
  const auto cols = static_cast<std::size_t>(std::floor((max_x - min_x) / resolution + 0.5)) + 1;
  const auto rows = static_cast<std::size_t>(std::floor((max_y - min_y) / resolution + 0.5)) + 1;
  if (rows < 2 || cols < 2) {
    throw ValidationError("surface fit points span less than one cell; lower the resolution");
  }
  const Point2 origin{min_x - 0.5 * resolution, min_y - 0.5 * resolution};

  std::vector<double> sum(rows * cols, 0.0);
  std::vector<std::size_t> count(rows * cols, 0);
  for (const auto& p : points) {
    auto c = static_cast<std::size_t>(std::floor((p.x - origin.x) / resolution));
    auto s = static_cast<std::size_t>(std::floor((p.y - origin.y) / resolution));
    c = std::min(c, cols - 1);
    s = std::min(s, rows - 1);
    const std::size_t idx = (rows - 1 - s) * cols + c;
    sum[idx] += p.z;
    ++count[idx];
  }

  std::vector<double> z(rows * cols, 0.0);
  std::vector<std::size_t> holes;
  double filled_total = 0.0;
  std::size_t filled = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (count[i] > 0) {
      z[i] = sum[i] / static_cast<double>(count[i]);
      filled_total += z[i];
      ++filled;
    } else {
      holes.push_back(i);
    }
  }

  if (!holes.empty()) {
    const double seed = filled_total / static_cast<double>(filled);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (count[i] > 0) {
        lo = std::min(lo, z[i]);
        hi = std::max(hi, z[i]);
      }
    }
    for (auto i : holes) z[i] = seed;
    const double tol = 1e-10 * std::max(1.0, hi - lo);
    constexpr int kMaxSweeps = 200000;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double max_change = 0.0;
      for (auto i : holes) {
        const std::size_t r = i / cols;
        const std::size_t c = i % cols;
        double acc = 0.0;
        int n = 0;
        if (r > 0) { acc += z[i - cols]; ++n; }
        if (r + 1 < rows) { acc += z[i + cols]; ++n; }
        if (c > 0) { acc += z[i - 1]; ++n; }
        if (c + 1 < cols) { acc += z[i + 1]; ++n; }
        const double next = acc / n;
        max_change = std::max(max_change, std::abs(next - z[i]));
        z[i] = next;
      }
      if (max_change < tol) break;
    }
  }

  for (std::size_t pass = 0; pass < smoothing_passes; ++pass) {
    std::vector<double> out(z.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        int n = 0;
        for (std::size_t rr = (r == 0 ? 0 : r - 1); rr <= std::min(rows - 1, r + 1); ++rr) {
          for (std::size_t cc = (c == 0 ? 0 : c - 1); cc <= std::min(cols - 1, c + 1); ++cc) {
            acc += z[rr * cols + cc];
            ++n;
          }
        }
        out[r * cols + c] = acc / n;
      }
    }
    z = std::move(out);
  }

  return Heightmap::build_from_grid(rows, cols, resolution, origin, std::move(z));
}

double slope_along(const Heightmap& hm, Point2 p, double bearing, double d) {
  if (!(d > 0.0)) throw ValidationError("slope distance must be positive");
  const Point2 q = p + d * heading_vector(bearing);
  return std::atan2(hm.sample_height(q.x, q.y) - hm.sample_height(p.x, p.y), d);
}

}  // namespace terrain_energy
