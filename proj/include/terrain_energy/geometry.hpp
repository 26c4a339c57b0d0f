#ifndef TERRAIN_ENERGY_GEOMETRY_HPP
#define TERRAIN_ENERGY_GEOMETRY_HPP

#include <cmath>
#include <numbers>

namespace terrain_energy {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point2 xy() const { return {x, y}; }
};

struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(Point2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Headings are bearings: radians clockwise from north (+y).
inline Point2 heading_vector(double bearing) {
  return {std::sin(bearing), std::cos(bearing)};
}

// Unit vector pointing to the right of travel along `bearing`.
inline Point2 right_vector(double bearing) {
  return {std::cos(bearing), -std::sin(bearing)};
}

// Bearing of the displacement `d`, normalized to [0, 2*pi).
inline double bearing_of(Point2 d) {
  double b = std::atan2(d.x, d.y);
  if (b < 0.0) b += 2.0 * std::numbers::pi;
  return b;
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_GEOMETRY_HPP
