#include "terrain_energy/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "terrain_energy/errors.hpp"
#include "terrain_energy/json_util.hpp"
#include "terrain_energy/random.hpp"

namespace terrain_energy {

namespace {

double lattice_value(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(j) * 0x9E3779B97F4A7C15ull));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Position along a polyline by arc length.
struct Polyline {
  std::vector<Point2> pts;
  std::vector<double> cum;  // cumulative length at each vertex

  explicit Polyline(std::span<const Point2> points) : pts(points.begin(), points.end()) {
    cum.assign(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  }

  double length() const { return cum.back(); }

  // Leg index containing arc length s; at a vertex the outgoing leg wins.
  std::size_t leg(double s) const {
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t i = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    i = std::min(i, pts.size() - 2);
    // Skip zero-length legs.
    while (i + 2 < pts.size() && cum[i + 1] - cum[i] == 0.0) ++i;
    return i;
  }

  Point2 at(double s, std::size_t leg_index) const {
    const double len = cum[leg_index + 1] - cum[leg_index];
    if (len == 0.0) return pts[leg_index];
    const double u = std::clamp((s - cum[leg_index]) / len, 0.0, 1.0);
    return pts[leg_index] + u * (pts[leg_index + 1] - pts[leg_index]);
  }

  double heading(std::size_t leg_index) const {
    return bearing_of(pts[leg_index + 1] - pts[leg_index]);
  }
};

}  // namespace

double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double u = fade(x - fx);
  const double v = fade(y - fy);
  const double a = lattice_value(i, j, seed);
  const double b = lattice_value(i + 1, j, seed);
  const double c = lattice_value(i, j + 1, seed);
  const double d = lattice_value(i + 1, j + 1, seed);
  return (1.0 - v) * ((1.0 - u) * a + u * b) + v * ((1.0 - u) * c + u * d);
}

void TerrainSpec::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw ValidationError("terrain size must be positive");
  if (!(resolution > 0.0)) throw ValidationError("terrain resolution must be positive");
  if (width / resolution < 1.5 || height / resolution < 1.5) {
    throw ValidationError("terrain must span at least 2 cells per axis");
  }
  if (!(max_slope_deg >= 0.0 && max_slope_deg < 60.0)) {
    throw ValidationError("max_slope_deg must lie in [0, 60)");
  }
  if (!(roughness_amp >= 0.0)) throw ValidationError("roughness_amp must be non-negative");
  if (!(feature_wavelength > 0.0) || !(roughness_wavelength > 0.0)) {
    throw ValidationError("terrain wavelengths must be positive");
  }
  if (octaves < 1) throw ValidationError("terrain needs at least one octave");
}

nlohmann::json TerrainSpec::to_json() const {
  return {{"width", width},
          {"height", height},
          {"resolution", resolution},
          {"max_slope_deg", max_slope_deg},
          {"roughness_amp", roughness_amp},
          {"seed", seed},
          {"origin_x", origin.x},
          {"origin_y", origin.y},
          {"feature_wavelength", feature_wavelength},
          {"octaves", octaves},
          {"roughness_wavelength", roughness_wavelength}};
}

TerrainSpec TerrainSpec::from_json(const nlohmann::json& doc) {
  constexpr std::string_view ctx = "terrain spec";
  require_known_keys(doc,
                     {"width", "height", "resolution", "max_slope_deg", "roughness_amp", "seed",
                      "origin_x", "origin_y", "feature_wavelength", "octaves",
                      "roughness_wavelength"},
                     ctx);
  TerrainSpec s;
  read_optional(doc, "width", s.width, ctx);
  read_optional(doc, "height", s.height, ctx);
  read_optional(doc, "resolution", s.resolution, ctx);
  read_optional(doc, "max_slope_deg", s.max_slope_deg, ctx);
  read_optional(doc, "roughness_amp", s.roughness_amp, ctx);
  read_optional(doc, "seed", s.seed, ctx);
  read_optional(doc, "origin_x", s.origin.x, ctx);
  read_optional(doc, "origin_y", s.origin.y, ctx);
  read_optional(doc, "feature_wavelength", s.feature_wavelength, ctx);
  read_optional(doc, "octaves", s.octaves, ctx);
  read_optional(doc, "roughness_wavelength", s.roughness_wavelength, ctx);
  s.validate();
  return s;
}

Heightmap generate_terrain(const TerrainSpec& spec) {
  spec.validate();
  const auto rows = static_cast<std::size_t>(std::llround(spec.height / spec.resolution));
  const auto cols = static_cast<std::size_t>(std::llround(spec.width / spec.resolution));
  const double res = spec.resolution;

  std::vector<double> smooth(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = (static_cast<double>(rows - 1 - r) + 0.5) * res;
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = (static_cast<double>(c) + 0.5) * res;
      double h = 0.0;
      double amp = 1.0;
      double wavelength = spec.feature_wavelength;
      for (std::size_t o = 0; o < spec.octaves; ++o) {
        h += amp * value_noise(x / wavelength, y / wavelength, spec.seed * 131 + o);
        amp *= 0.5;
        wavelength *= 0.5;
      }
      smooth[r * cols + c] = h;
    }
  }

  // Rescale so the steepest forward-difference gradient equals tan(max_slope).
  // Every adjacent pair is covered, including the last row and column.
  double max_grad = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double h = smooth[r * cols + c];
      const double gx = c + 1 < cols ? (smooth[r * cols + c + 1] - h) / res : 0.0;
      const double gy = r > 0 ? (smooth[(r - 1) * cols + c] - h) / res : 0.0;
      max_grad = std::max(max_grad, std::hypot(gx, gy));
    }
  }
  const double target = std::tan(deg2rad(spec.max_slope_deg));
  const double scale = max_grad > 0.0 ? target / max_grad : 0.0;

  std::vector<double> values(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double h = scale * smooth[r * cols + c];
      if (spec.roughness_amp > 0.0) {
        const double x = (static_cast<double>(c) + 0.5) * res;
        const double y = (static_cast<double>(rows - 1 - r) + 0.5) * res;
        const double modulation =
            0.5 + 0.5 * value_noise(x / spec.roughness_wavelength, y / spec.roughness_wavelength,
                                    spec.seed * 131 + 97);
        const double white = lattice_value(static_cast<std::int64_t>(c),
                                           static_cast<std::int64_t>(rows - 1 - r),
                                           spec.seed * 131 + 98);
        h += spec.roughness_amp * modulation * white;
      }
      values[r * cols + c] = h;
    }
  }
  return Heightmap::build_from_grid(rows, cols, res, spec.origin, std::move(values));
}

void GroundTruthModel::validate() const {
  if (!(mu_min > 0.0) || !(mu_max >= mu_min)) {
    throw ValidationError("ground-truth friction needs 0 < mu_min <= mu_max");
  }
  if (!(mu_wavelength > 0.0)) throw ValidationError("mu_wavelength must be positive");
  if (!(roughness_gain >= 0.0)) throw ValidationError("roughness_gain must be non-negative");
  if (!(roughness_radius >= 0.0)) throw ValidationError("roughness_radius must be non-negative");
  if (!(mass > 0.0) || !(gravity > 0.0) || !(speed > 0.0) || !(voltage > 0.0)) {
    throw ValidationError("mass, gravity, speed and voltage must be positive");
  }
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
  if (!(idle_power >= 0.0)) throw ValidationError("idle_power must be non-negative");
}

double GroundTruthModel::mu_at(Point2 p) const {
  if (mu_max == mu_min) return mu_min;
  const double n = value_noise(p.x / mu_wavelength, p.y / mu_wavelength, mu_seed);
  return std::clamp(mu_min + (mu_max - mu_min) * (0.5 + 0.5 * n), mu_min, mu_max);
}

nlohmann::json GroundTruthModel::to_json() const {
  return {{"mu_min", mu_min},           {"mu_max", mu_max},
          {"mu_wavelength", mu_wavelength}, {"mu_seed", mu_seed},
          {"roughness_gain", roughness_gain}, {"roughness_radius", roughness_radius},
          {"mass", mass},               {"gravity", gravity},
          {"speed", speed},             {"voltage", voltage},
          {"noise_sigma", noise_sigma}, {"idle_power", idle_power},
          {"seed", seed}};
}

GroundTruthModel GroundTruthModel::from_json(const nlohmann::json& doc) {
  constexpr std::string_view ctx = "ground-truth model";
  require_known_keys(doc,
                     {"mu_min", "mu_max", "mu_wavelength", "mu_seed", "roughness_gain",
                      "roughness_radius", "mass", "gravity", "speed", "voltage", "noise_sigma",
                      "idle_power", "seed"},
                     ctx);
  GroundTruthModel m;
  read_optional(doc, "mu_min", m.mu_min, ctx);
  read_optional(doc, "mu_max", m.mu_max, ctx);
  read_optional(doc, "mu_wavelength", m.mu_wavelength, ctx);
  read_optional(doc, "mu_seed", m.mu_seed, ctx);
  read_optional(doc, "roughness_gain", m.roughness_gain, ctx);
  read_optional(doc, "roughness_radius", m.roughness_radius, ctx);
  read_optional(doc, "mass", m.mass, ctx);
  read_optional(doc, "gravity", m.gravity, ctx);
  read_optional(doc, "speed", m.speed, ctx);
  read_optional(doc, "voltage", m.voltage, ctx);
  read_optional(doc, "noise_sigma", m.noise_sigma, ctx);
  read_optional(doc, "idle_power", m.idle_power, ctx);
  read_optional(doc, "seed", m.seed, ctx);
  m.validate();
  return m;
}

Heightmap roughness_field(const Heightmap& hm, double radius) {
  const std::size_t rows = hm.rows();
  const std::size_t cols = hm.cols();
  std::vector<double> detail(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      int n = 0;
      for (std::size_t rr = (r == 0 ? 0 : r - 1); rr <= std::min(rows - 1, r + 1); ++rr) {
        for (std::size_t cc = (c == 0 ? 0 : c - 1); cc <= std::min(cols - 1, c + 1); ++cc) {
          acc += hm.at(rr, cc);
          ++n;
        }
      }
      detail[r * cols + c] = std::abs(hm.at(r, c) - acc / n);
    }
  }

  // Separable box average via a summed-area table.
  const auto k = static_cast<std::size_t>(std::llround(radius / hm.resolution()));
  std::vector<double> sat((rows + 1) * (cols + 1), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      sat[(r + 1) * (cols + 1) + c + 1] = detail[r * cols + c] + sat[r * (cols + 1) + c + 1] +
                                          sat[(r + 1) * (cols + 1) + c] - sat[r * (cols + 1) + c];
    }
  }
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t r0 = r >= k ? r - k : 0;
    const std::size_t r1 = std::min(rows - 1, r + k) + 1;
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t c0 = c >= k ? c - k : 0;
      const std::size_t c1 = std::min(cols - 1, c + k) + 1;
      const double sum = sat[r1 * (cols + 1) + c1] - sat[r0 * (cols + 1) + c1] -
                         sat[r1 * (cols + 1) + c0] + sat[r0 * (cols + 1) + c0];
      out[r * cols + c] = std::max(0.0, sum / static_cast<double>((r1 - r0) * (c1 - c0)));
    }
  }
  return Heightmap::build_from_grid(rows, cols, hm.resolution(), hm.origin(), std::move(out));
}

TelemetryLog simulate_run(const Heightmap& hm, const GroundTruthModel& model,
                          std::span<const Point2> waypoints, double rate) {
  model.validate();
  if (!(rate > 0.0)) throw ValidationError("log rate must be positive");
  if (waypoints.empty()) throw ValidationError("simulation needs at least one waypoint");
  for (const auto& w : waypoints) {
    if (!hm.in_bounds(w)) {
      throw OutOfBoundsError("waypoint (" + std::to_string(w.x) + ", " + std::to_string(w.y) +
                             ") outside heightmap");
    }
  }

  const double v = model.speed;
  const double mg = model.mass * model.gravity;
  const double dt = 1.0 / rate;

  if (waypoints.size() == 1 || Polyline(waypoints).length() == 0.0) {
    const Point2 p = waypoints.front();
    const double z = hm.sample_height(p.x, p.y);
    const double current = model.idle_power / model.voltage;
    return TelemetryLog({{0.0, p.x, p.y, z, model.voltage, current},
                         {dt, p.x, p.y, z, model.voltage, current}},
                        rate);
  }

  const Polyline path(waypoints);
  const double duration = path.length() / v;
  const bool rough = model.roughness_gain > 0.0;
  const Heightmap roughness = rough ? roughness_field(hm, model.roughness_radius) : hm;
  Engine eng(model.seed);

  // Slope is measured over the distance covered in one tick, centered on
  // the robot, falling back to one-sided differences at the map edge.
  const double window = v * dt;
  auto slope_at = [&](Point2 p, double heading) {
    const Point2 dir = heading_vector(heading);
    Point2 a = p - (0.5 * window) * dir;
    Point2 b = p + (0.5 * window) * dir;
    if (!hm.in_bounds(a)) a = p;
    if (!hm.in_bounds(b)) b = p;
    const double run = distance(a, b);
    if (run == 0.0) return 0.0;
    return std::atan2(hm.sample_height(b.x, b.y) - hm.sample_height(a.x, a.y), run);
  };

  const auto ticks = static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
  std::vector<double> times;
  times.reserve(ticks + 2);
  for (std::size_t k = 0; k <= ticks; ++k) times.push_back(static_cast<double>(k) * dt);
  if (duration - times.back() > 1e-9 * std::max(1.0, duration)) times.push_back(duration);

  std::vector<TelemetrySample> samples;
  samples.reserve(times.size());
  for (double t : times) {
    const double s = std::min(v * t, path.length());
    const std::size_t leg = path.leg(s);
    const Point2 p = path.at(s, leg);
    const double heading = path.heading(leg);
    const double theta = slope_at(p, heading);
    double extra = 0.0;
    if (rough) extra = model.roughness_gain * roughness.sample_height(p.x, p.y);
    double power = (model.mu_at(p) * mg * std::cos(theta) + mg * std::sin(theta) + extra * mg) * v;
    if (model.noise_sigma > 0.0) power *= 1.0 + model.noise_sigma * standard_normal(eng);
    power = std::max(power, model.idle_power);
    samples.push_back(
        {t, p.x, p.y, hm.sample_height(p.x, p.y), model.voltage, power / model.voltage});
  }
  return TelemetryLog(std::move(samples), rate);
}

std::vector<Point2> boustrophedon_waypoints(const Rect& bounds, double row_spacing) {
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw ValidationError("coverage bounds must have positive area");
  }
  if (!(row_spacing > 0.0) || !(row_spacing < bounds.height())) {
    throw ValidationError("row spacing must be positive and smaller than the bounds height");
  }
  const auto gaps = static_cast<std::size_t>(std::ceil(bounds.width() / row_spacing - 1e-9));
  const std::size_t passes = std::max<std::size_t>(gaps, 1) + 1;
  std::vector<Point2> out;
  out.reserve(2 * passes);
  for (std::size_t i = 0; i < passes; ++i) {
    const double x = bounds.min_x + bounds.width() * static_cast<double>(i) /
                                        static_cast<double>(passes - 1);
    if (i % 2 == 0) {
      out.push_back({x, bounds.min_y});
      out.push_back({x, bounds.max_y});
    } else {
      out.push_back({x, bounds.max_y});
      out.push_back({x, bounds.min_y});
    }
  }
  return out;
}

std::vector<Point2> random_waypoints(const Rect& bounds, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("need at least one random waypoint");
  if (!(bounds.width() >= 0.0) || !(bounds.height() >= 0.0)) {
    throw ValidationError("waypoint bounds are inverted");
  }
  Engine eng(seed);
  std::vector<Point2> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double x = uniform(eng, bounds.min_x, bounds.max_x);
    const double y = uniform(eng, bounds.min_y, bounds.max_y);
    out.push_back({x, y});
  }
  return out;
}

}  // namespace terrain_energy
