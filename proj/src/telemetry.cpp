#include "terrain_energy/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "terrain_energy/csv.hpp"
#include "terrain_energy/errors.hpp"

namespace terrain_energy {

namespace {

// Relative slack when an integration bound touches the ends of the log.
constexpr double kTimeSlack = 1e-9;

double power_at(std::span<const TelemetrySample> s, std::size_t k, double t) {
  // Linear interpolation of power on [s[k].t, s[k+1].t].
  const double a = (t - s[k].t) / (s[k + 1].t - s[k].t);
  return (1.0 - a) * s[k].power() + a * s[k + 1].power();
}

double distance_to_chord(Point2 x, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(x, a);
  double u = ((x.x - a.x) * ab.x + (x.y - a.y) * ab.y) / len2;
  u = std::clamp(u, 0.0, 1.0);
  return distance(x, a + u * ab);
}

struct CutPoint {
  Point3 pos;
  double t = 0.0;
};

}  // namespace

TelemetryLog::TelemetryLog(std::vector<TelemetrySample> samples, double nominal_rate)
    : samples_(std::move(samples)), nominal_rate_(nominal_rate) {
  if (!(nominal_rate_ > 0.0)) throw ValidationError("telemetry rate must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y) ||
        !std::isfinite(s.z) || !std::isfinite(s.voltage) || !std::isfinite(s.current)) {
      throw ValidationError("telemetry sample " + std::to_string(i) + " has a non-finite field");
    }
    if (s.voltage < 0.0) {
      throw ValidationError("telemetry sample " + std::to_string(i) + " has negative voltage");
    }
    if (i > 0 && !(s.t > samples_[i - 1].t)) {
      throw ValidationError("telemetry timestamps must strictly increase (sample " +
                            std::to_string(i) + ")");
    }
  }
}

double TelemetryLog::horizontal_arc_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    total += distance(samples_[i - 1].position().xy(), samples_[i].position().xy());
  }
  return total;
}

double PathSegment::endpoint_slope() const { return std::atan2(q.z - p.z, length_h); }

double integrate_energy(const TelemetryLog& log, double t0, double t1) {
  const auto s = log.samples();
  if (s.size() < 2) throw ValidationError("energy integration needs at least 2 samples");
  if (!(t0 < t1)) throw ValidationError("energy integration needs t0 < t1");
  const double span = log.end_time() - log.start_time();
  const double slack = kTimeSlack * std::max(1.0, span);
  if (t0 < log.start_time() - slack || t1 > log.end_time() + slack) {
    throw ValidationError("integration interval [" + std::to_string(t0) + ", " +
                          std::to_string(t1) + "] outside log");
  }
  t0 = std::max(t0, log.start_time());
  t1 = std::min(t1, log.end_time());

  // k0: interval containing t0, so that s[k0].t <= t0 < s[k0+1].t.
  auto it0 = std::upper_bound(s.begin(), s.end(), t0,
                              [](double t, const TelemetrySample& x) { return t < x.t; });
  std::size_t k0 = std::min<std::size_t>(static_cast<std::size_t>(it0 - s.begin()), s.size() - 1);
  k0 = k0 == 0 ? 0 : k0 - 1;
  k0 = std::min(k0, s.size() - 2);

  double energy = 0.0;
  double t_prev = t0;
  double p_prev = power_at(s, k0, t0);
  for (std::size_t k = k0; k + 1 < s.size(); ++k) {
    const double t_next = std::min(s[k + 1].t, t1);
    const double p_next = t_next == s[k + 1].t ? s[k + 1].power() : power_at(s, k, t_next);
    energy += 0.5 * (p_prev + p_next) * (t_next - t_prev);
    if (t_next >= t1) break;
    t_prev = t_next;
    p_prev = p_next;
  }
  return energy;
}

std::vector<PathSegment> segment_trajectory(const TelemetryLog& log,
                                            const SegmentationOptions& options) {
  if (!(options.unit_length > 0.0)) throw ValidationError("segment length must be positive");
  if (log.size() < 2) throw ValidationError("segmentation needs at least 2 samples");
  const auto s = log.samples();
  const double L = options.unit_length;

  std::vector<PathSegment> segments;
  CutPoint cut{s[0].position(), s[0].t};
  std::vector<Point2> interior;  // track points strictly inside the open segment

  auto emit = [&](const CutPoint& end) {
    PathSegment seg;
    seg.p = cut.pos;
    seg.q = end.pos;
    const Point2 d = seg.q.xy() - seg.p.xy();
    seg.heading = bearing_of(d);
    seg.length_h = norm(d);
    seg.t_start = cut.t;
    seg.t_end = end.t;
    seg.energy_j = integrate_energy(log, cut.t, end.t);
    seg.energy_scaled = scale_energy(seg.energy_j);
    for (const auto& x : interior) {
      seg.max_deviation = std::max(seg.max_deviation, distance_to_chord(x, seg.p.xy(), seg.q.xy()));
    }
    seg.curved = seg.max_deviation > options.max_deviation_m;
    segments.push_back(seg);
  };

  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const auto& a = s[k];
    const auto& b = s[k + 1];
    if (b.t - a.t > options.max_gap_s) {
      cut = {b.position(), b.t};
      interior.clear();
      continue;
    }
    const Point2 step = b.position().xy() - a.position().xy();
    const double bb = step.x * step.x + step.y * step.y;
    // Several cuts may fall inside one sample interval when samples are sparse.
    while (bb > 0.0) {
      const Point2 off = a.position().xy() - cut.pos.xy();
      const double ab = off.x * step.x + off.y * step.y;
      const double c = off.x * off.x + off.y * off.y - L * L;
      const double disc = ab * ab - bb * c;
      const double alpha = (-ab + std::sqrt(std::max(0.0, disc))) / bb;
      if (!(alpha <= 1.0 + 1e-9)) break;
      const double u = std::min(alpha, 1.0);
      CutPoint next;
      if (u == 1.0) {
        next = {b.position(), b.t};
      } else {
        next.t = a.t + u * (b.t - a.t);
        next.pos = {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), a.z + u * (b.z - a.z)};
      }
      if (!(next.t > cut.t)) break;
      emit(next);
      cut = next;
      interior.clear();
      if (u == 1.0) break;
    }
    if (b.t > cut.t) interior.push_back(b.position().xy());
  }
  return segments;
}

void write_telemetry_csv(const TelemetryLog& log, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << "t_s,x_m,y_m,z_m,voltage_v,current_a\n";
  for (const auto& s : log.samples()) {
    csv::write_row(out, {s.t, s.x, s.y, s.z, s.voltage, s.current});
  }
  if (!out) throw IoError("failed writing " + file.string());
}

TelemetryLog read_telemetry_csv(const std::filesystem::path& file) {
  const auto table =
      csv::read(file, {"t_s", "x_m", "y_m", "z_m", "voltage_v", "current_a"});
  std::vector<TelemetrySample> samples;
  samples.reserve(table.rows.size());
  for (const auto& r : table.rows) samples.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
  return TelemetryLog(std::move(samples));
}

void write_segments_csv(std::span<const PathSegment> segments, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << "px,py,pz,qx,qy,qz,heading_rad,length_m,energy_j,energy_scaled\n";
  for (const auto& g : segments) {
    csv::write_row(out, {g.p.x, g.p.y, g.p.z, g.q.x, g.q.y, g.q.z, g.heading, g.length_h,
                         g.energy_j, g.energy_scaled});
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<PathSegment> read_segments_csv(const std::filesystem::path& file) {
  const auto table = csv::read(file, {"px", "py", "pz", "qx", "qy", "qz", "heading_rad",
                                      "length_m", "energy_j", "energy_scaled"});
  std::vector<PathSegment> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    PathSegment g;
    g.p = {r[0], r[1], r[2]};
    g.q = {r[3], r[4], r[5]};
    g.heading = r[6];
    g.length_h = r[7];
    g.energy_j = r[8];
    g.energy_scaled = r[9];
    out.push_back(g);
  }
  return out;
}

}  // namespace terrain_energy
