#ifndef TERRAIN_ENERGY_TELEMETRY_HPP
#define TERRAIN_ENERGY_TELEMETRY_HPP

#include <filesystem>
#include <span>
#include <vector>

#include "terrain_energy/geometry.hpp"

namespace terrain_energy {

/// Nominal battery voltage used to scale energies into network targets.
inline constexpr double kNominalVoltage = 28.8;
inline constexpr double kDefaultLogRate = 10.0;

struct TelemetrySample {
  double t = 0.0;  // s
  double x = 0.0;  // m
  double y = 0.0;
  double z = 0.0;
  double voltage = 0.0;  // V
  double current = 0.0;  // A

  Point3 position() const { return {x, y, z}; }
  double power() const { return voltage * current; }
};

/// Time-ordered battery and position log. Timestamps strictly increase.
class TelemetryLog {
 public:
  TelemetryLog() = default;
  /// Throws ValidationError on non-increasing time, non-finite fields or
  /// negative voltage.
  explicit TelemetryLog(std::vector<TelemetrySample> samples, double nominal_rate = kDefaultLogRate);

  std::span<const TelemetrySample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double nominal_rate() const { return nominal_rate_; }
  double start_time() const { return samples_.front().t; }
  double end_time() const { return samples_.back().t; }

  /// Horizontal polyline length of the recorded track.
  double horizontal_arc_length() const;

 private:
  std::vector<TelemetrySample> samples_;
  double nominal_rate_ = kDefaultLogRate;
};

/// One unit chord of a trajectory with the energy measured while driving it.
struct PathSegment {
  Point3 p;
  Point3 q;
  double heading = 0.0;   // bearing of q - p
  double length_h = 0.0;  // horizontal chord length, m
  double energy_j = 0.0;
  double energy_scaled = 0.0;  // energy_j / kNominalVoltage
  double t_start = 0.0;
  double t_end = 0.0;
  double max_deviation = 0.0;  // farthest interior track point from the chord, m
  bool curved = false;         // max_deviation above the segmentation limit

  Point2 midpoint() const { return {0.5 * (p.x + q.x), 0.5 * (p.y + q.y)}; }
  /// atan2(q_z - p_z, length_h).
  double endpoint_slope() const;
};

struct SegmentationOptions {
  double unit_length = 1.0;
  double max_gap_s = 0.5;
  double max_deviation_m = 0.2;
};

/// Trapezoidal integral of V*I over [t0, t1]. Power is linearly
/// interpolated at interval ends that fall between samples.
double integrate_energy(const TelemetryLog& log, double t0, double t1);

/// Cuts the track into chords of horizontal length `unit_length`.
///
/// Each cut is placed where the chord from the previous cut first reaches the
/// unit length, interpolating linearly between samples. A sample gap longer
/// than `max_gap_s` abandons the segment in progress; the trailing partial
/// chord is dropped.
std::vector<PathSegment> segment_trajectory(const TelemetryLog& log,
                                            const SegmentationOptions& options = {});

inline double scale_energy(double energy_j) { return energy_j / kNominalVoltage; }

// CSV: header t_s,x_m,y_m,z_m,voltage_v,current_a
void write_telemetry_csv(const TelemetryLog& log, const std::filesystem::path& file);
TelemetryLog read_telemetry_csv(const std::filesystem::path& file);

// CSV: header px,py,pz,qx,qy,qz,heading_rad,length_m,energy_j,energy_scaled
void write_segments_csv(std::span<const PathSegment> segments, const std::filesystem::path& file);
std::vector<PathSegment> read_segments_csv(const std::filesystem::path& file);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_TELEMETRY_HPP
