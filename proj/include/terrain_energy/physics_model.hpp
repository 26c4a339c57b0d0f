#ifndef TERRAIN_ENERGY_PHYSICS_MODEL_HPP
#define TERRAIN_ENERGY_PHYSICS_MODEL_HPP

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "terrain_energy/telemetry.hpp"

namespace terrain_energy {

inline constexpr double kStandardGravity = 9.80665;
inline constexpr double kDefaultMass = 20.0;
inline constexpr double kDefaultSpeed = 0.5;

/// Friction-plus-gravity energy model. Only the product mu*m*g is
/// identifiable from energy measurements, so the assumed mass cancels out of
/// any fit-then-predict comparison.
struct PhysicsParams {
  double mu = 0.0;
  double mass = kDefaultMass;
  double gravity = kStandardGravity;
  double speed = kDefaultSpeed;

  void validate() const;
};

/// (mu*m*g*cos(slope) + m*g*sin(slope)) * d, in joules. Negative on steep
/// downhill; callers decide whether to clamp.
double predict_energy(const PhysicsParams& params, double slope, double d);

struct FrictionObservation {
  double slope = 0.0;  // rad
  double d = 0.0;      // m
  double energy_j = 0.0;
};

struct FrictionFit {
  double mu = 0.0;
  double rss = 0.0;  // sum of squared residuals, J^2
  std::size_t n = 0;
  double mass = kDefaultMass;
  double gravity = kStandardGravity;

  nlohmann::json to_json() const;
  static FrictionFit from_json(const nlohmann::json& doc);
};

/// Closed-form least squares for mu: with c_i = m g cos(s_i) d_i and
/// s_i' = m g sin(s_i) d_i, mu = sum c_i (E_i - s_i') / sum c_i^2.
FrictionFit fit_friction(std::span<const FrictionObservation> observations, double mass,
                         double gravity = kStandardGravity);

/// Sum of squared residuals of `mu` against the observations.
double friction_rss(std::span<const FrictionObservation> observations, double mu, double mass,
                    double gravity);

std::vector<FrictionObservation> observations_from_segments(std::span<const PathSegment> segments);

struct EnergyPair {
  double predicted_j = 0.0;
  double actual_j = 0.0;
};

/// Fits mu on each block of ceil(window_m / unit_length) consecutive segments
/// and predicts the block that follows. Segments must be in trajectory order.
/// A trailing partial block is predicted but never fitted on.
std::vector<EnergyPair> rolling_fit_predict(std::span<const PathSegment> segments,
                                            const PhysicsParams& params_template,
                                            double window_m = 5.0, double unit_length = 1.0);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_PHYSICS_MODEL_HPP
