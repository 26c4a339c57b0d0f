#include "terrain_energy/physics_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "terrain_energy/errors.hpp"

namespace terrain_energy {

void PhysicsParams::validate() const {
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  if (!(gravity > 0.0)) throw ValidationError("gravity must be positive");
  if (!(speed > 0.0)) throw ValidationError("speed must be positive");
  if (!std::isfinite(mu)) throw ValidationError("friction coefficient must be finite");
}

double predict_energy(const PhysicsParams& params, double slope, double d) {
  if (!(d > 0.0)) throw ValidationError("travel distance must be positive");
  if (!(std::abs(slope) < 0.5 * std::numbers::pi)) {
    throw ValidationError("slope must lie strictly between -pi/2 and pi/2");
  }
  const double mg = params.mass * params.gravity;
  return (params.mu * mg * std::cos(slope) + mg * std::sin(slope)) * d;
}

nlohmann::json FrictionFit::to_json() const {
  return {{"mu", mu}, {"rss", rss}, {"n", n}, {"mass_kg", mass}, {"gravity", gravity}};
}

FrictionFit FrictionFit::from_json(const nlohmann::json& doc) {
  FrictionFit fit;
  try {
    fit.mu = doc.at("mu").get<double>();
    fit.rss = doc.value("rss", 0.0);
    fit.n = doc.value("n", std::size_t{0});
    fit.mass = doc.at("mass_kg").get<double>();
    fit.gravity = doc.value("gravity", kStandardGravity);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("friction report: ") + e.what());
  }
  return fit;
}

double friction_rss(std::span<const FrictionObservation> observations, double mu, double mass,
                    double gravity) {
  const double mg = mass * gravity;
  double rss = 0.0;
  for (const auto& o : observations) {
    const double r = o.energy_j - (mu * mg * std::cos(o.slope) + mg * std::sin(o.slope)) * o.d;
    rss += r * r;
  }
  return rss;
}

FrictionFit fit_friction(std::span<const FrictionObservation> observations, double mass,
                         double gravity) {
  if (observations.empty()) throw ValidationError("friction fit needs observations");
  if (!(mass > 0.0) || !(gravity > 0.0)) {
    throw ValidationError("friction fit needs positive mass and gravity");
  }
  const double mg = mass * gravity;
  double num = 0.0;
  double den = 0.0;
  for (const auto& o : observations) {
    const double c = mg * std::cos(o.slope) * o.d;
    const double s = mg * std::sin(o.slope) * o.d;
    num += c * (o.energy_j - s);
    den += c * c;
  }
  if (!(den > 0.0)) throw ValidationError("friction fit design is degenerate");
  FrictionFit fit;
  fit.mu = num / den;
  fit.n = observations.size();
  fit.mass = mass;
  fit.gravity = gravity;
  fit.rss = friction_rss(observations, fit.mu, mass, gravity);
  return fit;
}

std::vector<FrictionObservation> observations_from_segments(std::span<const PathSegment> segments) {
  std::vector<FrictionObservation> obs;
  obs.reserve(segments.size());
  for (const auto& s : segments) obs.push_back({s.endpoint_slope(), s.length_h, s.energy_j});
  return obs;
}

std::vector<EnergyPair> rolling_fit_predict(std::span<const PathSegment> segments,
                                            const PhysicsParams& params_template, double window_m,
                                            double unit_length) {
  params_template.validate();
  if (!(window_m > 0.0) || !(unit_length > 0.0)) {
    throw ValidationError("rolling fit window and unit length must be positive");
  }
  const auto block = static_cast<std::size_t>(std::ceil(window_m / unit_length - 1e-9));
  if (segments.size() < 2 * block) {
    throw ValidationError("rolling fit needs at least " + std::to_string(2 * block) +
                          " segments, got " + std::to_string(segments.size()));
  }
  const auto obs = observations_from_segments(segments);
  std::vector<EnergyPair> out;
  for (std::size_t start = 0; start + block < obs.size(); start += block) {
    const auto fit = fit_friction(std::span(obs).subspan(start, block), params_template.mass,
                                  params_template.gravity);
    PhysicsParams params = params_template;
    params.mu = fit.mu;
    const std::size_t end = std::min(obs.size(), start + 2 * block);
    for (std::size_t i = start + block; i < end; ++i) {
      out.push_back({predict_energy(params, obs[i].slope, obs[i].d), obs[i].energy_j});
    }
  }
  return out;
}

}  // namespace terrain_energy
