#include "terrain_energy/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "terrain_energy/csv.hpp"
#include "terrain_energy/errors.hpp"

namespace terrain_energy {

double relative_error(double pred, double truth, double epsilon_floor) {
  if (!(std::abs(truth) >= epsilon_floor)) {
    throw ValidationError("ground truth " + csv::number(truth) + " is below the epsilon floor");
  }
  return std::abs(pred - truth) / std::abs(truth);
}

nlohmann::json EvalReport::to_json() const {
  return {{"mean_rel_error", mean_rel_error},
          {"n_used", n_used},
          {"n_excluded", n_excluded},
          {"epsilon_floor", epsilon_floor}};
}

EvalReport evaluate(std::span<const double> predictions, std::span<const double> truths,
                    double epsilon_floor) {
  if (predictions.size() != truths.size()) {
    throw ValidationError("predictions and ground truths differ in length");
  }
  if (!(epsilon_floor >= 0.0)) throw ValidationError("epsilon floor must be non-negative");
  EvalReport report;
  report.epsilon_floor = epsilon_floor;
  report.per_segment.reserve(truths.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    SegmentError s{predictions[i], truths[i], std::numeric_limits<double>::quiet_NaN(), false};
    if (std::abs(truths[i]) >= epsilon_floor) {
      s.relative_error = relative_error(predictions[i], truths[i], epsilon_floor);
      s.used = true;
      sum += s.relative_error;
      ++report.n_used;
    } else {
      ++report.n_excluded;
    }
    report.per_segment.push_back(s);
  }
  if (report.n_used == 0) throw ValidationError("every segment fell below the epsilon floor");
  report.mean_rel_error = sum / static_cast<double>(report.n_used);
  return report;
}

void write_eval_csv(const EvalReport& report, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << "index,pred,truth,rel_err,used\n";
  for (std::size_t i = 0; i < report.per_segment.size(); ++i) {
    const auto& s = report.per_segment[i];
    out << i << ',' << csv::number(s.prediction) << ',' << csv::number(s.truth) << ','
        << (s.used ? csv::number(s.relative_error) : std::string("nan")) << ','
        << (s.used ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing " + file.string());
}

Axis axis_from_string(const std::string& name) {
  if (name == "x") return Axis::kX;
  if (name == "y") return Axis::kY;
  throw ValidationError("axis must be 'x' or 'y', got '" + name + "'");
}

RegionSplit split_by_region(std::span<const PathSegment> segments, Axis axis, double fraction) {
  if (segments.empty()) throw ValidationError("cannot split an empty segment list");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must be in (0, 1)");
  const auto coord = [axis](const PathSegment& s) {
    const Point2 m = s.midpoint();
    return axis == Axis::kX ? m.x : m.y;
  };
  double lo = coord(segments.front());
  double hi = lo;
  for (const auto& s : segments) {
    lo = std::min(lo, coord(s));
    hi = std::max(hi, coord(s));
  }
  RegionSplit split;
  split.boundary = lo + fraction * (hi - lo);
  for (const auto& s : segments) {
    (coord(s) < split.boundary ? split.train : split.test).push_back(s);
  }
  if (split.train.empty() || split.test.empty()) {
    throw ValidationError("regional split left one side empty");
  }
  return split;
}

void write_predictions_csv(std::span<const double> predictions, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << "index,pred\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    csv::write_row(out, {static_cast<double>(i), predictions[i]});
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<double> read_predictions_csv(const std::filesystem::path& file) {
  const auto table = csv::read(file, {"index", "pred"});
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(row[1]);
  return out;
}

std::vector<double> scaled_energies(std::span<const PathSegment> segments) {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.energy_scaled);
  return out;
}

}  // namespace terrain_energy
