#include "terrain_energy/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "terrain_energy/csv.hpp"
#include "terrain_energy/errors.hpp"
#include "terrain_energy/heightmap_io.hpp"
#include "terrain_energy/json_util.hpp"
#include "terrain_energy/patch.hpp"
#include "terrain_energy/physics_model.hpp"

namespace terrain_energy {

namespace fs = std::filesystem;

namespace {

nlohmann::json segmentation_to_json(const SegmentationOptions& o) {
  return {{"unit_length", o.unit_length},
          {"max_gap_s", o.max_gap_s},
          {"max_deviation_m", o.max_deviation_m}};
}

SegmentationOptions segmentation_from_json(const nlohmann::json& doc) {
  constexpr std::string_view ctx = "segmentation";
  require_known_keys(doc, {"unit_length", "max_gap_s", "max_deviation_m"}, ctx);
  SegmentationOptions o;
  read_optional(doc, "unit_length", o.unit_length, ctx);
  read_optional(doc, "max_gap_s", o.max_gap_s, ctx);
  read_optional(doc, "max_deviation_m", o.max_deviation_m, ctx);
  return o;
}

nlohmann::json summary(const EvalReport& r) { return r.to_json(); }

std::string table_line(const std::string& label, const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-28s %7.2f%%  (n=%zu, excluded %zu)", label.c_str(),
                100.0 * r.mean_rel_error, r.n_used, r.n_excluded);
  return buf;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Dataset dataset_of(const Heightmap& hm, std::span<const PathSegment> segments, std::size_t n) {
  Dataset d = build_dataset(hm, segments, n);
  if (d.size() != segments.size()) {
    throw ValidationError("internal: segment list contains patches outside the map");
  }
  return d;
}

}  // namespace

nlohmann::json MotionPlan::to_json() const {
  return {{"pattern", pattern == MotionPattern::kBoustrophedon ? "boustrophedon" : "random"},
          {"row_spacing", row_spacing},
          {"waypoints", waypoints},
          {"seed", seed},
          {"margin", margin}};
}

MotionPlan MotionPlan::from_json(const nlohmann::json& doc) {
  constexpr std::string_view ctx = "motion";
  require_known_keys(doc, {"pattern", "row_spacing", "waypoints", "seed", "margin"}, ctx);
  MotionPlan m;
  std::string pattern = "boustrophedon";
  read_optional(doc, "pattern", pattern, ctx);
  if (pattern == "boustrophedon") {
    m.pattern = MotionPattern::kBoustrophedon;
  } else if (pattern == "random") {
    m.pattern = MotionPattern::kRandom;
  } else {
    throw ValidationError("motion.pattern must be 'boustrophedon' or 'random'");
  }
  read_optional(doc, "row_spacing", m.row_spacing, ctx);
  read_optional(doc, "waypoints", m.waypoints, ctx);
  read_optional(doc, "seed", m.seed, ctx);
  read_optional(doc, "margin", m.margin, ctx);
  if (!(m.margin >= 0.0)) throw ValidationError("motion.margin must be non-negative");
  return m;
}

nlohmann::json Site::to_json() const {
  return {{"terrain", terrain.to_json()}, {"oracle", oracle.to_json()}};
}

Site Site::from_json(const nlohmann::json& doc) {
  require_known_keys(doc, {"terrain", "oracle"}, "site");
  Site s;
  if (doc.contains("terrain")) s.terrain = TerrainSpec::from_json(doc.at("terrain"));
  if (doc.contains("oracle")) s.oracle = GroundTruthModel::from_json(doc.at("oracle"));
  return s;
}

bool ScenarioConfig::wants(const std::string& predictor) const {
  return std::find(predictors.begin(), predictors.end(), predictor) != predictors.end();
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json doc = {{"name", name},
                        {"site", site.to_json()},
                        {"motion", motion.to_json()},
                        {"segmentation", segmentation_to_json(segmentation)},
                        {"split", {{"axis", split_axis == Axis::kX ? "x" : "y"},
                                   {"fraction", split_fraction}}},
                        {"architecture", architecture_to_json(architecture)},
                        {"train", train.to_json()},
                        {"predictors", predictors},
                        {"rolling_window_m", rolling_window_m},
                        {"epsilon_floor", epsilon_floor},
                        {"output_dir", output_dir.generic_string()}};
  if (second_site) doc["second_site"] = second_site->to_json();
  if (transfer) {
    doc["transfer"] = {{"site", transfer->site.to_json()},
                       {"fine_tune", transfer->fine_tune.to_json()}};
  }
  return doc;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& doc) {
  constexpr std::string_view ctx = "scenario";
  require_known_keys(doc,
                     {"name", "site", "second_site", "transfer", "motion", "segmentation", "split",
                      "architecture", "train", "predictors", "rolling_window_m", "epsilon_floor",
                      "output_dir"},
                     ctx);
  ScenarioConfig c;
  read_optional(doc, "name", c.name, ctx);
  if (doc.contains("site")) c.site = Site::from_json(doc.at("site"));
  if (doc.contains("second_site")) c.second_site = Site::from_json(doc.at("second_site"));
  if (doc.contains("transfer")) {
    const auto& t = doc.at("transfer");
    require_known_keys(t, {"site", "fine_tune"}, "transfer");
    TransferSpec spec;
    if (t.contains("site")) spec.site = Site::from_json(t.at("site"));
    if (t.contains("fine_tune")) spec.fine_tune = TrainConfig::from_json(t.at("fine_tune"));
    c.transfer = spec;
  }
  if (doc.contains("motion")) c.motion = MotionPlan::from_json(doc.at("motion"));
  if (doc.contains("segmentation")) c.segmentation = segmentation_from_json(doc.at("segmentation"));
  if (doc.contains("split")) {
    const auto& s = doc.at("split");
    require_known_keys(s, {"axis", "fraction"}, "split");
    std::string axis = "x";
    read_optional(s, "axis", axis, "split");
    c.split_axis = axis_from_string(axis);
    read_optional(s, "fraction", c.split_fraction, "split");
  }
  if (doc.contains("architecture")) c.architecture = architecture_from_json(doc.at("architecture"));
  if (doc.contains("train")) c.train = TrainConfig::from_json(doc.at("train"));
  read_optional(doc, "predictors", c.predictors, ctx);
  for (const auto& p : c.predictors) {
    if (p != "physics" && p != "rolling" && p != "learned") {
      throw ValidationError("unknown predictor '" + p + "' (physics, rolling, learned)");
    }
  }
  read_optional(doc, "rolling_window_m", c.rolling_window_m, ctx);
  read_optional(doc, "epsilon_floor", c.epsilon_floor, ctx);
  std::string out = c.output_dir.generic_string();
  read_optional(doc, "output_dir", out, ctx);
  c.output_dir = out;
  if (c.transfer && !c.wants("learned")) {
    throw ValidationError("a transfer experiment needs the learned predictor");
  }
  return c;
}

ScenarioConfig ScenarioConfig::load(const fs::path& file) { return from_json(read_json(file)); }

std::vector<Point2> motion_waypoints(const Heightmap& hm, const MotionPlan& motion) {
  const Rect b = hm.sampling_bounds();
  const Rect inner{b.min_x + motion.margin, b.min_y + motion.margin, b.max_x - motion.margin,
                   b.max_y - motion.margin};
  if (!(inner.width() > 0.0 && inner.height() > 0.0)) {
    throw ValidationError("motion margin leaves no room on the site");
  }
  if (motion.pattern == MotionPattern::kBoustrophedon) {
    return boustrophedon_waypoints(inner, motion.row_spacing);
  }
  return random_waypoints(inner, motion.waypoints, motion.seed);
}

SiteData simulate_site(const Site& site, const MotionPlan& motion,
                       const SegmentationOptions& segmentation) {
  SiteData data{generate_terrain(site.terrain), {}, {}, 0};
  const auto waypoints = motion_waypoints(data.terrain, motion);
  data.log = simulate_run(data.terrain, site.oracle, waypoints);
  const auto all = segment_trajectory(data.log, segmentation);
  data.segments_total = all.size();
  for (const auto& s : all) {
    if (s.curved || !patch_fits(data.terrain, s.p.xy(), s.heading, s.length_h)) continue;
    data.segments.push_back(s);
  }
  return data;
}

std::vector<double> physics_predictions(std::span<const PathSegment> segments,
                                        const PhysicsParams& params) {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    out.push_back(scale_energy(predict_energy(params, s.endpoint_slope(), s.length_h)));
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& config, fs::path out_dir) {
  if (out_dir.empty()) out_dir = config.output_dir;
  fs::create_directories(out_dir);
  ScenarioResult result;
  auto& report = result.report;
  report["scenario"] = config.name;
  const double eps = config.epsilon_floor;
  const std::size_t n = config.architecture.input_n;

  auto record = [&](const std::string& key, const std::string& label,
                    std::span<const double> preds, std::span<const double> truths) {
    const auto r = evaluate(preds, truths, eps);
    write_eval_csv(r, out_dir / ("eval_" + key + ".csv"));
    report["results"][key] = summary(r);
    result.table.push_back(table_line(label, r));
    return r;
  };

  const SiteData source = simulate_site(config.site, config.motion, config.segmentation);
  write_heightmap(source.terrain, out_dir / "terrain");
  write_telemetry_csv(source.log, out_dir / "log.csv");
  write_segments_csv(source.segments, out_dir / "segments.csv");
  const auto split = split_by_region(source.segments, config.split_axis, config.split_fraction);
  const auto truths = scaled_energies(split.test);
  report["segments"] = {{"total", source.segments_total},
                        {"usable", source.segments.size()},
                        {"train", split.train.size()},
                        {"test", split.test.size()},
                        {"split_boundary", split.boundary}};

  std::optional<SiteData> second;
  if (config.second_site) {
    second = simulate_site(*config.second_site, config.motion, config.segmentation);
    report["segments"]["second_site"] = second->segments.size();
  }

  PhysicsParams base;
  base.mass = config.site.oracle.mass;
  base.gravity = config.site.oracle.gravity;
  base.speed = config.site.oracle.speed;

  if (config.wants("physics")) {
    const auto fit = fit_friction(observations_from_segments(split.train), base.mass, base.gravity);
    write_json(out_dir / "mu.json", fit.to_json());
    report["physics_mu"] = fit.mu;
    PhysicsParams params = base;
    params.mu = fit.mu;
    record("physics_held_out", "physics, held-out region", physics_predictions(split.test, params),
           truths);
    if (second) {
      record("physics_second_site", "physics, second site",
             physics_predictions(second->segments, params), scaled_energies(second->segments));
    }
  }

  if (config.wants("rolling")) {
    const auto pairs = rolling_fit_predict(split.test, base, config.rolling_window_m,
                                           config.segmentation.unit_length);
    std::vector<double> preds;
    std::vector<double> actual;
    for (const auto& p : pairs) {
      preds.push_back(scale_energy(p.predicted_j));
      actual.push_back(scale_energy(p.actual_j));
    }
    record("rolling_held_out", "rolling fit, held-out region", preds, actual);
  }

  if (config.wants("learned")) {
    const Dataset train_set = dataset_of(source.terrain, split.train, n);
    TrainResult trained = train(train_set, config.train, config.architecture);
    trained.model.save(out_dir / "model.bin");
    write_model_sidecar(out_dir / "model.bin", config.train, config.architecture, trained.report);
    report["train_final_loss"] = trained.report.epoch_loss.back();

    const Dataset test_set = dataset_of(source.terrain, split.test, n);
    const auto preds = trained.model.predict(test_set.patches);
    record("learned_held_out", "learned, held-out region", preds, test_set.targets);
    write_trace_svg(preds, test_set.targets, out_dir / "trace_learned_held_out.svg");
    if (second) {
      const Dataset other = dataset_of(second->terrain, second->segments, n);
      record("learned_second_site", "learned, second site", trained.model.predict(other.patches),
             other.targets);
    }

    if (config.transfer) {
      const SiteData target =
          simulate_site(config.transfer->site, config.motion, config.segmentation);
      const auto tsplit = split_by_region(target.segments, config.split_axis, config.split_fraction);
      const Dataset tune_set = dataset_of(target.terrain, tsplit.train, n);
      const Dataset eval_set = dataset_of(target.terrain, tsplit.test, n);
      report["segments"]["transfer_train"] = tune_set.size();
      report["segments"]["transfer_test"] = eval_set.size();

      const auto raw = trained.model.predict(eval_set.patches);
      record("transfer_raw", "transfer, raw", raw, eval_set.targets);
      const auto calibrated = mean_shift_calibrate(raw, mean_of(tune_set.targets));
      record("transfer_calibrated", "transfer, mean-shift", calibrated, eval_set.targets);
      TrainResult tuned = fine_tune(trained.model, tune_set, config.transfer->fine_tune);
      tuned.model.save(out_dir / "model_fine_tuned.bin");
      write_model_sidecar(out_dir / "model_fine_tuned.bin", config.transfer->fine_tune,
                          config.architecture, tuned.report);
      record("transfer_fine_tuned", "transfer, fine-tuned", tuned.model.predict(eval_set.patches),
             eval_set.targets);
    }
  }

  write_json(out_dir / "report.json", report);
  return result;
}

void write_trace_svg(std::span<const double> predictions, std::span<const double> truths,
                     const fs::path& file) {
  if (predictions.size() != truths.size()) throw ValidationError("trace series differ in length");
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  constexpr double kWidth = 800.0;
  constexpr double kHeight = 300.0;
  double lo = 0.0;
  double hi = 1e-12;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    lo = std::min({lo, predictions[i], truths[i]});
    hi = std::max({hi, predictions[i], truths[i]});
  }
  const double dx = truths.size() > 1 ? kWidth / static_cast<double>(truths.size() - 1) : 0.0;
  auto polyline = [&](std::span<const double> ys, const char* colour) {
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      out << csv::number(static_cast<double>(i) * dx) << ','
          << csv::number(kHeight * (1.0 - (ys[i] - lo) / (hi - lo))) << ' ';
    }
    out << "\"/>\n";
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\">\n";
  polyline(truths, "black");
  polyline(predictions, "red");
  out << "</svg>\n";
}

}  // namespace terrain_energy
