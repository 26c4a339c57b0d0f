// terrain-energy: command-line front end over the terrain_energy library.
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "terrain_energy/errors.hpp"
#include "terrain_energy/evaluation.hpp"
#include "terrain_energy/heightmap_io.hpp"
#include "terrain_energy/learned_model.hpp"
#include "terrain_energy/patch.hpp"
#include "terrain_energy/physics_model.hpp"
#include "terrain_energy/planner.hpp"
#include "terrain_energy/scenario.hpp"
#include "terrain_energy/synthworld.hpp"
#include "terrain_energy/telemetry.hpp"

namespace fs = std::filesystem;
using namespace terrain_energy;

namespace {

// Parent directory of an output file, created on demand.
fs::path prepare_file(const fs::path& file) {
  const auto dir = file.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  return file;
}

// Secondary outputs must live next to the primary --out file.
void require_beside(const fs::path& extra, const fs::path& out) {
  const auto base = fs::weakly_canonical(fs::absolute(out).parent_path());
  const auto target = fs::weakly_canonical(fs::absolute(extra));
  const auto rel = target.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") {
    throw ValidationError(extra.string() + " must be inside the directory of --out");
  }
}

Point2 parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("expected x,y but got '" + text + "'");
  try {
    std::size_t used = 0;
    const double x = std::stod(text.substr(0, comma), &used);
    const double y = std::stod(text.substr(comma + 1), &used);
    return {x, y};
  } catch (const std::exception&) {
    throw ValidationError("expected x,y but got '" + text + "'");
  }
}

PatchPredictor predictor_from_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ValidationError("predictor must be physics:<mu.json> or learned:<model.bin>");
  }
  const std::string kind = spec.substr(0, colon);
  const fs::path file = spec.substr(colon + 1);
  if (kind == "physics") {
    const auto fit = FrictionFit::from_json(read_json(file));
    PhysicsParams params;
    params.mu = fit.mu;
    params.mass = fit.mass;
    params.gravity = fit.gravity;
    return physics_predictor(params);
  }
  if (kind == "learned") {
    return learned_predictor(std::make_shared<const PatchRegressor>(PatchRegressor::load(file)));
  }
  throw ValidationError("unknown predictor kind '" + kind + "'");
}

Dataset load_dataset(const fs::path& terrain_dir, const fs::path& segments_file, std::size_t n) {
  const auto hm = read_heightmap(terrain_dir);
  const auto segments = read_segments_csv(segments_file);
  Dataset data = build_dataset(hm, segments, n);
  if (data.empty()) throw ValidationError("no segment of " + segments_file.string() + " fits the map");
  return data;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrain energy prediction: synthetic sites, models, cost maps and plans"};
  app.require_subcommand(1);

  // gen-terrain
  fs::path spec_file;
  fs::path out;
  bool csv_grid = false;
  auto* gen = app.add_subcommand("gen-terrain", "Generate a heightmap from a terrain spec");
  gen->add_option("--spec", spec_file, "Terrain spec JSON")->required();
  gen->add_option("--out", out, "Output heightmap directory")->required();
  gen->add_flag("--csv", csv_grid, "Write heights.csv instead of heights.f32");

  // simulate
  fs::path terrain_dir;
  fs::path model_file;
  MotionPlan motion;
  std::string pattern = "boustrophedon";
  double rate = kDefaultLogRate;
  auto* sim = app.add_subcommand("simulate", "Drive the ground-truth oracle over a heightmap");
  sim->add_option("--terrain", terrain_dir, "Heightmap directory")->required();
  sim->add_option("--model", model_file, "Ground-truth model JSON")->required();
  sim->add_option("--pattern", pattern, "boustrophedon or random")
      ->check(CLI::IsMember({"boustrophedon", "random"}));
  sim->add_option("--spacing", motion.row_spacing, "Boustrophedon pass spacing, m");
  sim->add_option("--waypoints", motion.waypoints, "Random waypoint count");
  sim->add_option("--seed", motion.seed, "Random waypoint seed");
  sim->add_option("--margin", motion.margin, "Distance kept from the map edge, m");
  sim->add_option("--rate", rate, "Log rate, Hz");
  sim->add_option("--out", out, "Telemetry CSV")->required();

  // segment
  fs::path log_file;
  SegmentationOptions seg_options;
  bool keep_curved = false;
  auto* seg = app.add_subcommand("segment", "Cut a telemetry log into unit segments");
  seg->add_option("--log", log_file, "Telemetry CSV")->required();
  seg->add_option("--terrain", terrain_dir, "Drop segments whose patch leaves this heightmap");
  seg->add_option("--unit", seg_options.unit_length, "Segment length, m");
  seg->add_option("--max-gap", seg_options.max_gap_s, "Longest tolerated sample gap, s");
  seg->add_option("--max-deviation", seg_options.max_deviation_m, "Straightness limit, m");
  seg->add_flag("--keep-curved", keep_curved, "Keep segments that exceed the straightness limit");
  seg->add_option("--out", out, "Segments CSV")->required();

  // fit-physics
  fs::path segments_file;
  double mass = kDefaultMass;
  double gravity = kStandardGravity;
  auto* fitc = app.add_subcommand("fit-physics", "Least-squares friction fit");
  fitc->add_option("--segments", segments_file, "Segments CSV")->required();
  fitc->add_option("--mass", mass, "Robot mass, kg");
  fitc->add_option("--gravity", gravity, "Gravity, m/s^2");
  fitc->add_option("--out", out, "Friction JSON")->required();

  // train / fine-tune
  fs::path config_file;
  fs::path arch_file;
  fs::path from_file;
  auto* trainc = app.add_subcommand("train", "Train the patch regressor");
  trainc->add_option("--segments", segments_file, "Segments CSV")->required();
  trainc->add_option("--terrain", terrain_dir, "Heightmap directory")->required();
  trainc->add_option("--config", config_file, "Train config JSON");
  trainc->add_option("--arch", arch_file, "Architecture JSON");
  trainc->add_option("--out", out, "Model file")->required();
  auto* tune = app.add_subcommand("fine-tune", "Continue training a saved regressor");
  tune->add_option("--from", from_file, "Source model file")->required();
  tune->add_option("--segments", segments_file, "Segments CSV")->required();
  tune->add_option("--terrain", terrain_dir, "Heightmap directory")->required();
  tune->add_option("--config", config_file, "Train config JSON");
  tune->add_option("--out", out, "Model file")->required();

  // predict
  fs::path mu_file;
  auto* pred = app.add_subcommand("predict", "Predict scaled energy per segment");
  auto* pred_model = pred->add_option("--model", model_file, "Learned model file");
  pred->add_option("--mu", mu_file, "Friction JSON (physics prediction)")->excludes(pred_model);
  pred->add_option("--terrain", terrain_dir, "Heightmap directory");
  pred->add_option("--segments", segments_file, "Segments CSV")->required();
  pred->add_option("--out", out, "Predictions CSV")->required();

  // build-map
  std::string predictor_spec;
  double cell_size = 1.0;
  std::size_t neighborhood = 8;
  auto* map = app.add_subcommand("build-map", "Directional energy cost map");
  map->add_option("--terrain", terrain_dir, "Heightmap directory")->required();
  map->add_option("--predictor", predictor_spec, "physics:mu.json or learned:model.bin")->required();
  map->add_option("--cell", cell_size, "Cell size, m");
  map->add_option("--neighborhood", neighborhood, "4, 8 or 16")->check(CLI::IsMember({4, 8, 16}));
  map->add_option("--out", out, "Cost map directory")->required();

  // plan
  fs::path costmap_dir;
  std::string start_text;
  std::string goal_text;
  fs::path svg_file;
  auto* plan = app.add_subcommand("plan", "Minimum-energy path on a cost map");
  plan->add_option("--costmap", costmap_dir, "Cost map directory")->required();
  plan->add_option("--start", start_text, "Start x,y in meters")->required();
  plan->add_option("--goal", goal_text, "Goal x,y in meters")->required();
  plan->add_option("--out", out, "Plan CSV")->required();
  plan->add_option("--svg", svg_file, "SVG overlay (needs --terrain)");
  plan->add_option("--terrain", terrain_dir, "Heightmap directory for the overlay");

  // evaluate
  fs::path preds_file;
  double epsilon = kDefaultEpsilonFloor;
  auto* eval = app.add_subcommand("evaluate", "Relative error of predictions");
  eval->add_option("--preds", preds_file, "Predictions CSV")->required();
  eval->add_option("--segments", segments_file, "Segments CSV")->required();
  eval->add_option("--epsilon", epsilon, "Exclude |truth| below this");
  eval->add_option("--out", out, "Report JSON (per-segment CSV written beside it)")->required();

  // repro
  fs::path scenario_file;
  auto* repro = app.add_subcommand("repro", "Run a whole scenario and print its summary");
  repro->add_option("--scenario", scenario_file, "Scenario JSON")->required();
  repro->add_option("--out", out, "Output directory (default: the scenario's output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto spec = TerrainSpec::from_json(read_json(spec_file));
      write_heightmap(generate_terrain(spec), out,
                      csv_grid ? GridEncoding::kCsv : GridEncoding::kFloat32);
    } else if (*sim) {
      const auto hm = read_heightmap(terrain_dir);
      const auto model = GroundTruthModel::from_json(read_json(model_file));
      motion.pattern = pattern == "random" ? MotionPattern::kRandom : MotionPattern::kBoustrophedon;
      const auto waypoints = motion_waypoints(hm, motion);
      write_telemetry_csv(simulate_run(hm, model, waypoints, rate), prepare_file(out));
    } else if (*seg) {
      const auto log = read_telemetry_csv(log_file);
      const auto all = segment_trajectory(log, seg_options);
      std::optional<Heightmap> hm;
      if (!terrain_dir.empty()) hm = read_heightmap(terrain_dir);
      std::vector<PathSegment> kept;
      for (const auto& s : all) {
        if (s.curved && !keep_curved) continue;
        if (hm && !patch_fits(*hm, s.p.xy(), s.heading, s.length_h)) continue;
        kept.push_back(s);
      }
      write_segments_csv(kept, prepare_file(out));
      std::cout << kept.size() << " of " << all.size() << " segments kept\n";
    } else if (*fitc) {
      const auto segments = read_segments_csv(segments_file);
      const auto fit = fit_friction(observations_from_segments(segments), mass, gravity);
      write_json(prepare_file(out), fit.to_json());
      std::cout << "mu = " << fit.mu << " from " << fit.n << " segments\n";
    } else if (*trainc) {
      const auto config = config_file.empty() ? TrainConfig{} : TrainConfig::from_json(read_json(config_file));
      const auto arch = arch_file.empty() ? Architecture{} : architecture_from_json(read_json(arch_file));
      const auto data = load_dataset(terrain_dir, segments_file, arch.input_n);
      const auto result = train(data, config, arch);
      result.model.save(prepare_file(out));
      write_model_sidecar(out, config, arch, result.report);
      std::cout << "trained on " << data.size() << " patches, final loss "
                << result.report.epoch_loss.back() << '\n';
    } else if (*tune) {
      auto config = config_file.empty() ? TrainConfig{} : TrainConfig::from_json(read_json(config_file));
      config.mode = TrainMode::kFineTune;
      auto model = PatchRegressor::load(from_file);
      const auto data = load_dataset(terrain_dir, segments_file, model.input_n());
      const auto arch = model.architecture();
      const auto result = fine_tune(std::move(model), data, config);
      result.model.save(prepare_file(out));
      write_model_sidecar(out, config, arch, result.report);
      std::cout << "fine-tuned on " << data.size() << " patches, final loss "
                << result.report.epoch_loss.back() << '\n';
    } else if (*pred) {
      const auto segments = read_segments_csv(segments_file);
      std::vector<double> predictions;
      if (!mu_file.empty()) {
        const auto fit = FrictionFit::from_json(read_json(mu_file));
        PhysicsParams params;
        params.mu = fit.mu;
        params.mass = fit.mass;
        params.gravity = fit.gravity;
        predictions = physics_predictions(segments, params);
      } else if (!model_file.empty()) {
        if (terrain_dir.empty()) throw ValidationError("learned prediction needs --terrain");
        const auto model = PatchRegressor::load(model_file);
        const auto hm = read_heightmap(terrain_dir);
        std::vector<HeightPatch> patches;
        patches.reserve(segments.size());
        for (const auto& s : segments) patches.push_back(patch_for_segment(hm, s, model.input_n()));
        predictions = model.predict(patches);
      } else {
        throw ValidationError("predict needs --model or --mu");
      }
      write_predictions_csv(predictions, prepare_file(out));
    } else if (*map) {
      const auto hm = read_heightmap(terrain_dir);
      const auto predictor = predictor_from_spec(predictor_spec);
      write_cost_map(build_cost_map(hm, predictor, cell_size, neighborhood), out);
    } else if (*plan) {
      const auto cost_map = read_cost_map(costmap_dir);
      const Cell start = cost_map.cell_at(parse_point(start_text));
      const Cell goal = cost_map.cell_at(parse_point(goal_text));
      if (!svg_file.empty()) {
        if (terrain_dir.empty()) throw ValidationError("--svg needs --terrain");
        require_beside(svg_file, out);
      }
      const auto result = plan_min_energy(cost_map, start, goal);
      write_plan_csv(cost_map, result, prepare_file(out));
      if (!svg_file.empty()) write_plan_svg(read_heightmap(terrain_dir), cost_map, result, svg_file);
      std::cout << result.per_edge.size() << " edges, total cost " << result.total_cost << '\n';
    } else if (*eval) {
      const auto predictions = read_predictions_csv(preds_file);
      const auto segments = read_segments_csv(segments_file);
      const auto report = evaluate(predictions, scaled_energies(segments), epsilon);
      write_json(prepare_file(out), report.to_json());
      auto per_segment = out;
      per_segment.replace_extension(".csv");
      write_eval_csv(report, per_segment);
      std::printf("mean relative error %.4f over %zu segments (%zu excluded)\n",
                  report.mean_rel_error, report.n_used, report.n_excluded);
    } else if (*repro) {
      const auto config = ScenarioConfig::load(scenario_file);
      const auto result = run_scenario(config, out);
      std::cout << "scenario " << config.name << '\n';
      for (const auto& line : result.table) std::cout << "  " << line << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const OutOfBoundsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
