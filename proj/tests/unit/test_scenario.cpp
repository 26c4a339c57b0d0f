#include <fstream>

#include "terrain_energy/errors.hpp"
#include "terrain_energy/scenario.hpp"
#include "test_support.hpp"

using namespace terrain_energy;

namespace {

const std::filesystem::path kScenarios = TE_SCENARIO_DIR;

// A small, fast scenario exercising every predictor and the transfer study.
nlohmann::json quick_doc() {
  return nlohmann::json::parse(R"({
    "name": "quick",
    "site": {
      "terrain": {"width": 18, "height": 12, "roughness_amp": 0.02, "seed": 1},
      "oracle": {"mu_min": 0.12, "mu_max": 0.18, "roughness_gain": 4, "roughness_radius": 0.25, "seed": 11}
    },
    "second_site": {
      "terrain": {"width": 18, "height": 12, "roughness_amp": 0.02, "seed": 2},
      "oracle": {"mu_min": 0.12, "mu_max": 0.18, "roughness_gain": 4, "roughness_radius": 0.25, "seed": 12}
    },
    "transfer": {
      "site": {
        "terrain": {"width": 18, "height": 12, "roughness_amp": 0.02, "seed": 3},
        "oracle": {"mu_min": 0.08, "mu_max": 0.1, "roughness_gain": 4, "roughness_radius": 0.25, "seed": 13}
      },
      "fine_tune": {"learning_rate": 0.003, "epochs": 3, "seed": 4}
    },
    "motion": {"pattern": "boustrophedon", "row_spacing": 2.0, "margin": 1.5},
    "architecture": {"input_n": 8, "conv_channels": [4], "head_widths": [8, 1], "height_scale": 0.05},
    "train": {"learning_rate": 0.003, "epochs": 3, "seed": 3},
    "predictors": ["physics", "rolling", "learned"]
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(ScenarioConfig, BundledScenariosLoad) {
  for (const char* name : {"default.json", "rough.json", "constant_mu.json"}) {
    const auto c = ScenarioConfig::load(kScenarios / name);
    EXPECT_FALSE(c.name.empty());
    EXPECT_FALSE(c.predictors.empty());
  }
  const auto rough = ScenarioConfig::load(kScenarios / "rough.json");
  EXPECT_TRUE(rough.transfer.has_value());
  EXPECT_TRUE(rough.wants("learned"));
  EXPECT_FALSE(ScenarioConfig::load(kScenarios / "constant_mu.json").wants("learned"));
}

TEST(ScenarioConfig, UnknownKeysRejected) {
  auto doc = quick_doc();
  doc["colour"] = "red";
  EXPECT_THROW(ScenarioConfig::from_json(doc), ValidationError);
  doc = quick_doc();
  doc["site"]["terrain"]["widht"] = 3;
  EXPECT_THROW(ScenarioConfig::from_json(doc), ValidationError);
  doc = quick_doc();
  doc["motion"]["speed"] = 1;
  EXPECT_THROW(ScenarioConfig::from_json(doc), ValidationError);
  doc = quick_doc();
  doc["train"]["lr"] = 1;
  EXPECT_THROW(ScenarioConfig::from_json(doc), ValidationError);
  doc = quick_doc();
  doc["predictors"] = {"oracle"};
  EXPECT_THROW(ScenarioConfig::from_json(doc), ValidationError);
}

TEST(ScenarioConfig, JsonRoundTrip) {
  const auto c = ScenarioConfig::from_json(quick_doc());
  const auto back = ScenarioConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.architecture.input_n, 8u);
  EXPECT_EQ(back.train.epochs, 3u);
  EXPECT_EQ(back.transfer->fine_tune.epochs, 3u);
}

TEST(ScenarioConfig, MissingFile) {
  EXPECT_THROW(ScenarioConfig::load("/nonexistent/scenario.json"), IoError);
}

TEST(MotionWaypoints, StayInsideMargin) {
  TerrainSpec spec;
  spec.width = 20;
  spec.height = 10;
  const auto hm = generate_terrain(spec);
  MotionPlan m;
  m.row_spacing = 2.0;
  for (const auto& p : motion_waypoints(hm, m)) {
    EXPECT_GE(p.x, hm.extent().min_x + 1.5 - 1e-9);
    EXPECT_LE(p.x, hm.extent().max_x - 1.5 + 1e-9);
  }
  m.pattern = MotionPattern::kRandom;
  m.waypoints = 25;
  const auto r = motion_waypoints(hm, m);
  EXPECT_EQ(r.size(), 25u);
  EXPECT_THROW(MotionPlan::from_json({{"pattern", "spiral"}}), ValidationError);
}

TEST(SimulateSite, SegmentsAreStraightAndFit) {
  const auto c = ScenarioConfig::from_json(quick_doc());
  const auto data = simulate_site(c.site, c.motion, c.segmentation);
  EXPECT_GT(data.segments.size(), 50u);
  EXPECT_LE(data.segments.size(), data.segments_total);
  for (const auto& s : data.segments) {
    EXPECT_FALSE(s.curved);
    EXPECT_TRUE(patch_fits(data.terrain, s.p.xy(), s.heading, s.length_h));
  }
}

TEST(PhysicsPredictions, ScaledEnergyPerSegment) {
  PathSegment s;
  s.p = {0, 0, 0};
  s.q = {1, 0, 0};
  s.length_h = 1.0;
  PhysicsParams p;
  p.mu = 0.2;
  const auto out = physics_predictions(std::span(&s, 1), p);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], scale_energy(predict_energy(p, 0.0, 1.0)));
}

TEST(RunScenario, WritesArtifactsAndIsReproducible) {
  te_test::TempDir tmp;
  const auto c = ScenarioConfig::from_json(quick_doc());
  const auto a = run_scenario(c, tmp / "a");
  const auto b = run_scenario(c, tmp / "b");
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(slurp(tmp / "a" / "report.json"), slurp(tmp / "b" / "report.json"));
  for (const char* f : {"report.json", "log.csv", "segments.csv", "model.bin", "model.bin.json",
                        "eval_physics_held_out.csv", "eval_learned_held_out.csv",
                        "eval_rolling_held_out.csv", "terrain/meta.json"}) {
    EXPECT_TRUE(std::filesystem::exists(tmp / "a" / f)) << f;
  }
  const auto& res = a.report.at("results");
  for (const char* k : {"physics_held_out", "physics_second_site", "rolling_held_out", "learned_held_out",
                        "learned_second_site", "transfer_raw", "transfer_calibrated", "transfer_fine_tuned"}) {
    ASSERT_TRUE(res.contains(k)) << k;
    EXPECT_GE(res.at(k).at("n_used").get<std::size_t>(), 1u);
  }
  EXPECT_FALSE(a.table.empty());
}

TEST(RunScenario, ConstantMuRecoversFriction) {
  te_test::TempDir tmp;
  auto doc = nlohmann::json::parse(slurp(kScenarios / "constant_mu.json"));
  doc["site"]["oracle"]["noise_sigma"] = 0.0;
  doc["predictors"] = {"physics"};
  const auto r = run_scenario(ScenarioConfig::from_json(doc), tmp / "c");
  EXPECT_NEAR(r.report.at("physics_mu").get<double>(), 0.15, 1e-3);
}

TEST(TraceSvg, Writes) {
  te_test::TempDir tmp;
  const std::vector<double> p{1, 2, 3}, t{1.5, 2, 2.5};
  write_trace_svg(p, t, tmp / "t.svg");
  EXPECT_NE(slurp(tmp / "t.svg").find("<svg"), std::string::npos);
}
