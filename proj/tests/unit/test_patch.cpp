#include <cmath>
#include <numbers>

#include "terrain_energy/errors.hpp"
#include "terrain_energy/heightmap_io.hpp"
#include "terrain_energy/patch.hpp"
#include "terrain_energy/synthworld.hpp"
#include "test_support.hpp"

using namespace terrain_energy;
using te_test::field_map;

namespace {

double deg(double d) { return d * std::numbers::pi / 180.0; }

// Cone of unit slope with its apex on a cell center at (1.2025, 1.2025).
Heightmap cone_map(Point2& apex) {
  const double res = 0.005;
  apex = {240 * res + 0.5 * res, 240 * res + 0.5 * res};
  return field_map(481, 481, res, {0, 0}, [&](double x, double y) { return std::hypot(x - apex.x, y - apex.y); });
}

}  // namespace

TEST(ExtractPatch, FlatIsZero) {
  const auto hm = te_test::flat_map(20, 20, 0.25, 7.5);
  const auto patch = extract_patch(hm, {2.5, 2.0}, 0.7, 1.0, 16);
  for (double v : patch.values) EXPECT_EQ(v, 0.0);
}

TEST(ExtractPatch, NorthOnTiltedPlane) {
  const auto hm = field_map(12, 12, 0.25, {-1.5, -1.5}, [](double, double y) { return 0.1 * y; });
  const auto patch = extract_patch(hm, {0, 0}, 0.0, 1.0, 5);
  const double rows[5] = {0.1, 0.075, 0.05, 0.025, 0.0};
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(patch.at(i, j), rows[i], 1e-12);
  }
}

TEST(ExtractPatch, ExactOnPlanesAtAnyHeading) {
  const double a = 0.04, b = -0.07;
  const auto hm = field_map(40, 40, 0.25, {-5, -5}, [&](double x, double y) { return a * x + b * y + 3.0; });
  for (double th_deg : {0.0, 23.0, 90.0, 161.0, 270.0, 333.0}) {
    const double th = deg(th_deg);
    const Point2 p{0.3, -0.2};
    const std::size_t n = 9;
    const auto patch = extract_patch(hm, p, th, 1.0, n);
    const Point2 d = heading_vector(th), r = right_vector(th);
    // Analytic lattice heights, min-subtracted.
    std::vector<double> expect(n * n);
    double lo = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double u = -0.5 + static_cast<double>(j) / (n - 1);
        const double w = static_cast<double>(n - 1 - i) / (n - 1);
        const Point2 q = p + u * r + w * d;
        expect[i * n + j] = a * q.x + b * q.y + 3.0;
        lo = std::min(lo, expect[i * n + j]);
      }
    }
    for (std::size_t k = 0; k < n * n; ++k) EXPECT_NEAR(patch.values[k], expect[k] - lo, 1e-9);
  }
}

TEST(ExtractPatch, ConeHeadingInvariance) {
  Point2 apex;
  const auto hm = cone_map(apex);
  const auto ref = extract_patch(hm, apex, 0.0, 1.0, 33);
  for (double th_deg : {37.0, 90.0, 213.0}) {
    const auto patch = extract_patch(hm, apex, deg(th_deg), 1.0, 33);
    for (std::size_t k = 0; k < ref.values.size(); ++k) {
      EXPECT_NEAR(patch.values[k], ref.values[k], 1e-3) << th_deg;
    }
  }
}

TEST(ExtractPatch, AltitudeOffsetInvarianceIsExact) {
  TerrainSpec spec;
  spec.width = 10;
  spec.height = 10;
  spec.roughness_amp = 0.03;
  const auto gen = generate_terrain(spec);
  // Heights on a 2^-20 m lattice so adding an integer offset is itself exact.
  std::vector<double> base(gen.values().begin(), gen.values().end());
  for (auto& v : base) v = std::ldexp(std::round(std::ldexp(v, 20)), -20);
  std::vector<double> shifted = base;
  for (auto& v : shifted) v += 1000.0;
  const auto hm = Heightmap::build_from_grid(gen.rows(), gen.cols(), gen.resolution(), gen.origin(), base);
  const auto hm2 = Heightmap::build_from_grid(gen.rows(), gen.cols(), gen.resolution(), gen.origin(), shifted);
  for (double th : {0.0, 1.0, 2.5, 4.0}) {
    const auto a = extract_patch(hm, {5, 5}, th, 1.0, 32);
    const auto b = extract_patch(hm2, {5, 5}, th, 1.0, 32);
    EXPECT_EQ(a.values, b.values);
  }
}

TEST(ExtractPatch, MinIsZeroAndValuesNonNegative) {
  TerrainSpec spec;
  spec.width = 12;
  spec.height = 12;
  spec.roughness_amp = 0.05;
  const auto hm = generate_terrain(spec);
  std::mt19937_64 eng(2);
  std::uniform_real_distribution<double> pos(2.0, 10.0), ang(0, 2 * std::numbers::pi);
  for (int i = 0; i < 50; ++i) {
    const auto patch = extract_patch(hm, {pos(eng), pos(eng)}, ang(eng), 1.0, 16);
    EXPECT_EQ(*std::min_element(patch.values.begin(), patch.values.end()), 0.0);
    for (double v : patch.values) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(ExtractPatch, OppositeHeadingIsRotatedCopy) {
  TerrainSpec spec;
  spec.width = 12;
  spec.height = 12;
  spec.roughness_amp = 0.02;
  const auto hm = generate_terrain(spec);
  const std::size_t n = 17;
  for (double th : {0.3, 1.9, 4.4}) {
    const Point2 p{6, 6};
    const Point2 q = p + heading_vector(th);
    const auto a = extract_patch(hm, p, th, 1.0, n);
    const auto b = extract_patch(hm, q, th + std::numbers::pi, 1.0, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(a.at(i, j), b.at(n - 1 - i, n - 1 - j), 1e-9);
    }
  }
}

TEST(ExtractPatch, Errors) {
  const auto hm = te_test::flat_map(8, 8, 0.25, 0.0);
  EXPECT_THROW(extract_patch(hm, {1, 1}, 0.0, 1.0, 1), ValidationError);
  EXPECT_THROW(extract_patch(hm, {1, 1}, 0.0, 0.0, 8), ValidationError);
  EXPECT_THROW(extract_patch(hm, {1, 1.5}, 0.0, 1.0, 8), OutOfBoundsError);  // runs off the north edge
  EXPECT_THROW(extract_patch(hm, {0.3, 0.5}, 0.0, 1.0, 8), OutOfBoundsError);  // left corner outside
  EXPECT_FALSE(patch_fits(hm, {0.3, 0.5}, 0.0));
  EXPECT_TRUE(patch_fits(hm, {1.0, 0.5}, 0.0));
}

TEST(PatchForSegment, EastOnFlatIsZero) {
  const auto hm = te_test::flat_map(16, 16, 0.25, 1.0);
  PathSegment seg;
  seg.p = {1.0, 2.0, 1.0};
  seg.q = {2.0, 2.0, 1.0};
  seg.heading = std::numbers::pi / 2;
  seg.length_h = 1.0;
  const auto patch = patch_for_segment(hm, seg, 8);
  for (double v : patch.values) EXPECT_EQ(v, 0.0);
}

TEST(PatchForSegment, DelegatesToExtractPatch) {
  const auto hm = field_map(12, 12, 0.25, {-1.5, -1.5}, [](double, double y) { return 0.1 * y; });
  PathSegment seg;
  seg.p = {0, 0, 0};
  seg.q = {0, 1, 0.1};
  seg.heading = 0.0;
  seg.length_h = 1.0;
  EXPECT_EQ(patch_for_segment(hm, seg, 5).values, extract_patch(hm, {0, 0}, 0.0, 1.0, 5).values);
}

TEST(PatchForSegment, SimulatedSegmentsHaveZeroMin) {
  TerrainSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.roughness_amp = 0.02;
  const auto hm = generate_terrain(spec);
  const auto log = simulate_run(hm, GroundTruthModel{}, boustrophedon_waypoints({2, 2, 14, 14}, 3.0));
  for (const auto& s : segment_trajectory(log)) {
    if (!patch_fits(hm, s.p.xy(), s.heading, s.length_h)) continue;
    const auto patch = patch_for_segment(hm, s, 12);
    EXPECT_EQ(*std::min_element(patch.values.begin(), patch.values.end()), 0.0);
  }
}

TEST(WritePatch, ReadsBackAsHeightmap) {
  te_test::TempDir tmp;
  const auto hm = field_map(12, 12, 0.25, {-1.5, -1.5}, [](double, double y) { return 0.1 * y; });
  const auto patch = extract_patch(hm, {0, 0}, 0.0, 1.0, 5);
  write_patch(patch, tmp / "patch");
  const auto back = read_heightmap(tmp / "patch");
  EXPECT_EQ(back.rows(), 5u);
  EXPECT_NEAR(back.at(0, 2), 0.1, 1e-7);
  const auto meta = read_json(tmp / "patch" / "meta.json");
  EXPECT_EQ(meta.at("side_m").get<double>(), 1.0);
}
