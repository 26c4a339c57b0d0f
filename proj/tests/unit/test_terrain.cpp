#include <cmath>
#include <limits>
#include <numbers>

#include "terrain_energy/errors.hpp"
#include "terrain_energy/heightmap_io.hpp"
#include "terrain_energy/synthworld.hpp"
#include "terrain_energy/terrain.hpp"
#include "test_support.hpp"

using namespace terrain_energy;
using te_test::field_map;
using te_test::flat_map;

TEST(Heightmap, TwoByTwoFlatIsValid) {
  const auto hm = Heightmap::build_from_grid(2, 2, 1.0, {0, 0}, {0, 0, 0, 0});
  EXPECT_EQ(hm.rows(), 2u);
  EXPECT_EQ(hm.cols(), 2u);
  EXPECT_EQ(hm.sample_height(1.0, 1.0), 0.0);
}

TEST(Heightmap, RejectsNaN) {
  std::vector<double> v(9, 1.0);
  v[4] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Heightmap::build_from_grid(3, 3, 1.0, {0, 0}, v), ValidationError);
}

TEST(Heightmap, RejectsBadShapes) {
  EXPECT_THROW(Heightmap::build_from_grid(3, 3, 1.0, {0, 0}, std::vector<double>(8)), ValidationError);
  EXPECT_THROW(Heightmap::build_from_grid(1, 3, 1.0, {0, 0}, std::vector<double>(3)), ValidationError);
  EXPECT_THROW(Heightmap::build_from_grid(2, 2, 0.0, {0, 0}, std::vector<double>(4)), ValidationError);
  EXPECT_THROW(Heightmap::build_from_grid(2, 2, -1.0, {0, 0}, std::vector<double>(4)), ValidationError);
}

TEST(Heightmap, GeneratedGridIsValid) {
  TerrainSpec spec;
  spec.width = 25;
  spec.height = 25;
  spec.seed = 4;
  const auto hm = generate_terrain(spec);
  EXPECT_EQ(hm.rows(), 100u);
  EXPECT_EQ(hm.cols(), 100u);
  for (double v : hm.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Heightmap, CellCentersFollowNorthUpConvention) {
  const auto hm = flat_map(4, 3, 0.5, 0.0, {10.0, 20.0});
  // Row 0 is the northmost row.
  const Point2 nw = hm.cell_center(0, 0);
  EXPECT_DOUBLE_EQ(nw.x, 10.25);
  EXPECT_DOUBLE_EQ(nw.y, 20.0 + 3.5 * 0.5);
  const Point2 se = hm.cell_center(3, 2);
  EXPECT_DOUBLE_EQ(se.x, 11.25);
  EXPECT_DOUBLE_EQ(se.y, 20.25);
}

TEST(SampleHeight, ConstantField) {
  const auto hm = flat_map(6, 6, 1.0, 3.0);
  EXPECT_EQ(hm.sample_height(2.3, 4.1), 3.0);
  EXPECT_EQ(hm.sample_height(0.5, 0.5), 3.0);
}

TEST(SampleHeight, PlaneAtTwo) {
  // z = 0.05 x with cell centers at integers: origin shifted by half a cell.
  const auto hm = field_map(5, 5, 1.0, {-0.5, -0.5}, [](double x, double) { return 0.05 * x; });
  EXPECT_NEAR(hm.sample_height(2.0, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(hm.sample_height(2.37, 1.81), 0.05 * 2.37, 1e-15);
}

TEST(SampleHeight, OutOfBounds) {
  const auto hm = flat_map(4, 4, 1.0, 0.0);
  EXPECT_THROW(hm.sample_height(1000.0, 1.0), OutOfBoundsError);
  EXPECT_THROW(hm.sample_height(0.2, 1.0), OutOfBoundsError);  // left of the first center
}

TEST(SampleHeight, ExactAtCellCentersAndOnPlanes) {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(7 * 9);
  for (auto& x : v) x = u(eng);
  const auto hm = Heightmap::build_from_grid(7, 9, 0.3, {1.0, -2.0}, v);
  for (std::size_t r = 0; r < 7; ++r) {
    for (std::size_t c = 0; c < 9; ++c) {
      const Point2 p = hm.cell_center(r, c);
      EXPECT_EQ(hm.sample_height(p.x, p.y), hm.at(r, c));
    }
  }
  const double a = 0.3, b = -0.7, k = 2.0;
  const auto plane = field_map(7, 9, 0.3, {1.0, -2.0}, [&](double x, double y) { return a * x + b * y + k; });
  const Rect sb = plane.sampling_bounds();
  std::uniform_real_distribution<double> ux(sb.min_x, sb.max_x), uy(sb.min_y, sb.max_y);
  for (int i = 0; i < 200; ++i) {
    const double x = ux(eng), y = uy(eng);
    EXPECT_NEAR(plane.sample_height(x, y), a * x + b * y + k, 1e-12);
  }
}

TEST(FitSurface, RecoversPlane) {
  std::vector<Point3> pts;
  // One sample per cell, on the cell lattice.
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      const double x = 0.25 * i, y = 0.25 * j;
      pts.push_back({x, y, 0.02 * x + 0.01 * y});
    }
  }
  const auto hm = fit_surface_from_points(pts, 0.25, 0);
  for (std::size_t r = 0; r < hm.rows(); ++r) {
    for (std::size_t c = 0; c < hm.cols(); ++c) {
      const Point2 p = hm.cell_center(r, c);
      EXPECT_NEAR(hm.at(r, c), 0.02 * p.x + 0.01 * p.y, 1e-6);
    }
  }
  // The point cloud's bounding box is covered by the sampling region.
  const Rect sb = hm.sampling_bounds();
  EXPECT_LE(sb.min_x, 0.0 + 1e-12);
  EXPECT_GE(sb.max_x, 10.0 - 1e-12);
}

TEST(FitSurface, TooFewPoints) {
  const std::vector<Point3> two = {{0, 0, 0}, {1, 1, 1}};
  EXPECT_THROW(fit_surface_from_points(two), ValidationError);
}

TEST(FitSurface, ZeroAreaBox) {
  const std::vector<Point3> line = {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}};
  EXPECT_THROW(fit_surface_from_points(line), ValidationError);
}

TEST(FitSurface, FillsHolesBetweenTracks) {
  // Sparse N-S tracks over a generated map: holes are filled from neighbors
  // and the fit stays close to the source terrain.
  TerrainSpec spec;
  spec.width = 20;
  spec.height = 20;
  spec.seed = 9;
  const auto truth = generate_terrain(spec);
  const auto tracks = boustrophedon_waypoints({1, 1, 19, 19}, 1.0);
  std::vector<Point3> pts;
  for (std::size_t k = 0; k + 1 < tracks.size(); ++k) {
    const Point2 a = tracks[k], b = tracks[k + 1];
    const int steps = static_cast<int>(std::ceil(distance(a, b) / 0.05));
    for (int i = 0; i <= steps; ++i) {
      const Point2 p = a + (static_cast<double>(i) / steps) * (b - a);
      pts.push_back({p.x, p.y, truth.sample_height(p.x, p.y)});
    }
  }
  const auto fit = fit_surface_from_points(pts, 0.25, 1);
  double worst = 0.0;
  for (std::size_t r = 0; r < fit.rows(); ++r) {
    for (std::size_t c = 0; c < fit.cols(); ++c) {
      const Point2 p = fit.cell_center(r, c);
      EXPECT_TRUE(std::isfinite(fit.at(r, c)));
      worst = std::max(worst, std::abs(fit.at(r, c) - truth.sample_height(p.x, p.y)));
    }
  }
  // Tolerance: a 5 degree slope over the half-meter gap between tracks.
  EXPECT_LT(worst, 0.5 * std::tan(5.0 * std::numbers::pi / 180.0));
}

TEST(SlopeAlong, FlatIsZero) {
  const auto hm = flat_map(8, 8, 1.0, 2.0);
  EXPECT_EQ(slope_along(hm, {3, 3}, 1.234, 2.0), 0.0);
}

TEST(SlopeAlong, EastAndWestOnPlane) {
  const auto hm = field_map(5, 5, 1.0, {-2.5, -2.5}, [](double x, double) { return 0.05 * x; });
  const double expected = std::atan(0.05);
  EXPECT_NEAR(expected, 0.049958, 1e-6);
  EXPECT_NEAR(slope_along(hm, {0, 0}, std::numbers::pi / 2, 1.0), expected, 1e-12);
  EXPECT_NEAR(slope_along(hm, {0, 0}, 3 * std::numbers::pi / 2, 1.0), -expected, 1e-12);
}

TEST(SlopeAlong, EndpointAntisymmetry) {
  TerrainSpec spec;
  spec.width = 20;
  spec.height = 20;
  spec.roughness_amp = 0.02;
  const auto hm = generate_terrain(spec);
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> pos(5.0, 15.0), ang(0.0, 2 * std::numbers::pi);
  for (int i = 0; i < 100; ++i) {
    const Point2 p{pos(eng), pos(eng)};
    const double th = ang(eng);
    const double d = 1.5;
    const Point2 q = p + d * heading_vector(th);
    // The return trip's endpoint is p only up to rounding in q, so compare
    // against heights sampled at the same two points.
    const double fwd = slope_along(hm, p, th, d);
    const double back = std::atan2(hm.sample_height(p.x, p.y) - hm.sample_height(q.x, q.y), d);
    EXPECT_EQ(fwd, -back);
    EXPECT_NEAR(fwd, -slope_along(hm, q, th + std::numbers::pi, d), 1e-12);
  }
}

TEST(SlopeAlong, OutOfBoundsEndpoint) {
  const auto hm = flat_map(4, 4, 1.0, 0.0);
  EXPECT_THROW(slope_along(hm, {2, 2}, 0.0, 10.0), OutOfBoundsError);
  EXPECT_THROW(slope_along(hm, {2, 2}, 0.0, 0.0), ValidationError);
}

TEST(HeightmapIo, RoundTripBinaryAndCsv) {
  te_test::TempDir tmp;
  std::vector<double> v = {0.5, 1.25, -3.0, 4.0, 0.0, 1e-3};
  const auto hm = Heightmap::build_from_grid(2, 3, 0.25, {1.5, -2.0}, v);
  write_heightmap(hm, tmp / "bin");
  write_heightmap(hm, tmp / "csv", GridEncoding::kCsv);
  for (const char* name : {"bin", "csv"}) {
    const auto back = read_heightmap(tmp / name);
    EXPECT_EQ(back.rows(), 2u);
    EXPECT_EQ(back.cols(), 3u);
    EXPECT_EQ(back.resolution(), 0.25);
    EXPECT_EQ(back.origin().x, 1.5);
    EXPECT_EQ(back.origin().y, -2.0);
    const bool binary = std::string(name) == "bin";
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double expected = binary ? static_cast<double>(static_cast<float>(v[i])) : v[i];
      EXPECT_EQ(back.values()[i], expected) << name;
    }
  }
  EXPECT_EQ(std::filesystem::file_size(tmp / "bin" / "heights.f32"), 24u);
}

TEST(HeightmapIo, MissingDirectoryIsIoError) {
  te_test::TempDir tmp;
  EXPECT_THROW(read_heightmap(tmp / "nope"), IoError);
}
