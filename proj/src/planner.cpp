#include "terrain_energy/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <thread>
#include <tuple>

#include "terrain_energy/csv.hpp"
#include "terrain_energy/errors.hpp"
#include "terrain_energy/heightmap_io.hpp"

namespace terrain_energy {

namespace fs = std::filesystem;

PatchPredictor constant_predictor(double value, std::size_t patch_n) {
  return {patch_n, [value](std::span<const HeightPatch> patches) {
            return std::vector<double>(patches.size(), value);
          }};
}

PatchPredictor physics_predictor(const PhysicsParams& params, std::size_t patch_n) {
  params.validate();
  if (patch_n < 2) throw ValidationError("physics predictor needs patches of at least 2x2");
  return {patch_n, [params](std::span<const HeightPatch> patches) {
            std::vector<double> out;
            out.reserve(patches.size());
            for (const auto& p : patches) {
              // Centerline endpoints: row n-1 is the start edge, row 0 the end edge.
              const std::size_t n = p.n;
              const std::size_t mid = n / 2;
              double top = p.at(0, mid);
              double bottom = p.at(n - 1, mid);
              if (n % 2 == 0) {
                top = 0.5 * (top + p.at(0, mid - 1));
                bottom = 0.5 * (bottom + p.at(n - 1, mid - 1));
              }
              const double slope = std::atan2(top - bottom, p.side);
              out.push_back(scale_energy(predict_energy(params, slope, p.side)));
            }
            return out;
          }};
}

PatchPredictor learned_predictor(std::shared_ptr<const PatchRegressor> model) {
  const std::size_t n = model->input_n();
  return {n, [model = std::move(model)](std::span<const HeightPatch> patches) {
            return model->predict(patches);
          }};
}

std::vector<CellOffset> neighborhood_offsets(std::size_t neighborhood) {
  std::vector<CellOffset> out = {{-1, 0}, {0, 1}, {1, 0}, {0, -1}};
  if (neighborhood == 4) return out;
  if (neighborhood != 8 && neighborhood != 16) {
    throw ValidationError("neighborhood must be 4, 8 or 16");
  }
  out.insert(out.end(), {{-1, 1}, {1, 1}, {1, -1}, {-1, -1}});
  if (neighborhood == 16) {
    out.insert(out.end(), {{-2, 1}, {-1, 2}, {1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}});
  }
  return out;
}

DirectionalCostMap::DirectionalCostMap(std::size_t rows, std::size_t cols, double cell_size,
                                       Point2 origin, std::size_t neighborhood, double cost_floor)
    : rows_(rows), cols_(cols), cell_size_(cell_size), origin_(origin),
      offsets_(neighborhood_offsets(neighborhood)), cost_floor_(cost_floor),
      costs_(rows * cols * offsets_.size(), kBlocked) {
  if (rows == 0 || cols == 0) throw ValidationError("cost map needs at least one cell");
  if (!(cell_size > 0.0)) throw ValidationError("cell size must be positive");
  if (!(cost_floor > 0.0)) throw ValidationError("cost floor must be positive");
}

Point2 DirectionalCostMap::cell_center(Cell c) const {
  return {origin_.x + (static_cast<double>(c.col) + 0.5) * cell_size_,
          origin_.y + (static_cast<double>(rows_ - 1 - c.row) + 0.5) * cell_size_};
}

Cell DirectionalCostMap::cell_at(Point2 p) const {
  const double fc = std::floor((p.x - origin_.x) / cell_size_);
  const double fs = std::floor((p.y - origin_.y) / cell_size_);
  if (!(fc >= 0.0 && fs >= 0.0 && fc < static_cast<double>(cols_) &&
        fs < static_cast<double>(rows_))) {
    throw OutOfBoundsError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                           ") outside the cost map");
  }
  return {rows_ - 1 - static_cast<std::size_t>(fs), static_cast<std::size_t>(fc)};
}

void DirectionalCostMap::set_cost(Cell from, std::size_t offset_index, double value) {
  double& slot = costs_[(from.row * cols_ + from.col) * offsets_.size() + offset_index];
  slot = value == kBlocked ? kBlocked : std::max(cost_floor_, value);
}

void DirectionalCostMap::scale(double factor) {
  if (!(factor > 0.0)) throw ValidationError("cost scale factor must be positive");
  for (auto& c : costs_) {
    if (c != kBlocked) c *= factor;
  }
}

DirectionalCostMap build_cost_map(const Heightmap& hm, const PatchPredictor& predictor,
                                  double cell_size, std::size_t neighborhood, double cost_floor) {
  if (!(cell_size > 0.0)) throw ValidationError("cell size must be positive");
  const Rect ext = hm.extent();
  const auto rows = static_cast<std::size_t>(std::floor(ext.height() / cell_size + 1e-9));
  const auto cols = static_cast<std::size_t>(std::floor(ext.width() / cell_size + 1e-9));
  DirectionalCostMap map(rows, cols, cell_size, hm.origin(), neighborhood, cost_floor);
  const auto& offsets = map.offsets();

  auto fill_rows = [&](std::size_t r_begin, std::size_t r_end) {
    std::vector<HeightPatch> patches;
    std::vector<std::pair<Cell, std::size_t>> slots;
    for (std::size_t r = r_begin; r < r_end; ++r) {
      patches.clear();
      slots.clear();
      for (std::size_t c = 0; c < cols; ++c) {
        const Cell u{r, c};
        const Point2 pu = map.cell_center(u);
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          const long vr = static_cast<long>(r) + offsets[k].d_row;
          const long vc = static_cast<long>(c) + offsets[k].d_col;
          if (!map.contains(vr, vc)) continue;
          const Point2 pv = map.cell_center({static_cast<std::size_t>(vr), static_cast<std::size_t>(vc)});
          const double heading = bearing_of(pv - pu);
          if (!patch_fits(hm, pu, heading, kPatchSide)) continue;
          patches.push_back(extract_patch(hm, pu, heading, kPatchSide, predictor.patch_n));
          slots.emplace_back(u, k);
        }
      }
      if (patches.empty()) continue;
      const auto energies = predictor.predict_batch(patches);
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto [u, k] = slots[i];
        const double length = cell_size * std::hypot(offsets[k].d_row, offsets[k].d_col);
        map.set_cost(u, k, energies[i] * length);
      }
    }
  };

  // Rows are independent; each worker writes a disjoint block of rows.
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(rows, 1));
  if (workers <= 1) {
    fill_rows(0, rows);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (rows + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(rows, b + chunk);
      if (b < e) pool.emplace_back(fill_rows, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return map;
}

PlanResult plan_min_energy(const DirectionalCostMap& map, Cell start, Cell goal) {
  if (!map.contains(static_cast<long>(start.row), static_cast<long>(start.col)) ||
      !map.contains(static_cast<long>(goal.row), static_cast<long>(goal.col))) {
    throw OutOfBoundsError("plan endpoints must lie inside the cost map");
  }
  const std::size_t cols = map.cols();
  const std::size_t count = map.rows() * cols;
  const auto index = [cols](Cell c) { return c.row * cols + c.col; };
  constexpr auto kNone = static_cast<std::size_t>(-1);

  std::vector<double> dist(count, kBlocked);
  std::vector<std::size_t> parent(count, kNone);
  std::vector<double> parent_cost(count, 0.0);
  std::vector<char> done(count, 0);
  using Entry = std::tuple<double, std::size_t, std::size_t>;  // cost, row, col
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  dist[index(start)] = 0.0;
  open.emplace(0.0, start.row, start.col);
  const auto& offsets = map.offsets();
  while (!open.empty()) {
    const auto [d, r, c] = open.top();
    open.pop();
    const Cell u{r, c};
    const std::size_t ui = index(u);
    if (done[ui]) continue;
    done[ui] = 1;
    if (u == goal) break;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const double w = map.cost(u, k);
      if (w == kBlocked) continue;
      const long vr = static_cast<long>(r) + offsets[k].d_row;
      const long vc = static_cast<long>(c) + offsets[k].d_col;
      if (!map.contains(vr, vc)) continue;
      const Cell v{static_cast<std::size_t>(vr), static_cast<std::size_t>(vc)};
      const std::size_t vi = index(v);
      if (done[vi]) continue;
      const double nd = d + w;
      if (nd < dist[vi]) {
        dist[vi] = nd;
        parent[vi] = ui;
        parent_cost[vi] = w;
        open.emplace(nd, v.row, v.col);
      }
    }
  }

  if (dist[index(goal)] == kBlocked) {
    throw UnreachableError("goal (" + std::to_string(goal.row) + ", " + std::to_string(goal.col) +
                           ") is unreachable from start");
  }
  PlanResult plan;
  for (std::size_t i = index(goal); i != kNone; i = parent[i]) {
    plan.waypoints.push_back({i / cols, i % cols});
    if (parent[i] != kNone) plan.per_edge.push_back(parent_cost[i]);
  }
  std::reverse(plan.waypoints.begin(), plan.waypoints.end());
  std::reverse(plan.per_edge.begin(), plan.per_edge.end());
  plan.total_cost = std::accumulate(plan.per_edge.begin(), plan.per_edge.end(), 0.0);
  return plan;
}

std::vector<Chord> cut_polyline(std::span<const Point2> waypoints, double unit_length) {
  if (!(unit_length > 0.0)) throw ValidationError("unit length must be positive");
  std::vector<Chord> chords;
  if (waypoints.size() < 2) return chords;
  const double L = unit_length;
  Point2 cut = waypoints.front();
  for (std::size_t k = 0; k + 1 < waypoints.size(); ++k) {
    const Point2 a = waypoints[k];
    const Point2 b = waypoints[k + 1];
    const Point2 step = b - a;
    const double bb = step.x * step.x + step.y * step.y;
    while (bb > 0.0) {
      const Point2 off = a - cut;
      const double ab = off.x * step.x + off.y * step.y;
      const double c = off.x * off.x + off.y * off.y - L * L;
      const double alpha = (-ab + std::sqrt(std::max(0.0, ab * ab - bb * c))) / bb;
      if (!(alpha <= 1.0 + 1e-9)) break;
      const Point2 next = alpha >= 1.0 ? b : a + alpha * step;
      chords.push_back({cut, next, distance(cut, next)});
      cut = next;
      if (alpha >= 1.0) break;
    }
  }
  const double rest = distance(cut, waypoints.back());
  if (rest > 1e-12) chords.push_back({cut, waypoints.back(), rest});
  return chords;
}

double path_energy(const Heightmap& hm, const PatchPredictor& predictor,
                   std::span<const Point2> waypoints, double unit_length) {
  for (const auto& w : waypoints) {
    if (!hm.in_bounds(w)) throw OutOfBoundsError("path waypoint outside heightmap");
  }
  const auto chords = cut_polyline(waypoints, unit_length);
  if (chords.empty()) return 0.0;
  std::vector<HeightPatch> patches;
  patches.reserve(chords.size());
  for (const auto& ch : chords) {
    patches.push_back(
        extract_patch(hm, ch.p, bearing_of(ch.q - ch.p), kPatchSide, predictor.patch_n));
  }
  const auto energies = predictor.predict_batch(patches);
  double total = 0.0;
  for (std::size_t i = 0; i < chords.size(); ++i) {
    total += energies[i] * (chords[i].length / unit_length);
  }
  return total;
}

void write_cost_map(const DirectionalCostMap& map, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json offsets = nlohmann::json::array();
  for (const auto& o : map.offsets()) offsets.push_back({o.d_row, o.d_col});
  write_json(dir / "meta.json", {{"rows", map.rows()},
                                 {"cols", map.cols()},
                                 {"cell_size_m", map.cell_size()},
                                 {"origin_x_m", map.origin().x},
                                 {"origin_y_m", map.origin().y},
                                 {"neighborhood", map.neighborhood()},
                                 {"cost_floor", map.cost_floor()},
                                 {"offsets", offsets},
                                 {"blocked", "inf"}});
  std::vector<double> plane(map.rows() * map.cols());
  for (std::size_t k = 0; k < map.neighborhood(); ++k) {
    for (std::size_t r = 0; r < map.rows(); ++r) {
      for (std::size_t c = 0; c < map.cols(); ++c) plane[r * map.cols() + c] = map.cost({r, c}, k);
    }
    write_f32_le(dir / ("cost_" + std::to_string(k) + ".f32"), plane);
  }
}

DirectionalCostMap read_cost_map(const fs::path& dir) {
  const auto meta = read_json(dir / "meta.json");
  try {
    const auto rows = meta.at("rows").get<std::size_t>();
    const auto cols = meta.at("cols").get<std::size_t>();
    DirectionalCostMap map(rows, cols, meta.at("cell_size_m").get<double>(),
                           {meta.at("origin_x_m").get<double>(), meta.at("origin_y_m").get<double>()},
                           meta.at("neighborhood").get<std::size_t>(),
                           meta.at("cost_floor").get<double>());
    for (std::size_t k = 0; k < map.neighborhood(); ++k) {
      const auto plane = read_f32_le(dir / ("cost_" + std::to_string(k) + ".f32"), rows * cols);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) map.set_cost({r, c}, k, plane[r * cols + c]);
      }
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError((dir / "meta.json").string() + ": " + e.what());
  }
}

void write_plan_csv(const DirectionalCostMap& map, const PlanResult& plan, const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << "index,row,col,x_m,y_m,cumulative_cost\n";
  double cumulative = 0.0;
  for (std::size_t i = 0; i < plan.waypoints.size(); ++i) {
    if (i > 0) cumulative += plan.per_edge[i - 1];
    const auto& w = plan.waypoints[i];
    const Point2 p = map.cell_center(w);
    csv::write_row(out, {static_cast<double>(i), static_cast<double>(w.row),
                         static_cast<double>(w.col), p.x, p.y, cumulative});
  }
  if (!out) throw IoError("failed writing " + file.string());
}

void write_plan_svg(const Heightmap& hm, const DirectionalCostMap& map, const PlanResult& plan,
                    const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  const Rect ext = hm.extent();
  constexpr double kPixelsPerMeter = 10.0;
  const double w = ext.width() * kPixelsPerMeter;
  const double h = ext.height() * kPixelsPerMeter;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << csv::number(w) << "\" height=\""
      << csv::number(h) << "\">\n";

  // Shade at most ~120 blocks per axis.
  const auto lo_hi = std::minmax_element(hm.values().begin(), hm.values().end());
  const double lo = *lo_hi.first;
  const double span = std::max(1e-12, *lo_hi.second - lo);
  const std::size_t step = std::max<std::size_t>(1, std::max(hm.rows(), hm.cols()) / 120);
  for (std::size_t r = 0; r < hm.rows(); r += step) {
    for (std::size_t c = 0; c < hm.cols(); c += step) {
      const int g = static_cast<int>(40.0 + 200.0 * (hm.at(r, c) - lo) / span);
      const double size = static_cast<double>(step) * hm.resolution() * kPixelsPerMeter;
      out << "<rect x=\"" << csv::number(static_cast<double>(c) * hm.resolution() * kPixelsPerMeter)
          << "\" y=\"" << csv::number(static_cast<double>(r) * hm.resolution() * kPixelsPerMeter)
          << "\" width=\"" << csv::number(size) << "\" height=\"" << csv::number(size)
          << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
    }
  }
  out << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"2\" points=\"";
  for (const auto& cell : plan.waypoints) {
    const Point2 p = map.cell_center(cell);
    out << csv::number((p.x - ext.min_x) * kPixelsPerMeter) << ','
        << csv::number((ext.max_y - p.y) * kPixelsPerMeter) << ' ';
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace terrain_energy
