#ifndef TE_TESTS_PLANNER_ORACLE_HPP
#define TE_TESTS_PLANNER_ORACLE_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "terrain_energy/planner.hpp"
#include "terrain_energy/random.hpp"

namespace te_test {

/// Cost map with uniform random edge costs in [0.1, 2) and roughly
/// `blocked_share` of the in-map edges blocked.
inline terrain_energy::DirectionalCostMap random_cost_map(std::size_t rows, std::size_t cols,
                                                          std::size_t neighborhood,
                                                          std::uint64_t seed,
                                                          double blocked_share = 0.1) {
  terrain_energy::DirectionalCostMap map(rows, cols, 1.0, {0.0, 0.0}, neighborhood);
  terrain_energy::Engine eng(seed);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t k = 0; k < map.offsets().size(); ++k) {
        const long vr = static_cast<long>(r) + map.offsets()[k].d_row;
        const long vc = static_cast<long>(c) + map.offsets()[k].d_col;
        const double cost = terrain_energy::uniform(eng, 0.1, 2.0);
        const bool block = terrain_energy::uniform01(eng) < blocked_share;
        if (map.contains(vr, vc) && !block) map.set_cost({r, c}, k, cost);
      }
    }
  }
  return map;
}

/// Minimum path cost by depth-first enumeration of every simple path, with
/// branches abandoned once they cost more than the best complete path (all
/// costs are positive, so no abandoned branch could win). Infinity if the
/// goal is unreachable.
inline double brute_force_min_cost(const terrain_energy::DirectionalCostMap& map,
                                   terrain_energy::Cell start, terrain_energy::Cell goal) {
  const std::size_t cols = map.cols();
  std::vector<char> visited(map.rows() * cols, 0);
  double best = std::numeric_limits<double>::infinity();
  const auto dfs = [&](auto&& self, terrain_energy::Cell u, double so_far) -> void {
    if (so_far > best) return;
    if (u == goal) {
      best = so_far;
      return;
    }
    visited[u.row * cols + u.col] = 1;
    for (std::size_t k = 0; k < map.offsets().size(); ++k) {
      if (map.blocked(u, k)) continue;
      const long vr = static_cast<long>(u.row) + map.offsets()[k].d_row;
      const long vc = static_cast<long>(u.col) + map.offsets()[k].d_col;
      if (!map.contains(vr, vc)) continue;
      const terrain_energy::Cell v{static_cast<std::size_t>(vr), static_cast<std::size_t>(vc)};
      if (visited[v.row * cols + v.col]) continue;
      self(self, v, so_far + map.cost(u, k));
    }
    visited[u.row * cols + u.col] = 0;
  };
  dfs(dfs, start, 0.0);
  return best;
}

}  // namespace te_test

#endif  // TE_TESTS_PLANNER_ORACLE_HPP
