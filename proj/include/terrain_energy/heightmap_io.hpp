#ifndef TERRAIN_ENERGY_HEIGHTMAP_IO_HPP
#define TERRAIN_ENERGY_HEIGHTMAP_IO_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "terrain_energy/terrain.hpp"

namespace terrain_energy {

// A heightmap directory holds `meta.json`
//   {rows, cols, resolution_m, origin_x_m, origin_y_m}
// next to either `heights.f32` (rows*cols little-endian float32, row-major,
// row 0 = north) or `heights.csv` (one grid row per line).

enum class GridEncoding { kFloat32, kCsv };

void write_heightmap(const Heightmap& hm, const std::filesystem::path& dir,
                     GridEncoding encoding = GridEncoding::kFloat32);

/// Reads `heights.f32` if present, otherwise `heights.csv`.
Heightmap read_heightmap(const std::filesystem::path& dir);

// Raw helpers shared with the patch and cost-map writers.
void write_f32_le(const std::filesystem::path& file, std::span<const double> values);
std::vector<double> read_f32_le(const std::filesystem::path& file, std::size_t expected_count);
void write_json(const std::filesystem::path& file, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& file);

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_HEIGHTMAP_IO_HPP
