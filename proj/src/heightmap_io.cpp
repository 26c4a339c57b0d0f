#include "terrain_energy/heightmap_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "terrain_energy/errors.hpp"

namespace terrain_energy {

namespace fs = std::filesystem;

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

}  // namespace

void write_f32_le(const fs::path& file, std::span<const double> values) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  for (double v : values) {
    const auto bits = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<double> read_f32_le(const fs::path& file, std::size_t expected_count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<double> values;
  values.reserve(expected_count);
  std::uint32_t bits = 0;
  while (in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
    values.push_back(static_cast<double>(std::bit_cast<float>(to_le(bits))));
  }
  if (values.size() != expected_count) {
    throw IoError(file.string() + " holds " + std::to_string(values.size()) +
                  " floats, expected " + std::to_string(expected_count));
  }
  return values;
}

void write_json(const fs::path& file, const nlohmann::json& doc) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + file.string());
}

nlohmann::json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

void write_heightmap(const Heightmap& hm, const fs::path& dir, GridEncoding encoding) {
  fs::create_directories(dir);
  write_json(dir / "meta.json", {{"rows", hm.rows()},
                                 {"cols", hm.cols()},
                                 {"resolution_m", hm.resolution()},
                                 {"origin_x_m", hm.origin().x},
                                 {"origin_y_m", hm.origin().y}});
  if (encoding == GridEncoding::kFloat32) {
    write_f32_le(dir / "heights.f32", hm.values());
    return;
  }
  std::ofstream out(dir / "heights.csv", std::ios::trunc);
  if (!out) throw IoError("cannot open " + (dir / "heights.csv").string() + " for writing");
  out.precision(17);
  for (std::size_t r = 0; r < hm.rows(); ++r) {
    for (std::size_t c = 0; c < hm.cols(); ++c) {
      if (c > 0) out << ',';
      out << hm.at(r, c);
    }
    out << '\n';
  }
}

Heightmap read_heightmap(const fs::path& dir) {
  const auto meta = read_json(dir / "meta.json");
  std::size_t rows = 0;
  std::size_t cols = 0;
  double res = 0.0;
  Point2 origin;
  try {
    rows = meta.at("rows").get<std::size_t>();
    cols = meta.at("cols").get<std::size_t>();
    res = meta.at("resolution_m").get<double>();
    origin = {meta.at("origin_x_m").get<double>(), meta.at("origin_y_m").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError((dir / "meta.json").string() + ": " + e.what());
  }

  std::vector<double> values;
  if (fs::exists(dir / "heights.f32")) {
    values = read_f32_le(dir / "heights.f32", rows * cols);
  } else if (fs::exists(dir / "heights.csv")) {
    std::ifstream in(dir / "heights.csv");
    std::string line;
    std::size_t row_count = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t col_count = 0;
      while (std::getline(ss, cell, ',')) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ValidationError("heights.csv row " + std::to_string(row_count) +
                                ": bad number '" + cell + "'");
        }
        ++col_count;
      }
      if (col_count != cols) {
        throw ValidationError("heights.csv row " + std::to_string(row_count) + " has " +
                              std::to_string(col_count) + " columns, expected " +
                              std::to_string(cols));
      }
      ++row_count;
    }
  } else {
    throw IoError("no heights.f32 or heights.csv in " + dir.string());
  }
  return Heightmap::build_from_grid(rows, cols, res, origin, std::move(values));
}

}  // namespace terrain_energy
