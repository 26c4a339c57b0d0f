#include "terrain_energy/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "terrain_energy/errors.hpp"

namespace terrain_energy::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(file.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError("missing CSV column '" + name + "'");
}

Table read(const std::filesystem::path& file, const std::vector<std::string>& required) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(file.string() + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split(line);
  if (table.header.size() < required.size()) {
    throw ValidationError(file.string() + ": header has too few columns");
  }
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (table.header[i] != required[i]) {
      throw ValidationError(file.string() + ": expected column '" + required[i] + "' at position " +
                            std::to_string(i) + ", found '" + table.header[i] + "'");
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw ValidationError(file.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, file, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ',';
    out << number(values[i]);
  }
  out << '\n';
}

}  // namespace terrain_energy::csv
