#ifndef TERRAIN_ENERGY_CSV_HPP
#define TERRAIN_ENERGY_CSV_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace terrain_energy::csv {

/// Numeric table with a required header line. '.' is the decimal separator.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index of `name`; throws ValidationError when absent.
  std::size_t column(const std::string& name) const;
};

/// Reads `file`, requiring that its header starts with `required` columns in order.
Table read(const std::filesystem::path& file, const std::vector<std::string>& required);

/// Shortest text that parses back to the same double.
std::string number(double v);

void write_row(std::ostream& out, const std::vector<double>& values);

}  // namespace terrain_energy::csv

#endif  // TERRAIN_ENERGY_CSV_HPP
