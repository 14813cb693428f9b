#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "omkit/calibration.hpp"

namespace omkit {

// Header row mandatory, ',' separated, '.' decimal. Numbers are written in
// scientific notation with 17 significant digits; an empty cell is a missing
// value.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row (reading only)

  // Column index by name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

std::string format_number(double value);

void write_csv(std::ostream& out, const CsvTable& table);
// Lines starting with '#' are comments. Throws DataError naming the line for
// missing headers, ragged rows and unparseable cells.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

// Trace files: "# enbw_hz=<value>" then the columns frequency_hz,psd on a
// uniform frequency grid.
void write_trace(std::ostream& out, const SpectrumTrace& trace);
SpectrumTrace read_trace(std::istream& in);
SpectrumTrace read_trace_file(const std::filesystem::path& path);

}  // namespace omkit
