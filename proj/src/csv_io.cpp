#include "omkit/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "omkit/errors.hpp"

namespace omkit {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

std::optional<double> parse_cell(const std::string& cell, std::size_t line, const std::string& column) {
  if (cell.empty()) return std::nullopt;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [end, ec] = std::from_chars(begin, cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(value))
    throw DataError("line " + std::to_string(line) + ": column '" + column + "': cannot parse '" + cell + "'",
                    line);
  return value;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open '" + path.string() + "'");
  return file;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (row[i]) out << format_number(*row[i]);
    }
    out << '\n';
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string raw;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    if (!have_header) {
      table.header = split(text);
      for (const auto& name : table.header) {
        if (name.empty()) throw DataError("line " + std::to_string(line) + ": empty column name in header", line);
        char* end = nullptr;
        std::strtod(name.c_str(), &end);
        if (end == name.c_str() + name.size())
          throw DataError("line " + std::to_string(line) + ": header row missing (found numeric '" + name + "')",
                          line);
      }
      have_header = true;
      continue;
    }
    const auto cells = split(text);
    if (cells.size() != table.header.size())
      throw DataError("line " + std::to_string(line) + ": expected " + std::to_string(table.header.size()) +
                          " columns, found " + std::to_string(cells.size()),
                      line);
    std::vector<std::optional<double>> row;
    row.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row.push_back(parse_cell(cells[i], line, table.header[i]));
    table.rows.push_back(std::move(row));
    table.lines.push_back(line);
  }
  if (!have_header) throw DataError("no header row");
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  auto file = open(path);
  return read_csv(file);
}

void write_trace(std::ostream& out, const SpectrumTrace& trace) {
  out << "# enbw_hz=" << format_number(trace.enbw) << '\n';
  CsvTable table;
  table.header = {"frequency_hz", "psd"};
  table.rows.reserve(trace.values.size());
  for (std::size_t i = 0; i < trace.values.size(); ++i) table.rows.push_back({trace.frequency(i), trace.values[i]});
  write_csv(out, table);
}

SpectrumTrace read_trace(std::istream& in) {
  // The ENBW comment has to be read before read_csv skips comments.
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::optional<double> enbw;
  std::size_t pos = 0, line = 0;
  while (pos < content.size()) {
    const std::size_t nl = std::min(content.find('\n', pos), content.size());
    ++line;
    const std::string text = trim(std::string_view(content).substr(pos, nl - pos));
    pos = nl + 1;
    const std::string key = "# enbw_hz=";
    if (text.rfind(key, 0) == 0) {
      enbw = parse_cell(trim(text.substr(key.size())), line, "enbw_hz");
      break;
    }
    if (!text.empty() && text.front() != '#') break;
  }
  if (!enbw) throw DataError("trace: missing '# enbw_hz=<value>' line before the header");

  std::istringstream body(content);
  const CsvTable table = read_csv(body);
  const auto fcol = table.column("frequency_hz");
  const auto pcol = table.column("psd");
  if (!fcol || !pcol) throw DataError("trace: expected columns frequency_hz,psd");
  if (table.rows.size() < 2) throw DataError("trace: need at least 2 samples");

  SpectrumTrace trace;
  trace.enbw = *enbw;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!row[*fcol] || !row[*pcol])
      throw DataError("line " + std::to_string(table.lines[i]) + ": missing value", table.lines[i]);
    trace.values.push_back(*row[*pcol]);
  }
  const double f0 = *table.rows.front()[*fcol];
  const double f1 = *table.rows.back()[*fcol];
  trace.f_start = f0;
  trace.f_step = (f1 - f0) / static_cast<double>(table.rows.size() - 1);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double expected = trace.frequency(i);
    if (std::abs(*table.rows[i][*fcol] - expected) > 1e-6 * std::abs(trace.f_step))
      throw DataError("line " + std::to_string(table.lines[i]) + ": frequency grid is not uniform", table.lines[i]);
  }
  try {
    trace.validate();
  } catch (const InvalidParameter& e) {
    throw DataError(std::string("trace: ") + e.what());
  }
  return trace;
}

SpectrumTrace read_trace_file(const std::filesystem::path& path) {
  auto file = open(path);
  return read_trace(file);
}

}  // namespace omkit
