#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adaknn/core.hpp"

namespace adaknn {

// Dataset CSV format: header row "x1,...,xD,y", one sample per row, decimal
// point, plain UTF-8. Values are written with %.17g so that read-back is
// bit-exact.

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double_field(const std::string& field, const std::string& path,
                                 std::size_t line_no) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument(path + ": line " + std::to_string(line_no) +
                                ": malformed numeric field '" + field + "'");
  return value;
}

}  // namespace detail

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_dataset_csv: cannot open " + path);
  for (std::size_t j = 0; j < ds.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto p = ds.point(i);
    for (std::size_t j = 0; j < ds.dim(); ++j) out << detail::format_double(p[j]) << ",";
    out << detail::format_double(ds.label(i)) << "\n";
  }
}

inline Dataset read_dataset_csv(const std::string& path, Metric metric = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": line 1: missing header row");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header.back() != "y")
    throw std::invalid_argument(path + ": line 1: expected header x1,...,xD,y");
  const std::size_t dim = header.size() - 1;

  std::vector<double> coords, labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != dim + 1)
      throw std::invalid_argument(path + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(dim + 1) + " fields, got " +
                                  std::to_string(fields.size()));
    for (std::size_t j = 0; j < dim; ++j)
      coords.push_back(detail::parse_double_field(fields[j], path, line_no));
    labels.push_back(detail::parse_double_field(fields.back(), path, line_no));
  }
  if (labels.empty()) throw std::invalid_argument(path + ": no data rows");
  return Dataset(std::move(coords), std::move(labels), dim, metric);
}

// Query files may carry the same header with or without the trailing y column;
// only the x columns are used.
inline std::vector<Point> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_points_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": line 1: missing header row");
  const auto header = detail::split_csv_line(line);
  const bool has_y = header.back() == "y";
  const std::size_t dim = header.size() - (has_y ? 1 : 0);
  if (dim < 1) throw std::invalid_argument(path + ": line 1: no coordinate columns");

  std::vector<Point> pts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument(path + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    Point p(dim);
    for (std::size_t j = 0; j < dim; ++j)
      p[j] = detail::parse_double_field(fields[j], path, line_no);
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace adaknn
