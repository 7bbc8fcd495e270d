#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "msd/density.hpp"
#include "msd/point_cloud.hpp"

namespace msd {

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& source, std::size_t row, std::size_t column, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(row) + ":" + std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_, column_;
};

//! Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return {buf, end};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

//! Comma-separated numeric table. A first row that does not parse as
//! numbers is taken as the header.
struct CsvTable {
  std::vector<std::string> header;
  PointCloud data;
};

inline CsvTable read_csv(std::istream& in, const std::string& source = "<csv>") {
  CsvTable table;
  std::string line;
  std::size_t row = 0, width = 0;
  std::vector<double> coords;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split_commas(view);
    if (first) {
      first = false;
      bool numeric = true;
      for (auto f : fields) numeric = numeric && detail::parse_number(f).has_value();
      if (!numeric) {
        for (auto f : fields) table.header.emplace_back(f);
        width = fields.size();
        continue;
      }
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw CsvError(source, row, fields.size(), "expected " + std::to_string(width) + " columns, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::parse_number(fields[c]);
      if (!v) throw CsvError(source, row, c + 1, "not a number: '" + std::string(fields[c]) + "'");
      if (!std::isfinite(*v)) throw CsvError(source, row, c + 1, "non-finite value");
      coords.push_back(*v);
    }
  }
  if (width == 0 || coords.empty()) throw CsvError(source, row, 0, "no numeric rows");
  table.data = PointCloud(width, std::move(coords));
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in, path);
}

//! Writes one row per point; an optional trailing integer label column.
inline void write_csv(std::ostream& out, const PointCloud& data, const std::vector<std::string>& header = {},
                      const std::vector<int>* labels = nullptr) {
  if (labels && labels->size() != data.size()) throw std::invalid_argument("write_csv: label count mismatch");
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? "," : "") << format_double(data(i, j));
    if (labels) out << ',' << (*labels)[i];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Public benchmark datasets (read from local CSV files only)

struct DatasetShape {
  std::size_t n;
  std::size_t d;
  std::size_t k;  // cluster count used in evaluations
  double h;       // bandwidth quoted for standardized data
};

inline const std::map<std::string, DatasetShape>& known_datasets() {
  static const std::map<std::string, DatasetShape> shapes{
      {"olive", {572, 8, 7, 0.587}},
      {"banknote", {1372, 4, 5, 0.453}},
      {"seeds", {210, 7, 3, 0.613}},
  };
  return shapes;
}

struct Dataset {
  std::string name;
  PointCloud data;
  std::vector<int> labels;  // empty when the file has no label column
  std::optional<AffineTransform> transform;
};

//! Loads a benchmark dataset from a local CSV. The file must have exactly
//! n rows and d feature columns, optionally followed by one class-label
//! column. Features are standardized unless `standardize_features` is false.
inline Dataset load_dataset(const std::string& name, const std::string& path, bool standardize_features = true) {
  const auto it = known_datasets().find(name);
  if (it == known_datasets().end()) throw std::invalid_argument("unknown dataset '" + name + "' (olive, banknote, seeds)");
  const DatasetShape shape = it->second;
  const CsvTable table = read_csv_file(path);
  const std::size_t rows = table.data.size(), cols = table.data.dim();
  if (rows != shape.n || (cols != shape.d && cols != shape.d + 1))
    throw std::invalid_argument("dataset '" + name + "': expected " + std::to_string(shape.n) + " rows x " +
                                std::to_string(shape.d) + " columns (+1 optional label), found " + std::to_string(rows) +
                                " x " + std::to_string(cols));
  Dataset ds;
  ds.name = name;
  std::vector<double> coords;
  coords.reserve(rows * shape.d);
  std::map<double, int> ids;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < shape.d; ++j) coords.push_back(table.data(i, j));
    if (cols == shape.d + 1) {
      auto [pos, inserted] = ids.try_emplace(table.data(i, shape.d), static_cast<int>(ids.size()));
      ds.labels.push_back(pos->second);
    }
  }
  ds.data = PointCloud(shape.d, std::move(coords));
  if (standardize_features) {
    auto [z, t] = standardize(ds.data);
    ds.data = std::move(z);
    ds.transform = std::move(t);
  }
  return ds;
}

}  // namespace msd
