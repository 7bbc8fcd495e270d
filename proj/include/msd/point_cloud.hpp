#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msd {

using Point = std::vector<double>;

//! Raised when a density source vanishes (or is non-finite) where a shift
//! has to divide by it. Carries the offending point index when known.
class SupportError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit SupportError(const std::string& what, std::size_t index = npos)
      : std::runtime_error(what), index_(index) {}

  std::size_t point_index() const noexcept { return index_; }

  SupportError with_index(std::size_t index) const {
    return SupportError(std::string(what()) + " (point " + std::to_string(index) + ")", index);
  }

 private:
  std::size_t index_;
};

//! n points in d dimensions, stored row-major.
//!
//! A cloud may be empty (size 0) so that it can act as an accumulator, but
//! it always has a fixed dimension d >= 1 and every coordinate is finite.
class PointCloud {
 public:
  PointCloud() = default;

  explicit PointCloud(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("PointCloud: dimension must be >= 1");
  }

  PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim == 0) throw std::invalid_argument("PointCloud: dimension must be >= 1");
    if (coords_.size() % dim != 0)
      throw std::invalid_argument("PointCloud: coordinate count is not a multiple of the dimension");
    for (std::size_t k = 0; k < coords_.size(); ++k) {
      if (!std::isfinite(coords_[k]))
        throw std::invalid_argument("PointCloud: non-finite coordinate at point " +
                                    std::to_string(k / dim) + ", column " + std::to_string(k % dim));
    }
  }

  static PointCloud from_rows(const std::vector<Point>& rows) {
    if (rows.empty()) throw std::invalid_argument("PointCloud::from_rows: no rows");
    PointCloud out(rows.front().size());
    for (const auto& r : rows) out.push_back(r);
    return out;
  }

  //! One-dimensional cloud from scalar values.
  static PointCloud from_values(std::vector<double> values) { return PointCloud(1, std::move(values)); }

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> row(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  double operator()(std::size_t i, std::size_t j) const { return coords_[i * dim_ + j]; }

  Point point(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }

  const std::vector<double>& coords() const noexcept { return coords_; }

  void push_back(std::span<const double> p) {
    if (dim_ == 0) {
      if (p.empty()) throw std::invalid_argument("PointCloud: dimension must be >= 1");
      dim_ = p.size();
    }
    if (p.size() != dim_)
      throw std::invalid_argument("PointCloud: dimension mismatch (expected " + std::to_string(dim_) +
                                  ", got " + std::to_string(p.size()) + ")");
    for (double v : p)
      if (!std::isfinite(v)) throw std::invalid_argument("PointCloud: non-finite coordinate");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  void push_back(const Point& p) { push_back(std::span<const double>(p)); }

  void append(const PointCloud& other) {
    if (other.empty()) return;
    if (dim_ == 0) dim_ = other.dim_;
    if (other.dim_ != dim_) throw std::invalid_argument("PointCloud::append: dimension mismatch");
    coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
  }

  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  bool operator==(const PointCloud&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

inline void require_dim(std::span<const double> x, std::size_t dim, const char* where) {
  if (x.size() != dim)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (expected " + std::to_string(dim) +
                                ", got " + std::to_string(x.size()) + ")");
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

inline std::vector<double> column_means(const PointCloud& data) {
  std::vector<double> mean(data.dim(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) mean[j] += data(i, j);
  for (double& m : mean) m /= static_cast<double>(data.size());
  return mean;
}

//! Per-coordinate sample standard deviation (n - 1 divisor).
inline std::vector<double> column_sds(const PointCloud& data) {
  if (data.size() < 2) throw std::invalid_argument("column_sds: need at least 2 points");
  const auto mean = column_means(data);
  std::vector<double> ss(data.dim(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) {
      const double t = data(i, j) - mean[j];
      ss[j] += t * t;
    }
  for (double& s : ss) s = std::sqrt(s / static_cast<double>(data.size() - 1));
  return ss;
}

inline double mean_sd(const PointCloud& data) {
  const auto sds = column_sds(data);
  double s = 0.0;
  for (double v : sds) s += v;
  return s / static_cast<double>(sds.size());
}

}  // namespace msd
