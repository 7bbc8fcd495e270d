#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "msd/parallel.hpp"
#include "msd/point_cloud.hpp"

namespace msd {

enum class KernelFamily { gaussian };

//! Kernel family plus the profile constant c that links the weighted-mean
//! update to the gradient form, x + c h^2 grad p / p. For the gaussian
//! kernel c = 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double c = 1.0;

  static KernelSpec gaussian() { return {}; }

  //! K(u) for ||u||^2 = sq_norm in d dimensions.
  double value(double sq_norm, std::size_t d) const {
    return std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(d)) * std::exp(-0.5 * sq_norm);
  }

  bool operator==(const KernelSpec&) const = default;
};

//! A fitted kernel density estimator
//!   p(x) = 1 / (n h^d) * sum_i K((x - X_i) / h)
//! with its analytic gradient. Immutable after construction; copies share
//! the data. All sums run over the data in index order, so evaluations are
//! bit-reproducible.
class DensityModel {
 public:
  DensityModel(PointCloud data, double h, KernelSpec kernel = {})
      : data_(std::make_shared<const PointCloud>(std::move(data))), h_(h), kernel_(kernel) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("DensityModel: bandwidth must be positive");
    if (data_->empty()) throw std::invalid_argument("DensityModel: empty data");
    const double d = static_cast<double>(dim());
    norm_ = std::pow(2.0 * std::numbers::pi, -0.5 * d) / (static_cast<double>(size()) * std::pow(h_, d));
    inv_two_h2_ = 1.0 / (2.0 * h_ * h_);
  }

  const PointCloud& data() const noexcept { return *data_; }
  double bandwidth() const noexcept { return h_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  std::size_t dim() const noexcept { return data_->dim(); }
  std::size_t size() const noexcept { return data_->size(); }

  double density_at(std::span<const double> x) const {
    require_dim(x, dim(), "density_at");
    return norm_ * weight_sum(x);
  }

  //! grad p(x) = 1 / (n h^(d+2)) * sum_i (X_i - x) K((x - X_i) / h)
  Point gradient_at(std::span<const double> x) const {
    Point g(dim());
    density_and_gradient(x, g);
    return g;
  }

  //! Writes the gradient into grad and returns the density, in one pass.
  double density_and_gradient(std::span<const double> x, std::span<double> grad) const {
    require_dim(x, dim(), "gradient_at");
    const std::size_t d = dim();
    std::fill(grad.begin(), grad.end(), 0.0);
    double wsum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const auto xi = data_->row(i);
      const double w = std::exp(-squared_distance(x, xi) * inv_two_h2_);
      wsum += w;
      for (std::size_t k = 0; k < d; ++k) grad[k] += (xi[k] - x[k]) * w;
    }
    const double gscale = norm_ / (h_ * h_);
    for (auto& g : grad) g *= gscale;
    return norm_ * wsum;
  }

  //! The weighted mean sum_i X_i K_i / sum_j K_j. Throws SupportError when
  //! every kernel weight underflows to zero.
  Point weighted_mean(std::span<const double> x) const {
    require_dim(x, dim(), "weighted_mean");
    const std::size_t d = dim();
    Point acc(d, 0.0);
    double wsum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const auto xi = data_->row(i);
      const double w = std::exp(-squared_distance(x, xi) * inv_two_h2_);
      wsum += w;
      for (std::size_t k = 0; k < d; ++k) acc[k] += xi[k] * w;
    }
    if (!(wsum > 0.0)) throw SupportError("weighted_mean: all kernel weights vanish at the query point");
    for (auto& a : acc) a /= wsum;
    return acc;
  }

  std::vector<double> density_batch(const PointCloud& queries) const {
    if (queries.dim() != dim() && !queries.empty()) throw std::invalid_argument("density_batch: dimension mismatch");
    std::vector<double> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) { out[i] = density_at(queries.row(i)); });
    return out;
  }

 private:
  double weight_sum(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += std::exp(-squared_distance(x, data_->row(i)) * inv_two_h2_);
    return s;
  }

  std::shared_ptr<const PointCloud> data_;
  double h_;
  KernelSpec kernel_;
  double norm_ = 0.0;
  double inv_two_h2_ = 0.0;
};

inline DensityModel fit(PointCloud data, double h, KernelSpec kernel = {}) {
  return DensityModel(std::move(data), h, kernel);
}

// ---------------------------------------------------------------------------
// Bandwidth selection

namespace detail {
inline void require_spread(const PointCloud& data, const char* where) {
  for (double sd : column_sds(data))
    if (!(sd > 0.0)) throw std::invalid_argument(std::string(where) + ": a coordinate has zero variance");
}
}  // namespace detail

//! Normal-scale rule h = (4 / (d + 2))^(1 / (d + 4)) n^(-1 / (d + 4)) sigma,
//! sigma the mean per-coordinate sample sd.
inline double select_bandwidth_normal_scale(const PointCloud& data) {
  if (data.size() < 2) throw std::invalid_argument("select_bandwidth_normal_scale: need at least 2 points");
  detail::require_spread(data, "select_bandwidth_normal_scale");
  const double d = static_cast<double>(data.dim());
  const double n = static_cast<double>(data.size());
  return std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) * std::pow(n, -1.0 / (d + 4.0)) * mean_sd(data);
}

//! Smoothed cross-validation criterion for the isotropic bandwidth H = h^2 I
//! with gaussian pilot G = g^2 I:
//!   SCV(h) = R(K) / (n h^d)
//!          + n^-2 sum_{i,j} [phi_{2h^2+2g^2} - 2 phi_{h^2+2g^2} + phi_{2g^2}](X_i - X_j)
//! where phi_s is the centred normal density with covariance s I and R(K)
//! = (4 pi)^(-d/2). The double sum covers all ordered pairs, diagonal
//! included. Pairwise squared distances are computed once.
class ScvObjective {
 public:
  ScvObjective(const PointCloud& data, double pilot) : n_(data.size()), d_(data.dim()), pilot_(pilot) {
    sq_.reserve(n_ * (n_ - 1) / 2);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) sq_.push_back(squared_distance(data.row(i), data.row(j)));
    pilot_term_ = pair_sum(2.0 * pilot_ * pilot_);
  }

  double operator()(double h) const {
    const double h2 = h * h, g2 = pilot_ * pilot_;
    const double n = static_cast<double>(n_);
    const double rk = std::pow(4.0 * std::numbers::pi, -0.5 * static_cast<double>(d_));
    const double sum = pair_sum(2.0 * h2 + 2.0 * g2) - 2.0 * pair_sum(h2 + 2.0 * g2) + pilot_term_;
    return rk / (n * std::pow(h, static_cast<double>(d_))) + sum / (n * n);
  }

  double pilot() const noexcept { return pilot_; }

 private:
  //! sum over all ordered pairs (i, j) of phi_var(X_i - X_j).
  double pair_sum(double var) const {
    const double c = std::pow(2.0 * std::numbers::pi * var, -0.5 * static_cast<double>(d_));
    const double a = -0.5 / var;
    double off = 0.0;
    for (double s : sq_) off += std::exp(a * s);
    return c * (static_cast<double>(n_) + 2.0 * off);
  }

  std::size_t n_, d_;
  double pilot_;
  double pilot_term_ = 0.0;
  std::vector<double> sq_;
};

struct ScvOptions {
  std::size_t grid_points = 25;
  //! Golden-section stops when the log-bandwidth bracket is narrower than this.
  double log_tolerance = 1e-4;
};

//! Minimizes the SCV criterion over h in [h_NS / 10, 10 h_NS]: a logarithmic
//! grid locates the best cell, golden-section search refines inside it.
//! The pilot bandwidth is the normal-scale rule.
inline double select_bandwidth_scv(const PointCloud& data, ScvOptions opts = {}) {
  if (data.size() < 10) throw std::invalid_argument("select_bandwidth_scv: need at least 10 points");
  detail::require_spread(data, "select_bandwidth_scv");
  if (opts.grid_points < 3) throw std::invalid_argument("select_bandwidth_scv: grid needs >= 3 points");
  const double h_ns = select_bandwidth_normal_scale(data);
  const ScvObjective scv(data, h_ns);

  const double lo = std::log(h_ns / 10.0), hi = std::log(h_ns * 10.0);
  const double step = (hi - lo) / static_cast<double>(opts.grid_points - 1);
  std::size_t best = 0;
  double best_val = scv(std::exp(lo));
  for (std::size_t i = 1; i < opts.grid_points; ++i) {
    const double v = scv(std::exp(lo + step * static_cast<double>(i)));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
  double b = lo + step * static_cast<double>(std::min(best + 1, opts.grid_points - 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = scv(std::exp(x1)), f2 = scv(std::exp(x2));
  while (b - a > opts.log_tolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = scv(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = scv(std::exp(x2));
    }
  }
  double x = 0.5 * (a + b);
  if (best_val < scv(std::exp(x))) x = lo + step * static_cast<double>(best);
  return std::exp(x);
}

// ---------------------------------------------------------------------------
// Standardization

//! Per-coordinate affine map x -> (x - mean) / scale.
struct AffineTransform {
  Point mean;
  Point scale;

  PointCloud apply(const PointCloud& data) const {
    PointCloud out(data.dim());
    out.reserve(data.size());
    Point p(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t j = 0; j < data.dim(); ++j) p[j] = (data(i, j) - mean[j]) / scale[j];
      out.push_back(p);
    }
    return out;
  }

  PointCloud inverse(const PointCloud& data) const {
    PointCloud out(data.dim());
    out.reserve(data.size());
    Point p(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t j = 0; j < data.dim(); ++j) p[j] = data(i, j) * scale[j] + mean[j];
      out.push_back(p);
    }
    return out;
  }
};

//! Centres each coordinate to mean 0 and scales it to sample sd 1 (n - 1).
inline std::pair<PointCloud, AffineTransform> standardize(const PointCloud& data) {
  if (data.size() < 2) throw std::invalid_argument("standardize: need at least 2 points");
  AffineTransform t{column_means(data), column_sds(data)};
  for (std::size_t j = 0; j < t.scale.size(); ++j)
    if (!(t.scale[j] > 0.0))
      throw std::invalid_argument("standardize: coordinate " + std::to_string(j) + " is constant");
  return {t.apply(data), std::move(t)};
}

}  // namespace msd
