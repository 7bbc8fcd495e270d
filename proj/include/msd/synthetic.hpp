#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "msd/point_cloud.hpp"
#include "msd/rng.hpp"

namespace msd {

//! A cloud with per-point ground-truth structure ids. Ids are contiguous
//! from 0; background noise and planted outliers get their own id after the
//! structures.
struct LabeledCloud {
  PointCloud cloud;
  std::vector<int> labels;

  std::size_t size() const { return cloud.size(); }
  int label_count() const { return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1; }
};

//! round(eye_fraction * n0) points around the origin (label 0), the rest
//! uniform on the circle of radius ring_radius (label 1); both with
//! isotropic gaussian noise of sd sigma.
inline LabeledCloud gen_bullseye(std::size_t n0, double ring_radius, double eye_fraction, double sigma,
                                 std::uint64_t seed) {
  if (n0 < 2) throw std::invalid_argument("gen_bullseye: n0 must be >= 2");
  if (!(eye_fraction > 0.0 && eye_fraction < 1.0)) throw std::invalid_argument("gen_bullseye: eye_fraction must be in (0, 1)");
  if (!(sigma >= 0.0)) throw std::invalid_argument("gen_bullseye: sigma must be >= 0");
  if (!(ring_radius > 0.0)) throw std::invalid_argument("gen_bullseye: ring_radius must be positive");
  Rng rng(seed);
  const auto n_eye = static_cast<std::size_t>(std::llround(eye_fraction * static_cast<double>(n0)));
  LabeledCloud out{PointCloud(2), {}};
  out.cloud.reserve(n0);
  for (std::size_t i = 0; i < n0; ++i) {
    double x = 0.0, y = 0.0;
    int label = 0;
    if (i >= n_eye) {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      x = ring_radius * std::cos(theta);
      y = ring_radius * std::sin(theta);
      label = 1;
    }
    if (sigma > 0.0) {
      x += sigma * rng.normal();
      y += sigma * rng.normal();
    }
    out.cloud.push_back(Point{x, y});
    out.labels.push_back(label);
  }
  return out;
}

inline PointCloud gen_uniform_noise(std::size_t n1, const Point& box_low, const Point& box_high, std::uint64_t seed) {
  if (box_low.empty() || box_low.size() != box_high.size())
    throw std::invalid_argument("gen_uniform_noise: box corners must have equal, positive dimension");
  for (std::size_t j = 0; j < box_low.size(); ++j)
    if (!(box_low[j] < box_high[j])) throw std::invalid_argument("gen_uniform_noise: empty box");
  Rng rng(seed);
  PointCloud out(box_low.size());
  out.reserve(n1);
  Point p(box_low.size());
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = rng.uniform(box_low[j], box_high[j]);
    out.push_back(p);
  }
  return out;
}

//! Point of spiral arm `arm` (0 or 1) at parameter t in [0.25, 1]:
//! 0.7 t (cos(3 pi t + arm pi), sin(3 pi t + arm pi)).
inline Point spiral_arm_point(int arm, double t) {
  const double a = 3.0 * std::numbers::pi * t + arm * std::numbers::pi;
  return {0.7 * t * std::cos(a), 0.7 * t * std::sin(a)};
}

inline constexpr double kSpiralTMin = 0.25;
inline constexpr double kSpiralTMax = 1.0;

//! Two interleaved 1.5-turn arms, n0 / 2 points each (labels 0 and 1), with
//! gaussian jitter of sd sigma.
inline LabeledCloud gen_spiral(std::size_t n0, double sigma, std::uint64_t seed) {
  if (n0 == 0 || n0 % 2 != 0) throw std::invalid_argument("gen_spiral: n0 must be even and positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("gen_spiral: sigma must be >= 0");
  Rng rng(seed);
  LabeledCloud out{PointCloud(2), {}};
  out.cloud.reserve(n0);
  for (std::size_t i = 0; i < n0; ++i) {
    const int arm = i < n0 / 2 ? 0 : 1;
    Point p = spiral_arm_point(arm, rng.uniform(kSpiralTMin, kSpiralTMax));
    if (sigma > 0.0) {
      p[0] += sigma * rng.normal();
      p[1] += sigma * rng.normal();
    }
    out.cloud.push_back(p);
    out.labels.push_back(arm);
  }
  return out;
}

//! n draws from mix N(mu1, s1^2) + (1 - mix) N(mu2, s2^2).
inline PointCloud gen_gmm_1d(std::size_t n, double mix, double mu1, double mu2, double s1, double s2,
                             std::uint64_t seed) {
  if (!(mix >= 0.0 && mix <= 1.0)) throw std::invalid_argument("gen_gmm_1d: mix must be in [0, 1]");
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw std::invalid_argument("gen_gmm_1d: standard deviations must be positive");
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() < mix ? rng.normal(mu1, s1) : rng.normal(mu2, s2);
  return PointCloud::from_values(std::move(v));
}

//! Isotropic gaussian blobs; component i contributes counts[i] points with
//! label i.
inline LabeledCloud gen_gmm_2d(const std::vector<Point>& means, const std::vector<double>& sds,
                               const std::vector<std::size_t>& counts, std::uint64_t seed) {
  if (means.empty() || means.size() != sds.size() || means.size() != counts.size())
    throw std::invalid_argument("gen_gmm_2d: means, sds and counts must be non-empty and congruent");
  const std::size_t d = means.front().size();
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (means[c].size() != d || d == 0) throw std::invalid_argument("gen_gmm_2d: inconsistent mean dimensions");
    if (!(sds[c] >= 0.0)) throw std::invalid_argument("gen_gmm_2d: negative sd");
  }
  Rng rng(seed);
  LabeledCloud out{PointCloud(d), {}};
  Point p(d);
  for (std::size_t c = 0; c < means.size(); ++c)
    for (std::size_t i = 0; i < counts[c]; ++i) {
      for (std::size_t j = 0; j < d; ++j) p[j] = means[c][j] + sds[c] * rng.normal();
      out.cloud.push_back(p);
      out.labels.push_back(static_cast<int>(c));
    }
  return out;
}

//! Appends `extra` with one new label (the next id after the existing ones).
inline LabeledCloud append_labeled(LabeledCloud cloud, const PointCloud& extra) {
  if (extra.empty()) return cloud;
  if (extra.dim() != cloud.cloud.dim()) throw std::invalid_argument("append_labeled: dimension mismatch");
  const int id = cloud.label_count();
  cloud.cloud.append(extra);
  cloud.labels.insert(cloud.labels.end(), extra.size(), id);
  return cloud;
}

inline LabeledCloud plant_outliers(LabeledCloud cloud, const std::vector<Point>& outliers) {
  if (outliers.empty()) return cloud;
  for (const auto& o : outliers)
    if (o.size() != cloud.cloud.dim()) throw std::invalid_argument("plant_outliers: dimension mismatch");
  return append_labeled(std::move(cloud), PointCloud::from_rows(outliers));
}

// ---------------------------------------------------------------------------
// Scenario fixtures

struct AnomalyScenario {
  LabeledCloud data;
  std::vector<std::size_t> outlier_indices;
};

inline const std::vector<Point>& anomaly_default_means() {
  static const std::vector<Point> m{{-3.0, 0.0}, {3.0, 0.0}, {0.0, 4.0}};
  return m;
}

inline constexpr double kAnomalyBlobSd = 0.7;

//! Planted points 3.75 blob sds (2.625 units) outward from a blob centre.
//! There the KDE is below nearly every inlier, yet the nearest blob still
//! outweighs the point's own kernel, so its trajectory reaches a blob mode.
//! From about 4.5 sds on, an isolated point is a KDE mode of its own and
//! scores ~0.
inline const std::vector<Point>& anomaly_default_outliers() {
  static const std::vector<Point> o{{-5.625, 0.0}, {5.625, 0.0}, {0.0, 6.625}, {-4.575, -2.1}, {4.575, -2.1}};
  return o;
}

//! Three blobs of 200 points (sd 0.7) plus five planted outliers, which are
//! the last five points.
inline AnomalyScenario anomaly_scenario(std::uint64_t seed) {
  auto blobs = gen_gmm_2d(anomaly_default_means(), {kAnomalyBlobSd, kAnomalyBlobSd, kAnomalyBlobSd}, {200, 200, 200}, seed);
  const std::size_t n = blobs.size();
  AnomalyScenario s{plant_outliers(std::move(blobs), anomaly_default_outliers()), {}};
  for (std::size_t i = 0; i < anomaly_default_outliers().size(); ++i) s.outlier_indices.push_back(n + i);
  return s;
}

}  // namespace msd
