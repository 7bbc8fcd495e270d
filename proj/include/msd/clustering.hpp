#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "msd/point_cloud.hpp"
#include "msd/rng.hpp"
#include "msd/stats.hpp"

namespace msd {

//! Cluster assignment: ids in [0, k).
struct LabelSet {
  std::vector<int> labels;
  int k = 0;

  LabelSet() = default;
  explicit LabelSet(std::vector<int> ids) : labels(std::move(ids)) {
    for (int v : labels)
      if (v < 0) throw std::invalid_argument("LabelSet: negative label");
    k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }

  std::size_t size() const noexcept { return labels.size(); }
  bool operator==(const LabelSet&) const = default;
};

namespace detail {

//! Renumbers ids in order of first appearance.
inline LabelSet canonical_labels(const std::vector<int>& raw) {
  std::map<int, int> ids;
  std::vector<int> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(raw[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  return LabelSet(std::move(out));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// k-means

struct KMeansResult {
  LabelSet labels;
  PointCloud centroids;
  double wcss = 0.0;
  //! Objective after each Lloyd iteration of the winning restart.
  std::vector<double> objective_history;
};

namespace detail {

inline double assign(const PointCloud& data, const PointCloud& centroids, std::vector<int>& labels,
                     std::vector<double>& dist) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(data.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    dist[i] = best;
    total += best;
  }
  return total;
}

//! k-means++ seeding; when all remaining D^2 weights are zero (duplicates)
//! the lowest unchosen index is taken.
inline PointCloud seed_plus_plus(const PointCloud& data, std::size_t k, Rng& rng) {
  const std::size_t n = data.size();
  PointCloud centroids(data.dim());
  std::vector<char> chosen(n, 0);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centroids.push_back(data.row(first));
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(data.row(i), data.row(first));
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n)
        for (std::size_t i = n; i-- > 0;)
          if (!chosen[i] && d2[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen[pick] = 1;
    centroids.push_back(data.row(pick));
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(data.row(i), data.row(pick)));
  }
  return centroids;
}

inline KMeansResult lloyd(const PointCloud& data, PointCloud centroids, std::size_t max_iter) {
  const std::size_t n = data.size(), d = data.dim(), k = centroids.size();
  std::vector<int> labels(n, -1);
  std::vector<double> dist(n);
  KMeansResult r;
  double obj = assign(data, centroids, labels, dist);
  r.objective_history.push_back(obj);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::vector<double> sum(k * d, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[labels[i]];
      for (std::size_t j = 0; j < d; ++j) sum[labels[i] * d + j] += data(i, j);
    }
    std::vector<double> next(k * d);
    std::vector<char> taken(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // Empty cluster: re-seed at the point farthest from its centroid.
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < n; ++i)
          if (!taken[i] && dist[i] > fd) {
            fd = dist[i];
            far = i;
          }
        taken[far] = 1;
        for (std::size_t j = 0; j < d; ++j) next[c * d + j] = data(far, j);
      } else {
        for (std::size_t j = 0; j < d; ++j) next[c * d + j] = sum[c * d + j] / static_cast<double>(count[c]);
      }
    }
    centroids = PointCloud(d, std::move(next));
    std::vector<int> prev = labels;
    obj = assign(data, centroids, labels, dist);
    r.objective_history.push_back(obj);
    if (labels == prev) break;
  }
  r.labels = LabelSet(labels);
  r.labels.k = static_cast<int>(k);
  r.centroids = std::move(centroids);
  r.wcss = obj;
  return r;
}

}  // namespace detail

//! Lloyd iterations from k-means++ seeds; best of `restarts` by within-
//! cluster sum of squares (ties keep the earlier restart).
inline KMeansResult kmeans_detailed(const PointCloud& data, std::size_t k, std::uint64_t seed,
                                    std::size_t restarts = 10, std::size_t max_iter = 300) {
  if (k == 0 || k > data.size()) throw std::invalid_argument("kmeans: k must be in [1, n]");
  if (restarts == 0) throw std::invalid_argument("kmeans: restarts must be >= 1");
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, r));
    auto res = detail::lloyd(data, detail::seed_plus_plus(data, k, rng), max_iter);
    if (res.wcss < best.wcss) best = std::move(res);
  }
  return best;
}

inline LabelSet kmeans(const PointCloud& data, std::size_t k, std::uint64_t seed, std::size_t restarts = 10) {
  return kmeans_detailed(data, k, seed, restarts).labels;
}

// ---------------------------------------------------------------------------
// Spectral clustering

struct SpectralOptions {
  //! Gaussian affinity scale; <= 0 selects the median pairwise distance of
  //! (a seeded 500-point subsample of) the data.
  double sigma = 0.0;
  //! Keep only edges to the knn nearest neighbours (symmetrized); 0 = dense.
  std::size_t knn = 0;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
};

struct SpectralResult {
  LabelSet labels;
  double sigma = 0.0;
  std::size_t graph_components = 1;
  bool too_many_components = false;
  std::vector<double> eigenvalues;  // leading k, descending
};

inline double median_pairwise_distance(const PointCloud& data, std::uint64_t seed, std::size_t max_points = 500) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (idx.size() > max_points) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(max_points);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<double> d;
  d.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) d.push_back(distance(data.row(idx[a]), data.row(idx[b])));
  if (d.empty()) return 1.0;
  return median(std::move(d));
}

//! Normalized spectral clustering: gaussian affinity W (zero diagonal),
//! M = D^(-1/2) W D^(-1/2), the k leading eigenvectors of M as rows,
//! rows scaled to unit length, then k-means on the rows.
inline SpectralResult spectral_clustering(const PointCloud& data, std::size_t k, SpectralOptions opts = {}) {
  const std::size_t n = data.size();
  if (k == 0 || k > n) throw std::invalid_argument("spectral: k must be in [1, n]");
  SpectralResult res;
  if (k == 1) {
    res.labels = LabelSet(std::vector<int>(n, 0));
    return res;
  }
  if (n < k + 1) throw std::invalid_argument("spectral: need n >= k + 1");
  res.sigma = opts.sigma > 0.0 ? opts.sigma : median_pairwise_distance(data, opts.seed);
  const double inv = 1.0 / (2.0 * res.sigma * res.sigma);

  Eigen::MatrixXd sq(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    sq(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) sq(i, j) = sq(j, i) = squared_distance(data.row(i), data.row(j));
  }
  Eigen::MatrixXd w = (-sq.array() * inv).exp().matrix();
  w.diagonal().setZero();
  if (opts.knn > 0 && opts.knn < n - 1) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> keep =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(opts.knn + 1), order.end(),
                        [&](std::size_t a, std::size_t b) { return sq(i, a) < sq(i, b) || (sq(i, a) == sq(i, b) && a < b); });
      std::size_t taken = 0;
      for (std::size_t t = 0; t < n && taken < opts.knn; ++t) {
        if (order[t] == i) continue;
        keep(i, order[t]) = keep(order[t], i) = true;
        ++taken;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!keep(i, j)) w(i, j) = 0.0;
  }

  // connected components of the affinity graph
  {
    std::vector<int> comp(n, -1);
    int nc = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (comp[s] >= 0) continue;
      std::queue<std::size_t> q;
      q.push(s);
      comp[s] = nc;
      while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v)
          if (comp[v] < 0 && w(u, v) > 0.0) {
            comp[v] = nc;
            q.push(v);
          }
      }
      ++nc;
    }
    res.graph_components = static_cast<std::size_t>(nc);
    res.too_many_components = res.graph_components > k;
  }

  Eigen::VectorXd dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double deg = w.row(static_cast<Eigen::Index>(i)).sum();
    dinv(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  const Eigen::MatrixXd m = dinv.asDiagonal() * w * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw std::runtime_error("spectral: eigendecomposition failed");

  // eigenvalues ascending; take the last k columns
  std::vector<double> rows(n * k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(n - 1 - c);
    res.eigenvalues.push_back(eig.eigenvalues()(col));
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    // Fix the sign so the embedding does not depend on the solver's choice.
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    for (std::size_t i = 0; i < n; ++i) rows[i * k + c] = v(static_cast<Eigen::Index>(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < k; ++c) norm += rows[i * k + c] * rows[i * k + c];
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (std::size_t c = 0; c < k; ++c) rows[i * k + c] /= norm;
  }
  res.labels = kmeans(PointCloud(k, std::move(rows)), k, opts.seed, opts.restarts);
  return res;
}

inline LabelSet spectral(const PointCloud& data, std::size_t k, SpectralOptions opts = {}) {
  return spectral_clustering(data, k, opts).labels;
}

// ---------------------------------------------------------------------------
// Agglomerative clustering

enum class Linkage { single, complete, average, ward };

//! Agglomerative clustering with Lance-Williams updates (ward on squared
//! euclidean distances). The closest pair merges first; ties go to the pair
//! with the lowest (i, j) slot indices, where a merged cluster keeps the
//! lower slot. Output ids follow first appearance by point index.
inline LabelSet hierarchical(const PointCloud& data, std::size_t k, Linkage linkage = Linkage::average) {
  const std::size_t n = data.size();
  if (k == 0 || k > n) throw std::invalid_argument("hierarchical: k must be in [1, n]");
  std::vector<double> dmat(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = squared_distance(data.row(i), data.row(j));
      if (linkage != Linkage::ward) v = std::sqrt(v);
      dmat[i * n + j] = dmat[j * n + i] = v;
    }
  auto D = [&](std::size_t i, std::size_t j) -> double& { return dmat[i * n + j]; };

  std::vector<char> alive(n, 1);
  std::vector<std::size_t> csize(n, 1);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  // nearest alive partner with a larger slot index
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nnd(n, std::numeric_limits<double>::infinity());
  auto refresh = [&](std::size_t i) {
    nn[i] = n;
    nnd[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j)
      if (alive[j] && D(i, j) < nnd[i]) {
        nnd[i] = D(i, j);
        nn[i] = j;
      }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t clusters = n; clusters > k; --clusters) {
    std::size_t a = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i] && nn[i] < n && nnd[i] < best) {
        best = nnd[i];
        a = i;
      }
    const std::size_t b = nn[a];
    const double na = static_cast<double>(csize[a]), nb = static_cast<double>(csize[b]);
    const double dab = D(a, b);
    for (std::size_t m = 0; m < n; ++m) {
      if (!alive[m] || m == a || m == b) continue;
      const double dam = D(a, m), dbm = D(b, m);
      double v = 0.0;
      switch (linkage) {
        case Linkage::single: v = std::min(dam, dbm); break;
        case Linkage::complete: v = std::max(dam, dbm); break;
        case Linkage::average: v = (na * dam + nb * dbm) / (na + nb); break;
        case Linkage::ward: {
          const double nm = static_cast<double>(csize[m]);
          v = ((na + nm) * dam + (nb + nm) * dbm - nm * dab) / (na + nb + nm);
          break;
        }
      }
      D(a, m) = D(m, a) = v;
    }
    alive[b] = 0;
    csize[a] += csize[b];
    parent[b] = a;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      if (i == a || nn[i] == a || nn[i] == b) {
        refresh(i);
      } else if (i < a && D(i, a) < nnd[i]) {
        nnd[i] = D(i, a);
        nn[i] = a;
      } else if (i < a && D(i, a) == nnd[i] && a < nn[i]) {
        nn[i] = a;
      }
    }
  }
  std::vector<int> root(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = i;
    while (parent[r] != r) r = parent[r];
    root[i] = static_cast<int>(r);
  }
  return detail::canonical_labels(root);
}

// ---------------------------------------------------------------------------
// Adjusted Rand Index

//! Hubert-Arabie adjusted Rand index from the pair-counting contingency
//! table. When the adjustment denominator vanishes (both partitions
//! trivial) the result is 1 for identical partitions and 0 otherwise.
inline double ari(const LabelSet& a, const LabelSet& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ari: label sets differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    table[{a.labels[i], b.labels[i]}] += 1.0;
    rows[a.labels[i]] += 1.0;
    cols[b.labels[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, v] : table) sum_ij += c2(v);
  for (const auto& [key, v] : rows) sum_a += c2(v);
  for (const auto& [key, v] : cols) sum_b += c2(v);
  const double total = c2(static_cast<double>(n));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) {
    const bool same = table.size() == rows.size() && table.size() == cols.size();
    return same ? 1.0 : 0.0;
  }
  return (sum_ij - expected) / denom;
}

}  // namespace msd
