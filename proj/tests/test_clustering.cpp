#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "msd/clustering.hpp"
#include "msd/rng.hpp"

using namespace msd;

namespace {

PointCloud two_blobs(std::size_t per, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud out(2);
  for (std::size_t i = 0; i < 2 * per; ++i) {
    const double cx = i < per ? -5.0 : 5.0;
    out.push_back(Point{rng.normal(cx, 0.5), rng.normal(0.0, 0.5)});
  }
  return out;
}

LabelSet block_labels(std::size_t per) {
  std::vector<int> l(2 * per, 0);
  for (std::size_t i = per; i < 2 * per; ++i) l[i] = 1;
  return LabelSet(l);
}

PointCloud two_rings(std::size_t per, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud out(2);
  for (std::size_t i = 0; i < 2 * per; ++i) {
    const double r = i < per ? 1.0 : 4.0;
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(Point{r * std::cos(t) + rng.normal(0, 0.05), r * std::sin(t) + rng.normal(0, 0.05)});
  }
  return out;
}

// Rand-index oracle by explicit pair enumeration, adjusted with the
// permutation-model expectation computed from the same pair counts.
double ari_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double both = 0, in_a = 0, in_b = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      in_a += sa;
      in_b += sb;
      pairs += 1;
    }
  const double expected = in_a * in_b / pairs;
  const double max_index = 0.5 * (in_a + in_b);
  if (max_index == expected) return 1.0;
  return (both - expected) / (max_index - expected);
}

}  // namespace

TEST(KMeans, SeparatedBlobs) {
  const auto data = two_blobs(50, 1);
  EXPECT_DOUBLE_EQ(ari(kmeans(data, 2, 7), block_labels(50)), 1.0);
}

TEST(KMeans, DegenerateK) {
  const auto data = two_blobs(10, 2);
  const auto one = kmeans(data, 1, 3);
  EXPECT_EQ(one.k, 1);
  const auto all = kmeans_detailed(data, data.size(), 3);
  EXPECT_NEAR(all.wcss, 0.0, 1e-12);
  EXPECT_EQ(all.labels.k, static_cast<int>(data.size()));
  EXPECT_THROW(kmeans(data, data.size() + 1, 3), std::invalid_argument);
  EXPECT_THROW(kmeans(data, 0, 3), std::invalid_argument);
}

TEST(KMeans, ObjectiveNeverIncreases) {
  Rng rng(4);
  std::vector<double> c(600);
  for (auto& v : c) v = rng.normal();
  const auto res = kmeans_detailed(PointCloud(2, c), 5, 9, 1);
  for (std::size_t i = 1; i < res.objective_history.size(); ++i)
    EXPECT_LE(res.objective_history[i], res.objective_history[i - 1] + 1e-9);
}

TEST(KMeans, Deterministic) {
  const auto data = two_rings(60, 5);
  EXPECT_EQ(kmeans(data, 3, 11).labels, kmeans(data, 3, 11).labels);
}

TEST(Spectral, ConcentricRings) {
  const auto data = two_rings(100, 6);
  SpectralOptions opts;
  opts.sigma = 0.3;
  const auto res = spectral_clustering(data, 2, opts);
  EXPECT_DOUBLE_EQ(ari(res.labels, block_labels(100)), 1.0);
  ASSERT_EQ(res.eigenvalues.size(), 2u);
  EXPECT_GE(res.eigenvalues[0], res.eigenvalues[1]);
  EXPECT_NEAR(res.eigenvalues[0], 1.0, 1e-8);
  // kmeans cannot split nested rings
  EXPECT_LT(ari(kmeans(data, 2, 1), block_labels(100)), 0.5);
}

TEST(Spectral, SingleCluster) {
  const auto res = spectral(two_blobs(10, 7), 1);
  EXPECT_EQ(res.k, 1);
}

TEST(Spectral, DuplicatedPointsShareLabels) {
  const auto base = two_blobs(5, 8);
  PointCloud doubled = base;
  doubled.append(base);
  SpectralOptions opts;
  opts.sigma = 1.0;
  const auto l = spectral(doubled, 2, opts);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(l.labels[i], l.labels[i + base.size()]);
  EXPECT_DOUBLE_EQ(ari(LabelSet(std::vector<int>(l.labels.begin(), l.labels.begin() + 10)), block_labels(5)), 1.0);
}

TEST(Spectral, KnnGraph) {
  SpectralOptions opts;
  opts.sigma = 0.5;
  opts.knn = 10;
  EXPECT_DOUBLE_EQ(ari(spectral(two_rings(100, 9), 2, opts), block_labels(100)), 1.0);
}

TEST(Hierarchical, SingleLinkageChain) {
  const auto data = PointCloud::from_values({0.0, 0.1, 0.2, 10.0, 10.1});
  EXPECT_EQ(hierarchical(data, 2, Linkage::single).labels, (std::vector<int>{0, 0, 0, 1, 1}));
  for (auto link : {Linkage::complete, Linkage::average, Linkage::ward})
    EXPECT_EQ(hierarchical(data, 2, link).labels, (std::vector<int>{0, 0, 0, 1, 1}));
}

TEST(Hierarchical, KEqualsNGivesSingletons) {
  const auto data = PointCloud::from_values({3.0, 1.0, 2.0});
  EXPECT_EQ(hierarchical(data, 3).labels, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(hierarchical(data, 1).labels, (std::vector<int>{0, 0, 0}));
  EXPECT_THROW(hierarchical(data, 4), std::invalid_argument);
}

TEST(Hierarchical, Blobs) {
  EXPECT_DOUBLE_EQ(ari(hierarchical(two_blobs(40, 10), 2, Linkage::ward), block_labels(40)), 1.0);
}

TEST(Ari, MatchesPairEnumeration) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(20);
    const int ka = 1 + static_cast<int>(rng.below(4)), kb = 1 + static_cast<int>(rng.below(4));
    std::vector<int> a(n), b(n);
    for (auto& v : a) v = static_cast<int>(rng.below(ka));
    for (auto& v : b) v = static_cast<int>(rng.below(kb));
    EXPECT_NEAR(ari(LabelSet(a), LabelSet(b)), ari_oracle(a, b), 1e-12) << "trial " << t;
  }
}

TEST(Ari, WorkedExample) {
  // contingency {2,0 | 1,1}: sum_ij = 1, rows 2, cols 3, expected 1, max 2.5
  EXPECT_NEAR(ari(LabelSet({0, 0, 1, 1}), LabelSet({0, 1, 1, 1})), 0.0, 1e-12);
  // {2,2,2} against {2,4}: sum_ij = 3, rows 3, cols 7, expected 1.4, max 5
  EXPECT_NEAR(ari(LabelSet({0, 0, 1, 1, 2, 2}), LabelSet({0, 0, 1, 1, 1, 1})), 4.0 / 9.0, 1e-12);
}

TEST(Ari, SymmetryAndRelabeling) {
  const LabelSet a({0, 0, 1, 1, 2, 2, 2}), b({1, 1, 1, 0, 0, 2, 2});
  EXPECT_DOUBLE_EQ(ari(a, b), ari(b, a));
  EXPECT_DOUBLE_EQ(ari(a, LabelSet({5, 5, 3, 3, 9, 9, 9})), 1.0);
  EXPECT_THROW(ari(LabelSet({0, 1}), LabelSet({0})), std::invalid_argument);
}

TEST(Ari, TrivialPartitions) {
  EXPECT_EQ(ari(LabelSet({0, 0, 0}), LabelSet({0, 0, 0})), 1.0);
  EXPECT_EQ(ari(LabelSet({0, 1, 2}), LabelSet({0, 1, 2})), 1.0);
  EXPECT_EQ(ari(LabelSet({0, 0, 0}), LabelSet({0, 1, 2})), 0.0);
}
