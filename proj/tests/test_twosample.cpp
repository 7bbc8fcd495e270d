#include <gtest/gtest.h>

#include <cmath>

#include "msd/synthetic.hpp"
#include "msd/twosample.hpp"

using namespace msd;

namespace {

PointCloud gaussian_cloud(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> c(n * d);
  for (auto& v : c) v = rng.normal(shift, 1.0);
  return PointCloud(d, c);
}

PointCloud rotate_translate(const PointCloud& p, double angle, double dx, double dy) {
  PointCloud out(2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p(i, 0), y = p(i, 1);
    out.push_back(Point{std::cos(angle) * x - std::sin(angle) * y + dx, std::sin(angle) * x + std::cos(angle) * y + dy});
  }
  return out;
}

PointCloud reversed(const PointCloud& p) {
  PointCloud out(p.dim());
  for (std::size_t i = p.size(); i-- > 0;) out.push_back(p.row(i));
  return out;
}

}  // namespace

TEST(Statistics, ZeroOnIdenticalSamples) {
  const auto x = gaussian_cloud(40, 2, 0.0, 1);
  EXPECT_NEAR(energy_statistic(x, x), 0.0, 1e-12);
  EXPECT_NEAR(mmd2_biased(x, x, 1.0), 0.0, 1e-12);
}

TEST(Statistics, TwoPointValues) {
  const auto x = PointCloud::from_values({0.0}), y = PointCloud::from_values({1.0});
  EXPECT_DOUBLE_EQ(energy_statistic(x, y), 1.0);
  EXPECT_NEAR(mmd2_biased(x, y, 1.0), 2.0 - 2.0 * std::exp(-0.5), 1e-15);
}

TEST(Statistics, RigidMotionAndOrderInvariance) {
  const auto x = gaussian_cloud(30, 2, 0.0, 2), y = gaussian_cloud(25, 2, 0.5, 3);
  const auto xr = rotate_translate(x, 0.7, 3.0, -2.0), yr = rotate_translate(y, 0.7, 3.0, -2.0);
  EXPECT_NEAR(energy_statistic(x, y), energy_statistic(xr, yr), 1e-10);
  EXPECT_NEAR(mmd2_biased(x, y, 1.3), mmd2_biased(xr, yr, 1.3), 1e-10);
  EXPECT_NEAR(energy_statistic(x, y), energy_statistic(reversed(x), reversed(y)), 1e-10);
  EXPECT_NEAR(mmd2_biased(x, y), mmd2_biased(reversed(x), reversed(y)), 1e-10);
}

TEST(Statistics, Preconditions) {
  EXPECT_THROW(energy_statistic(PointCloud(1), PointCloud::from_values({1.0})), std::invalid_argument);
  EXPECT_THROW(energy_statistic(gaussian_cloud(3, 2, 0, 1), gaussian_cloud(3, 1, 0, 1)), std::invalid_argument);
}

TEST(PermutationTest, PValueFormula) {
  const auto r = finish_test(2.0, {1.0, 2.0, 3.0, 0.5}, 0.05);
  EXPECT_DOUBLE_EQ(r.p_value, 3.0 / 5.0);
  EXPECT_FALSE(r.reject);
  const auto s = finish_test(10.0, std::vector<double>(99, 1.0), 0.01);
  EXPECT_DOUBLE_EQ(s.p_value, 0.01);
  EXPECT_TRUE(s.reject);
}

TEST(PermutationTest, ConstantStatisticGivesOne) {
  const auto x = gaussian_cloud(10, 1, 0.0, 4), y = gaussian_cloud(10, 1, 3.0, 5);
  const auto r = permutation_test([](const PointCloud&, const PointCloud&) { return 7.0; }, x, y, 99, 1);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.reject);
}

TEST(PermutationTest, ReproducibleAndValidated) {
  const auto x = gaussian_cloud(50, 1, 0.0, 6), y = gaussian_cloud(60, 1, 0.3, 7);
  for (auto kind : {TwoSampleTest::energy, TwoSampleTest::mmd}) {
    const auto a = two_sample_test(x, y, kind, 199, 42), b = two_sample_test(x, y, kind, 199, 42);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.n_permutations, 199u);
    EXPECT_THROW(two_sample_test(x, y, kind, 98, 42), std::invalid_argument);
  }
  EXPECT_THROW(permutation_test(energy_statistic, x, y, 50, 1), std::invalid_argument);
}

TEST(PermutationTest, PooledEngineMatchesDirectStatistic) {
  for (std::size_t d : {1u, 2u}) {
    const auto x = gaussian_cloud(35, d, 0.0, 8), y = gaussian_cloud(20, d, 0.4, 9);
    EXPECT_NEAR(two_sample_test(x, y, TwoSampleTest::energy, 99, 1).statistic, energy_statistic(x, y), 1e-9);
    EXPECT_NEAR(two_sample_test(x, y, TwoSampleTest::mmd, 99, 1, 0.05, 0.8).statistic, mmd2_biased(x, y, 0.8), 1e-12);
    EXPECT_NEAR(two_sample_test(x, y, TwoSampleTest::mmd, 99, 1).statistic, mmd2_biased(x, y), 1e-12);
  }
}

TEST(PermutationTest, PooledEngineAgreesWithGenericPValue) {
  for (std::size_t d : {1u, 2u}) {
    const auto x = gaussian_cloud(40, d, 0.0, 10), y = gaussian_cloud(40, d, 0.35, 11);
    const auto fast = two_sample_test(x, y, TwoSampleTest::energy, 2000, 3);
    const auto slow = permutation_test(energy_statistic, x, y, 2000, 4);
    const double se = std::sqrt(fast.p_value * (1 - fast.p_value) / 2000.0) + 1e-3;
    EXPECT_NEAR(fast.p_value, slow.p_value, 5.0 * std::sqrt(2.0) * se);
  }
}

TEST(PermutationTest, SeparatedSamplesReject) {
  const auto x = gaussian_cloud(50, 2, 0.0, 12), y = gaussian_cloud(50, 2, 2.0, 13);
  EXPECT_TRUE(two_sample_test(x, y, TwoSampleTest::energy, 199, 1).reject);
  EXPECT_TRUE(two_sample_test(x, y, TwoSampleTest::mmd, 199, 1).reject);
  EXPECT_DOUBLE_EQ(two_sample_test(x, y, TwoSampleTest::energy, 199, 1).p_value, 1.0 / 200.0);
}

TEST(PowerHarness, ShapesAndNullFlags) {
  PowerConfig cfg;
  cfg.n0 = 100;
  cfg.reps = 4;
  cfg.n_perm = 99;
  cfg.msd = true;
  const auto curve = power_experiment_uniform_noise({0, 300}, cfg);
  EXPECT_EQ(curve.power_before.size(), 2u);
  EXPECT_EQ(curve.power_after.size(), 2u);
  EXPECT_EQ(curve.h0, (std::vector<char>{1, 0}));
  cfg.msd = false;
  const auto mix = power_experiment_mixture_proportion({0.5, 0.9}, cfg);
  EXPECT_TRUE(mix.power_after.empty());
  EXPECT_EQ(mix.h0, (std::vector<char>{1, 0}));
  EXPECT_THROW(power_experiment_uniform_noise({1.5}, cfg), std::invalid_argument);
  EXPECT_THROW(power_experiment_mixture_proportion({1.0}, cfg), std::invalid_argument);
  cfg.reps = 0;
  EXPECT_THROW(power_experiment_mixture_proportion({0.5}, cfg), std::invalid_argument);
}

TEST(PowerHarness, Deterministic) {
  PowerConfig cfg;
  cfg.n0 = 60;
  cfg.reps = 5;
  cfg.n_perm = 99;
  cfg.test = TwoSampleTest::mmd;
  EXPECT_EQ(power_experiment_mixture_proportion({0.5, 0.7}, cfg).power_before,
            power_experiment_mixture_proportion({0.5, 0.7}, cfg).power_before);
}
