#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "msd/experiments.hpp"
#include "msd/theory_lab.hpp"

using namespace msd;

namespace {

double trapezoid(const std::function<double(double)>& g, double a, double b, int steps = 20000) {
  const double dx = (b - a) / steps;
  double s = 0.5 * (g(a) + g(b));
  for (int i = 1; i < steps; ++i) s += g(a + i * dx);
  return s * dx;
}

PointCloud normal_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return standard_normal().sample(n, rng);
}

}  // namespace

TEST(LevelSetMass, StandardNormalUnitInterval) {
  const auto f = standard_normal();
  const auto spec = level_set(f, normal_pdf(1.0));
  ASSERT_EQ(spec.boundary.size(), 2u);
  EXPECT_NEAR(spec.boundary[0], -1.0, 1e-9);
  EXPECT_NEAR(spec.boundary[1], 1.0, 1e-9);
  const double exact = trapezoid([](double x) { return normal_pdf(x); }, -1.0, 1.0);
  const std::size_t n = 100000;
  EXPECT_NEAR(level_set_mass(normal_sample(n, 1), spec), exact, 4.0 * std::sqrt(0.68 * 0.32 / n));
}

TEST(LevelSetMass, ExtremeLevels) {
  const auto f = standard_normal();
  const auto sample = normal_sample(1000, 2);
  EXPECT_EQ(level_set_mass(sample, level_set(f, 1e-300)), 1.0);
  EXPECT_EQ(level_set_mass(sample, level_set(f, 1.0)), 0.0);
  EXPECT_THROW(level_set_mass(PointCloud(1), level_set(f, 0.1)), std::invalid_argument);
}

TEST(GeometricDensity, CountingIdentities) {
  const auto s = PointCloud::from_rows({{0, 0}, {1, 0}, {0, 1}});
  EXPECT_DOUBLE_EQ(geometric_density_at(s, Point{0, 0}, 100.0), 1.0 / (std::numbers::pi * 1e4));
  EXPECT_EQ(geometric_density_at(s, Point{50, 50}, 0.5), 0.0);
  EXPECT_THROW(geometric_density_at(s, Point{0, 0}, 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(unit_ball_volume(1), 2.0);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-12);
}

TEST(GeometricDensity, NormalPeak) {
  EXPECT_NEAR(geometric_density_at(normal_sample(400000, 3), Point{0.0}, 0.1), normal_pdf(0.0), 0.1 * normal_pdf(0.0));
}

TEST(MassIncrease, NonnegativeAndQuadraticInBandwidth) {
  const auto f = reference_mixture();
  const auto rep = mass_increase_curve(f, half_lower_mode_level(f), {0.05, 0.1, 0.2, 0.4}, 200000, 4);
  for (std::size_t i = 0; i < rep.grid.size(); ++i) EXPECT_GE(rep.measured[i], -3.0 * rep.standard_error[i]);
  EXPECT_GE(rep.slope, 1.7);
  EXPECT_LE(rep.slope, 2.3);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(MassIncrease, MatchesBoundaryFluxPrediction) {
  // to first order dQ = h^2 sum_b |f'(b)|: each boundary point lets through
  // the mass f(b) |shift(b)| = lambda h^2 |f'(b)| / lambda
  const auto f = reference_mixture();
  const auto spec = half_lower_mode_level(f);
  ASSERT_EQ(spec.boundary.size(), 4u);
  const auto rep = mass_increase_curve(f, spec, {0.05, 0.1}, 400000, 5);
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    const double predicted = rep.series.at("boundary_flux_prediction")[i];
    EXPECT_NEAR(rep.measured[i], predicted, 4.0 * rep.standard_error[i] + 0.05 * predicted);
  }
}

TEST(MassIncrease, ExplicitLowerBoundHolds) {
  const auto f = reference_mixture();
  const auto rep = mass_increase_curve(f, half_lower_mode_level(f), {0.05, 0.1, 0.2, 0.4}, 200000, 6);
  const auto& bound = rep.series.at("explicit_bound");
  for (std::size_t i = 0; i < rep.grid.size(); ++i)
    EXPECT_GE(rep.measured[i], bound[i]) << "h = " << rep.grid[i];
}

TEST(MassIncrease, RejectsInadmissibleBandwidth) {
  const auto f = reference_mixture();
  const auto spec = half_lower_mode_level(f);
  const double hmax = std::sqrt(level_set_h2_limit(f, spec, 1.0));
  EXPECT_THROW(mass_increase_curve(f, spec, {0.1, 1.1 * hmax}, 1000, 7), std::invalid_argument);
}

TEST(ModeRatio, StandardNormalModeQuadratic) {
  const auto f = standard_normal();
  const auto rep = mode_density_ratio_curve(f, {0.0}, {0.1, 0.2, 0.4}, 0.05, 4000000, 8);
  for (double v : rep.measured) EXPECT_GT(v, 0.0);
  EXPECT_GE(rep.slope, 1.6);
  EXPECT_LE(rep.slope, 2.4);
  // at a gaussian mode the population map is x -> (1 - h^2) x, so the ratio is 1 / (1 - h^2)
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    const double h2 = rep.grid[i] * rep.grid[i];
    EXPECT_NEAR(rep.measured[i], h2 / (1.0 - h2), 4.0 * rep.standard_error[i] + 0.05 * h2);
  }
}

TEST(ModeRatio, MixtureValleyQuadraticDecrease) {
  const auto f = reference_mixture();
  const auto rep = mode_density_ratio_curve(f, f.minima.front(), {0.05, 0.1, 0.2}, 0.1, 4000000, 9);
  EXPECT_EQ(rep.check, "minimum_density_decrease");
  for (double v : rep.measured) EXPECT_GT(v, 0.0);
  EXPECT_GE(rep.slope, 1.6);
  EXPECT_LE(rep.slope, 2.4);
}

TEST(ModeRatio, VanishesAsBandwidthShrinks) {
  const auto f = standard_normal();
  const auto rep = mode_density_ratio_curve(f, {0.0}, {0.01, 0.4}, 0.05, 1000000, 10);
  EXPECT_LT(rep.measured[0], 0.1 * rep.measured[1]);
}

TEST(ModeRatio, Preconditions) {
  const auto f = standard_normal();
  EXPECT_THROW(mode_density_ratio_curve(f, {0.5}, {0.1}, 0.05, 1000, 1), std::invalid_argument);
  EXPECT_THROW(mode_density_ratio_curve(f, {0.0}, {1.5}, 0.05, 1000, 1), std::invalid_argument);
}

TEST(SamplingGap, ShrinksWithSampleSize) {
  const auto f = reference_mixture();
  const auto rep = empirical_population_gap(f, half_lower_mode_level(f), {200, 1600}, 0.3, 12, 12);
  EXPECT_LT(rep.slope, 0.0);
  EXPECT_THROW(empirical_population_gap(f, half_lower_mode_level(f), {50}, 0.3, 2, 1), std::invalid_argument);
}

TEST(MultiSweep, ModeDensityGrowsEverySweep) {
  const auto rep = multi_sweep_mode_growth(reference_mixture(), 500, 0.3, 5, 20000, 0.1, 13);
  EXPECT_EQ(rep.diagnostics.at("strictly_increasing"), 1.0);
  EXPECT_GT(rep.diagnostics.at("c1"), 0.0);
  EXPECT_GT(rep.slope, 0.0);
  EXPECT_TRUE(rep.violations.empty());
}

namespace {
PerturbationSetup perturbation_fixture() {
  PerturbationSetup s;
  s.f = reference_mixture();
  s.bump = gaussian_mixture_1d(0.5, 1.5, 3.5, 0.7, 0.7);
  s.tilt = gaussian_mixture_1d(0.5, 1.0, 4.0, 1.2, 1.2);
  s.tau = 0.3;
  s.probe = half_lower_mode_level(s.f);
  return s;
}
}  // namespace

TEST(Perturbation, ZeroMagnitudeZeroResponse) {
  const auto s = perturbation_fixture();
  for (auto kind : {PerturbationKind::density, PerturbationKind::step_scale, PerturbationKind::sampling}) {
    const auto rep = perturbation_response(kind, s, {0.0}, 20000, 14);
    EXPECT_EQ(rep.measured[0], 0.0) << to_string(kind);
  }
}

TEST(Perturbation, StepScaleRespondsLinearly) {
  const auto rep = perturbation_response(PerturbationKind::step_scale, perturbation_fixture(), {0.0125, 0.025, 0.05, 0.1}, 400000, 15);
  EXPECT_NEAR(rep.slope, 1.0, 0.3);
}

TEST(Perturbation, DensityBumpRespondsLinearly) {
  const auto rep = perturbation_response(PerturbationKind::density, perturbation_fixture(), {0.0125, 0.025, 0.05, 0.1}, 400000, 16);
  EXPECT_NEAR(rep.slope, 1.0, 0.3);
  ASSERT_EQ(rep.series.at("Delta_1n").size(), 4u);
  EXPECT_NEAR(rep.series.at("Delta_1n")[1], 2.0 * rep.series.at("Delta_1n")[0], 1e-12);
}

TEST(Perturbation, SamplingTiltRespondsLinearly) {
  const auto rep = perturbation_response(PerturbationKind::sampling, perturbation_fixture(), {0.0125, 0.025, 0.05, 0.1}, 400000, 17);
  EXPECT_NEAR(rep.slope, 1.0, 0.3);
}

TEST(Perturbation, LevelScalingLeavesOperatorUnchanged) {
  // grad((1 + d) f) / ((1 + d) f) = grad f / f
  const auto rep = perturbation_response(PerturbationKind::level_scaling, perturbation_fixture(), {0.05, 0.1, 0.2}, 100000, 18);
  for (double v : rep.measured) EXPECT_EQ(v, 0.0);
}

TEST(AscentAudit, RandomModelsHaveNoViolations) {
  Rng rng(19);
  std::vector<double> c(80), p(2000);
  for (auto& v : c) v = rng.normal(0, 2);
  for (auto& v : p) v = rng.uniform(-6, 6);
  EXPECT_EQ(monotone_ascent_audit(fit(PointCloud(2, c), 0.7), PointCloud(2, p)), 0u);
}

TEST(AscentAudit, ModeProbeIsATie) {
  const auto model = fit(PointCloud::from_values({-1.0, 1.0}), 1.0);
  EXPECT_EQ(monotone_ascent_audit(model, PointCloud::from_values({0.0})), 0u);
}

TEST(AscentAudit, DuplicatedData) {
  Rng rng(20);
  std::vector<double> c;
  for (int i = 0; i < 30; ++i) {
    const double x = rng.normal(), y = rng.normal();
    c.insert(c.end(), {x, y, x, y});
  }
  std::vector<double> p(600);
  for (auto& v : p) v = rng.uniform(-4, 4);
  EXPECT_EQ(monotone_ascent_audit(fit(PointCloud(2, c), 0.5), PointCloud(2, p)), 0u);
}

TEST(ScalingReport, DeterministicGivenSeed) {
  const auto f = reference_mixture();
  const auto a = mass_increase_curve(f, half_lower_mode_level(f), {0.1, 0.2}, 20000, 21);
  const auto b = mass_increase_curve(f, half_lower_mode_level(f), {0.1, 0.2}, 20000, 21);
  EXPECT_EQ(a.measured, b.measured);
  EXPECT_EQ(a.slope, b.slope);
}
