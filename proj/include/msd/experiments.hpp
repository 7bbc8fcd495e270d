#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/analytic.hpp"
#include "msd/clustering.hpp"
#include "msd/density.hpp"
#include "msd/parallel.hpp"
#include "msd/rng.hpp"
#include "msd/shift.hpp"
#include "msd/stats.hpp"
#include "msd/synthetic.hpp"
#include "msd/theory_lab.hpp"

namespace msd {

// ---------------------------------------------------------------------------
// Clustering before and after one denoising sweep

enum class ClusterAlgo { kmeans, spectral, hierarchical };

inline ClusterAlgo parse_cluster_algo(const std::string& s) {
  if (s == "kmeans") return ClusterAlgo::kmeans;
  if (s == "spectral") return ClusterAlgo::spectral;
  if (s == "hier" || s == "hierarchical") return ClusterAlgo::hierarchical;
  throw std::invalid_argument("unknown clustering algorithm '" + s + "' (kmeans, spectral, hier)");
}

inline const char* to_string(ClusterAlgo a) {
  switch (a) {
    case ClusterAlgo::kmeans: return "kmeans";
    case ClusterAlgo::spectral: return "spectral";
    case ClusterAlgo::hierarchical: return "hier";
  }
  return "?";
}

enum class StructureKind { bullseye, spiral };

//! A simulated structure-plus-background-noise case. The spectral preset is
//! the affinity used for this case both before and after denoising: a dense
//! gaussian graph whose scale equals the structure's jitter sd.
struct ClusterCase {
  std::string name;
  StructureKind kind = StructureKind::bullseye;
  std::size_t n0 = 500;
  std::size_t n1 = 100;
  double box = 6.5;  // noise is uniform on [-box, box]^2
  SpectralOptions spectral;
};

inline const std::map<std::string, ClusterCase>& cluster_cases() {
  static const std::map<std::string, ClusterCase> cases = [] {
    std::map<std::string, ClusterCase> m;
    SpectralOptions ring;
    ring.sigma = 1.0;
    SpectralOptions arm;
    arm.sigma = 0.05;
    const std::size_t bullseye_noise[] = {100, 150, 300};
    const std::size_t spiral_noise[] = {20, 50, 100};
    for (int c = 0; c < 3; ++c) {
      const std::string b = "bullseye" + std::to_string(c + 1);
      m[b] = ClusterCase{b, StructureKind::bullseye, 500, bullseye_noise[c], 6.5, ring};
      const std::string s = "spiral" + std::to_string(c + 4);
      m[s] = ClusterCase{s, StructureKind::spiral, 300, spiral_noise[c], 0.8, arm};
    }
    return m;
  }();
  return cases;
}

inline const ClusterCase& cluster_case(const std::string& name) {
  const auto it = cluster_cases().find(name);
  if (it == cluster_cases().end()) throw std::invalid_argument("unknown case '" + name + "'");
  return it->second;
}

//! Structure points first (labels 0/1), then n1 noise points (label 2).
inline LabeledCloud generate_case(const ClusterCase& c, std::uint64_t seed) {
  LabeledCloud s = c.kind == StructureKind::bullseye ? gen_bullseye(c.n0, 6.0, 0.2, 1.0, derive_seed(seed, 0))
                                                     : gen_spiral(c.n0, 0.05, derive_seed(seed, 0));
  return append_labeled(std::move(s), gen_uniform_noise(c.n1, {-c.box, -c.box}, {c.box, c.box}, derive_seed(seed, 1)));
}

struct ClusterEvalConfig {
  ClusterAlgo algo = ClusterAlgo::spectral;
  std::size_t k = 2;
  bool msd = true;
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  Linkage linkage = Linkage::average;
  std::size_t sweeps = 1;
};

struct ClusterEvalResult {
  std::vector<double> ari_before;
  std::vector<double> ari_after;  // empty when denoising is off
  std::vector<double> bandwidth;
  double mean_before = 0.0, sd_before = 0.0;
  double mean_after = 0.0, sd_after = 0.0;
};

inline LabelSet run_clustering(const PointCloud& data, std::size_t k, ClusterAlgo algo, const SpectralOptions& spec,
                               Linkage linkage, std::uint64_t seed) {
  switch (algo) {
    case ClusterAlgo::kmeans: return kmeans(data, k, seed);
    case ClusterAlgo::hierarchical: return hierarchical(data, k, linkage);
    case ClusterAlgo::spectral: {
      SpectralOptions o = spec;
      o.seed = seed;
      return spectral(data, k, o);
    }
  }
  throw std::invalid_argument("run_clustering: unknown algorithm");
}

//! ARI against the structure labels, on structure points only: all points
//! are clustered, background noise has no ground truth and is left out of
//! the score.
inline double structure_ari(const LabeledCloud& truth, const LabelSet& found, std::size_t n_structure) {
  std::vector<int> a(truth.labels.begin(), truth.labels.begin() + static_cast<std::ptrdiff_t>(n_structure));
  std::vector<int> b(found.labels.begin(), found.labels.begin() + static_cast<std::ptrdiff_t>(n_structure));
  return ari(LabelSet(a), LabelSet(b));
}

//! sd over replicates uses the n-1 divisor and is 0 for a single replicate.
inline ClusterEvalResult cluster_eval(const ClusterCase& c, const ClusterEvalConfig& cfg) {
  if (cfg.reps == 0) throw std::invalid_argument("cluster_eval: reps must be >= 1");
  if (cfg.k < 1 || cfg.k > c.n0 + c.n1) throw std::invalid_argument("cluster_eval: k out of range");
  if (cfg.msd && cfg.sweeps == 0) throw std::invalid_argument("cluster_eval: sweeps must be >= 1");
  ClusterEvalResult res;
  res.ari_before.resize(cfg.reps);
  if (cfg.msd) {
    res.ari_after.resize(cfg.reps);
    res.bandwidth.resize(cfg.reps);
  }
  parallel_for(cfg.reps, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(cfg.seed, r);
    const LabeledCloud data = generate_case(c, rs);
    const std::uint64_t cs = derive_seed(rs, 2);
    res.ari_before[r] = structure_ari(data, run_clustering(data.cloud, cfg.k, cfg.algo, c.spectral, cfg.linkage, cs), c.n0);
    if (cfg.msd) {
      const double h = select_bandwidth_scv(data.cloud);
      const PointCloud moved = denoise(data.cloud, ShiftOperator::empirical(fit(data.cloud, h)), cfg.sweeps);
      res.bandwidth[r] = h;
      res.ari_after[r] = structure_ari(data, run_clustering(moved, cfg.k, cfg.algo, c.spectral, cfg.linkage, cs), c.n0);
    }
  }, 1);
  res.mean_before = mean(res.ari_before);
  res.sd_before = sample_sd(res.ari_before);
  if (cfg.msd) {
    res.mean_after = mean(res.ari_after);
    res.sd_after = sample_sd(res.ari_after);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Theory checks with fixed desk-scale settings

//! Level set at half the height of the lower mode of `f`.
inline LevelSetSpec half_lower_mode_level(const AnalyticDensity& f) {
  double lowest = f(f.modes.front());
  for (const auto& m : f.modes) lowest = std::min(lowest, f(m));
  return level_set(f, 0.5 * lowest);
}

struct TheoryOutcome {
  std::vector<ScalingReport> reports;
  std::map<std::string, bool> checks;

  bool passed() const {
    for (const auto& [name, ok] : checks)
      if (!ok) return false;
    return true;
  }
};

inline bool slope_in(const ScalingReport& r, double lo, double hi) { return r.slope >= lo && r.slope <= hi; }

//! Level-set mass increase on the reference mixture.
inline TheoryOutcome theory_level_set_mass(std::uint64_t seed, std::size_t n_mc = 200000) {
  const auto f = reference_mixture();
  auto rep = mass_increase_curve(f, half_lower_mode_level(f), {0.05, 0.1, 0.2, 0.4}, n_mc, seed);
  TheoryOutcome out;
  bool nonneg = true;
  for (std::size_t i = 0; i < rep.grid.size(); ++i) nonneg = nonneg && rep.measured[i] >= -3.0 * rep.standard_error[i];
  out.checks["mass_increase_nonnegative"] = nonneg;
  out.checks["slope_in_1.7_2.3"] = slope_in(rep, 1.7, 2.3);
  out.reports.push_back(std::move(rep));
  return out;
}

//! Density ratio at the standard-normal mode and at the mixture valley.
inline TheoryOutcome theory_critical_points(std::uint64_t seed, std::size_t n_mc = 4000000) {
  TheoryOutcome out;
  const auto z = standard_normal();
  auto mode = mode_density_ratio_curve(z, z.modes.front(), {0.1, 0.2, 0.4}, 0.05, n_mc, derive_seed(seed, 0));
  out.checks["mode_slope_in_1.6_2.4"] = slope_in(mode, 1.6, 2.4);
  const auto f = reference_mixture();
  auto valley = mode_density_ratio_curve(f, f.minima.front(), {0.05, 0.1, 0.2}, 0.025, n_mc, derive_seed(seed, 1));
  bool below = true;
  for (double v : valley.measured) below = below && v > 0.0;  // measured = 1 - ratio
  out.checks["valley_ratio_below_1"] = below;
  out.reports.push_back(std::move(mode));
  out.reports.push_back(std::move(valley));
  return out;
}

//! Empirical-vs-population gap decay over sample size.
inline TheoryOutcome theory_sampling_gap(std::uint64_t seed, std::size_t reps = 50) {
  const auto f = reference_mixture();
  auto rep = empirical_population_gap(f, half_lower_mode_level(f), {200, 800, 3200}, 0.3, reps, seed);
  TheoryOutcome out;
  out.checks["slope_in_-0.75_-0.25"] = slope_in(rep, -0.75, -0.25);
  out.reports.push_back(std::move(rep));
  return out;
}

//! Mode-ball density over repeated fixed-operator sweeps.
inline TheoryOutcome theory_multi_sweep(std::uint64_t seed) {
  auto rep = multi_sweep_mode_growth(reference_mixture(), 500, 0.3, 5, 20000, 0.1, seed);
  TheoryOutcome out;
  out.checks["strictly_increasing"] = rep.diagnostics.at("strictly_increasing") > 0.5;
  out.checks["growth_constant_positive"] = rep.diagnostics.at("c1") > 0.0;
  out.reports.push_back(std::move(rep));
  return out;
}

//! Perturbation responses. Density, step-scale and sampling perturbations
//! must respond linearly; level scaling must leave the operator unchanged.
inline TheoryOutcome theory_perturbation(std::uint64_t seed, std::size_t n_mc = 400000) {
  PerturbationSetup setup;
  setup.f = reference_mixture();
  setup.bump = gaussian_mixture_1d(0.5, 1.5, 3.5, 0.7, 0.7);
  setup.tilt = gaussian_mixture_1d(0.5, 1.0, 4.0, 1.2, 1.2);
  setup.tau = 0.3;
  setup.probe = half_lower_mode_level(setup.f);
  const std::vector<double> grid{0.0125, 0.025, 0.05, 0.1};
  TheoryOutcome out;
  const PerturbationKind linear[] = {PerturbationKind::density, PerturbationKind::step_scale, PerturbationKind::sampling};
  for (std::size_t i = 0; i < 3; ++i) {
    auto rep = perturbation_response(linear[i], setup, grid, n_mc, derive_seed(seed, i));
    out.checks[rep.check + "_slope_in_0.7_1.3"] = slope_in(rep, 0.7, 1.3);
    out.reports.push_back(std::move(rep));
  }
  auto flat = perturbation_response(PerturbationKind::level_scaling, setup, grid, n_mc, derive_seed(seed, 3));
  bool zero = true;
  for (double v : flat.measured) zero = zero && v == 0.0;
  out.checks["level_scaling_no_response"] = zero;
  out.reports.push_back(std::move(flat));
  return out;
}

//! One-step ascent audit over random 1- to 3-D models and probes.
inline TheoryOutcome theory_ascent(std::uint64_t seed, std::size_t models = 100, std::size_t probes_per_model = 100) {
  TheoryOutcome out;
  ScalingReport rep;
  rep.check = "monotone_ascent";
  rep.parameter = "model";
  rep.quantity = "violations";
  std::size_t violations = 0;
  for (std::size_t m = 0; m < models; ++m) {
    Rng rng(derive_seed(seed, m));
    const std::size_t n = 5 + rng.below(60);
    const std::size_t d = 1 + rng.below(3);
    std::vector<double> coords(n * d), probe(probes_per_model * d);
    for (auto& v : coords) v = rng.normal(0.0, 2.0);
    for (auto& v : probe) v = rng.uniform(-6.0, 6.0);
    const double h = rng.uniform(0.2, 2.0);
    const DensityModel model = fit(PointCloud(d, std::move(coords)), h);
    const std::size_t v = monotone_ascent_audit(model, PointCloud(d, std::move(probe)));
    rep.grid.push_back(static_cast<double>(m));
    rep.measured.push_back(static_cast<double>(v));
    violations += v;
  }
  rep.diagnostics["evaluations"] = static_cast<double>(models * probes_per_model);
  rep.diagnostics["violations"] = static_cast<double>(violations);
  out.checks["no_violations"] = violations == 0;
  out.reports.push_back(std::move(rep));
  return out;
}

inline TheoryOutcome run_theory_check(const std::string& name, std::uint64_t seed) {
  if (name == "t1") return theory_level_set_mass(seed);
  if (name == "t2") return theory_critical_points(seed);
  if (name == "t4") return theory_sampling_gap(seed);
  if (name == "t5") return theory_multi_sweep(seed);
  if (name == "t6") return theory_perturbation(seed);
  if (name == "ascent") return theory_ascent(seed);
  throw std::invalid_argument("unknown check '" + name + "' (t1, t2, t4, t5, t6, ascent)");
}

}  // namespace msd
