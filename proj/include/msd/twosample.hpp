#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/density.hpp"
#include "msd/parallel.hpp"
#include "msd/point_cloud.hpp"
#include "msd/rng.hpp"
#include "msd/shift.hpp"
#include "msd/stats.hpp"
#include "msd/synthetic.hpp"

namespace msd {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_permutations = 0;
  double alpha = 0.05;
  bool reject = false;
};

enum class TwoSampleTest { energy, mmd };

inline const char* to_string(TwoSampleTest t) { return t == TwoSampleTest::energy ? "energy" : "mmd"; }

namespace detail {
inline void check_samples(const PointCloud& x, const PointCloud& y, const char* where) {
  if (x.empty() || y.empty()) throw std::invalid_argument(std::string(where) + ": empty sample");
  if (x.dim() != y.dim()) throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

template <class Fn>
double pair_mean(const PointCloud& a, const PointCloud& b, Fn&& fn) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) s += fn(a.row(i), b.row(j));
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}
}  // namespace detail

//! nm / (n + m) * (2 E|X - Y| - E|X - X'| - E|Y - Y'|); the within-sample
//! means run over all ordered pairs, zero diagonal included.
inline double energy_statistic(const PointCloud& x, const PointCloud& y) {
  detail::check_samples(x, y, "energy_statistic");
  auto dist = [](std::span<const double> a, std::span<const double> b) { return distance(a, b); };
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  const double xy = detail::pair_mean(x, y, dist), xx = detail::pair_mean(x, x, dist), yy = detail::pair_mean(y, y, dist);
  return n * m / (n + m) * (2.0 * xy - xx - yy);
}

//! Median pairwise distance of the pooled sample.
inline double median_heuristic(const PointCloud& x, const PointCloud& y) {
  PointCloud pooled = x;
  pooled.append(y);
  std::vector<double> d;
  d.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) d.push_back(distance(pooled.row(i), pooled.row(j)));
  if (d.empty()) return 1.0;
  const double med = median(std::move(d));
  return med > 0.0 ? med : 1.0;
}

//! Biased (V-statistic) squared MMD with k(a, b) = exp(-|a - b|^2 / (2 sigma^2)).
//! sigma <= 0 selects the pooled median heuristic.
inline double mmd2_biased(const PointCloud& x, const PointCloud& y, double sigma = 0.0) {
  detail::check_samples(x, y, "mmd2_biased");
  if (!(sigma > 0.0)) sigma = median_heuristic(x, y);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  auto k = [inv](std::span<const double> a, std::span<const double> b) { return std::exp(-squared_distance(a, b) * inv); };
  return detail::pair_mean(x, x, k) + detail::pair_mean(y, y, k) - 2.0 * detail::pair_mean(x, y, k);
}

using SampleStatistic = std::function<double(const PointCloud&, const PointCloud&)>;

inline TestResult finish_test(double observed, const std::vector<double>& permuted, double alpha) {
  std::size_t ge = 0;
  for (double s : permuted) ge += s >= observed ? 1 : 0;
  TestResult r;
  r.statistic = observed;
  r.n_permutations = permuted.size();
  r.p_value = static_cast<double>(1 + ge) / static_cast<double>(1 + permuted.size());
  r.alpha = alpha;
  r.reject = r.p_value <= alpha;
  return r;
}

//! Permutation test for an arbitrary statistic: p = (1 + #{T_perm >= T_obs}) / (1 + n_perm).
inline TestResult permutation_test(const SampleStatistic& stat, const PointCloud& x, const PointCloud& y,
                                   std::size_t n_perm, std::uint64_t seed, double alpha = 0.05) {
  detail::check_samples(x, y, "permutation_test");
  if (n_perm < 99) throw std::invalid_argument("permutation_test: n_perm must be >= 99");
  PointCloud pooled = x;
  pooled.append(y);
  const double observed = stat(x, y);
  std::vector<std::size_t> idx(pooled.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::vector<double> permuted;
  permuted.reserve(n_perm);
  for (std::size_t p = 0; p < n_perm; ++p) {
    rng.shuffle(idx);
    PointCloud a(x.dim()), b(x.dim());
    for (std::size_t t = 0; t < idx.size(); ++t) (t < x.size() ? a : b).push_back(pooled.row(idx[t]));
    permuted.push_back(stat(a, b));
  }
  return finish_test(observed, permuted, alpha);
}

//! Permutation engine for the energy and MMD statistics. The pooled pairwise
//! matrix W (distances or kernel values) is built once; each relabeling then
//! needs only the within-group block sum of the smaller group:
//!   S_xx + 2 S_xy + S_yy = total,  S_xy = sum_{i in X} rowsum_i - S_xx.
//! One-dimensional energy tests use sorted prefix sums instead, O(N) per
//! relabeling.
class PooledPermutationTest {
 public:
  PooledPermutationTest(const PointCloud& x, const PointCloud& y, TwoSampleTest kind, double sigma = 0.0)
      : kind_(kind), n_(x.size()), m_(y.size()) {
    detail::check_samples(x, y, "permutation test");
    pooled_ = x;
    pooled_.append(y);
    const std::size_t N = pooled_.size();
    if (kind_ == TwoSampleTest::mmd) sigma_ = sigma > 0.0 ? sigma : median_heuristic(x, y);
    if (kind_ == TwoSampleTest::energy && pooled_.dim() == 1) {
      order_.resize(N);
      std::iota(order_.begin(), order_.end(), 0);
      std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return pooled_(a, 0) < pooled_(b, 0); });
      sorted_.resize(N);
      for (std::size_t t = 0; t < N; ++t) sorted_[t] = pooled_(order_[t], 0);
      // sum over ordered pairs of |z_i - z_j|
      double prefix = 0.0;
      total_ = 0.0;
      for (std::size_t t = 0; t < N; ++t) {
        total_ += static_cast<double>(t) * sorted_[t] - prefix;
        prefix += sorted_[t];
      }
      total_ *= 2.0;
      return;
    }
    w_.assign(N * N, 0.0);
    const double inv = kind_ == TwoSampleTest::mmd ? 1.0 / (2.0 * sigma_ * sigma_) : 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      w_[i * N + i] = kind_ == TwoSampleTest::mmd ? 1.0 : 0.0;
      for (std::size_t j = i + 1; j < N; ++j) {
        const double s = squared_distance(pooled_.row(i), pooled_.row(j));
        w_[i * N + j] = w_[j * N + i] = kind_ == TwoSampleTest::mmd ? std::exp(-s * inv) : std::sqrt(s);
      }
    }
    rowsum_.assign(N, 0.0);
    total_ = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) rowsum_[i] += w_[i * N + j];
      total_ += rowsum_[i];
    }
  }

  //! Statistic for the split where in_x[i] marks pooled point i as X.
  double statistic(const std::vector<char>& in_x) const {
    const double n = static_cast<double>(n_), m = static_cast<double>(m_);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    if (!sorted_.empty()) {
      sxx = 2.0 * sorted_group_sum(in_x, 1);
      syy = 2.0 * sorted_group_sum(in_x, 0);
      sxy = 0.5 * (total_ - sxx - syy);
    } else {
      const bool x_small = n_ <= m_;
      const char flag = x_small ? 1 : 0;
      std::vector<std::size_t> members;
      members.reserve(x_small ? n_ : m_);
      for (std::size_t i = 0; i < in_x.size(); ++i)
        if (in_x[i] == flag) members.push_back(i);
      const std::size_t N = pooled_.size();
      double block = 0.0, rows = 0.0;
      for (std::size_t i : members) {
        const double* wi = w_.data() + i * N;
        double s = 0.0;
        for (std::size_t j : members) s += wi[j];
        block += s;
        rows += rowsum_[i];
      }
      const double cross = rows - block;
      const double other = total_ - block - 2.0 * cross;
      sxx = x_small ? block : other;
      syy = x_small ? other : block;
      sxy = cross;
    }
    if (kind_ == TwoSampleTest::energy) return n * m / (n + m) * (2.0 * sxy / (n * m) - sxx / (n * n) - syy / (m * m));
    return sxx / (n * n) + syy / (m * m) - 2.0 * sxy / (n * m);
  }

  std::vector<char> observed_split() const {
    std::vector<char> in_x(n_ + m_, 0);
    std::fill(in_x.begin(), in_x.begin() + static_cast<std::ptrdiff_t>(n_), 1);
    return in_x;
  }

  TestResult run(std::size_t n_perm, std::uint64_t seed, double alpha = 0.05) const {
    if (n_perm < 99) throw std::invalid_argument("permutation test: n_perm must be >= 99");
    auto in_x = observed_split();
    const double observed = statistic(in_x);
    Rng rng(seed);
    std::vector<double> permuted;
    permuted.reserve(n_perm);
    for (std::size_t p = 0; p < n_perm; ++p) {
      rng.shuffle(in_x);
      permuted.push_back(statistic(in_x));
    }
    return finish_test(observed, permuted, alpha);
  }

  double sigma() const noexcept { return sigma_; }

 private:
  //! sum over unordered pairs within the group of |z_i - z_j|.
  double sorted_group_sum(const std::vector<char>& in_x, char flag) const {
    double cnt = 0.0, prefix = 0.0, acc = 0.0;
    for (std::size_t t = 0; t < sorted_.size(); ++t) {
      if (in_x[order_[t]] != flag) continue;
      acc += cnt * sorted_[t] - prefix;
      cnt += 1.0;
      prefix += sorted_[t];
    }
    return acc;
  }

  TwoSampleTest kind_;
  std::size_t n_, m_;
  double sigma_ = 0.0;
  PointCloud pooled_;
  std::vector<double> w_, rowsum_;
  double total_ = 0.0;
  std::vector<std::size_t> order_;
  std::vector<double> sorted_;
};

inline TestResult two_sample_test(const PointCloud& x, const PointCloud& y, TwoSampleTest kind, std::size_t n_perm,
                                  std::uint64_t seed, double alpha = 0.05, double sigma = 0.0) {
  return PooledPermutationTest(x, y, kind, sigma).run(n_perm, seed, alpha);
}

// ---------------------------------------------------------------------------
// Power harness

struct PowerCurve {
  std::string scenario;
  TwoSampleTest test = TwoSampleTest::energy;
  std::vector<double> grid;
  std::vector<double> power_before;
  std::vector<double> power_after;  // empty when denoising is off
  std::size_t reps = 0;
  std::size_t n_perm = 0;
  double alpha = 0.05;
  std::vector<char> h0;  // grid points where both samples share one law
};

struct PowerConfig {
  std::size_t n0 = 1000;
  std::size_t reps = 50;
  std::size_t n_perm = 199;
  double alpha = 0.05;
  bool msd = false;
  TwoSampleTest test = TwoSampleTest::energy;
  std::uint64_t seed = 1;
};

//! Parameters of the reference mixture used by both scenarios.
struct MixtureParams {
  double mu1 = 0.0, mu2 = 5.0, s1 = 1.0, s2 = 1.0;
};

inline constexpr double kNoiseLow = -3.0;  // mu1 - 3 sigma
inline constexpr double kNoiseHigh = 8.0;  // mu2 + 3 sigma

//! One sweep of the empirical mean shift with an SCV bandwidth fitted to the
//! sample itself.
inline PointCloud denoise_with_own_kde(const PointCloud& sample) {
  const double h = select_bandwidth_scv(sample);
  return denoise(sample, ShiftOperator::empirical(fit(sample, h)), 1);
}

namespace detail {

template <class Gen>
PowerCurve run_power(const std::string& scenario, const std::vector<double>& grid, const PowerConfig& cfg, Gen&& gen,
                     const std::vector<char>& h0) {
  if (cfg.reps == 0) throw std::invalid_argument("power experiment: reps must be >= 1");
  PowerCurve curve;
  curve.scenario = scenario;
  curve.test = cfg.test;
  curve.grid = grid;
  curve.reps = cfg.reps;
  curve.n_perm = cfg.n_perm;
  curve.alpha = cfg.alpha;
  curve.h0 = h0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<char> rej_before(cfg.reps, 0), rej_after(cfg.reps, 0);
    parallel_for(cfg.reps, [&](std::size_t r) {
      const std::uint64_t rs = derive_seed(derive_seed(cfg.seed, g), r);
      auto [s1, s2] = gen(grid[g], rs);
      const std::uint64_t ts = derive_seed(rs, 99);
      rej_before[r] = two_sample_test(s1, s2, cfg.test, cfg.n_perm, ts, cfg.alpha).reject;
      if (cfg.msd)
        rej_after[r] = two_sample_test(denoise_with_own_kde(s1), denoise_with_own_kde(s2), cfg.test, cfg.n_perm, ts, cfg.alpha).reject;
    }, 1);
    auto rate = [&](const std::vector<char>& v) {
      return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(cfg.reps);
    };
    curve.power_before.push_back(rate(rej_before));
    if (cfg.msd) curve.power_after.push_back(rate(rej_after));
  }
  return curve;
}

}  // namespace detail

//! S1, S2: n0 draws each from 0.7 N(0,1) + 0.3 N(5,1); S2 additionally gets
//! N1 uniform points on [-3, 8]. N1 = 0 is the null.
inline PowerCurve power_experiment_uniform_noise(const std::vector<double>& noise_grid, const PowerConfig& cfg) {
  std::vector<char> h0;
  for (double v : noise_grid) {
    if (v < 0.0 || v != std::floor(v)) throw std::invalid_argument("uniform-noise grid must hold non-negative counts");
    h0.push_back(v == 0.0);
  }
  const MixtureParams mp;
  auto gen = [&](double n1, std::uint64_t seed) {
    PointCloud s1 = gen_gmm_1d(cfg.n0, 0.7, mp.mu1, mp.mu2, mp.s1, mp.s2, derive_seed(seed, 1));
    PointCloud s2 = gen_gmm_1d(cfg.n0, 0.7, mp.mu1, mp.mu2, mp.s1, mp.s2, derive_seed(seed, 2));
    s2.append(gen_uniform_noise(static_cast<std::size_t>(n1), {kNoiseLow}, {kNoiseHigh}, derive_seed(seed, 3)));
    return std::pair{std::move(s1), std::move(s2)};
  };
  return detail::run_power("uniform_noise", noise_grid, cfg, gen, h0);
}

//! S1 with mixture weight pi (grid), S2 with weight 0.5; pi = 0.5 is the null.
inline PowerCurve power_experiment_mixture_proportion(const std::vector<double>& pi_grid, const PowerConfig& cfg) {
  std::vector<char> h0;
  for (double v : pi_grid) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("mixture-proportion grid must lie in (0, 1)");
    h0.push_back(std::abs(v - 0.5) < 1e-12);
  }
  const MixtureParams mp;
  auto gen = [&](double pi, std::uint64_t seed) {
    PointCloud s1 = gen_gmm_1d(cfg.n0, pi, mp.mu1, mp.mu2, mp.s1, mp.s2, derive_seed(seed, 1));
    PointCloud s2 = gen_gmm_1d(cfg.n0, 0.5, mp.mu1, mp.mu2, mp.s1, mp.s2, derive_seed(seed, 2));
    return std::pair{std::move(s1), std::move(s2)};
  };
  return detail::run_power("mixture_proportion", pi_grid, cfg, gen, h0);
}

}  // namespace msd
