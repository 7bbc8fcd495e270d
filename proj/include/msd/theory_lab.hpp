#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/analytic.hpp"
#include "msd/density.hpp"
#include "msd/parallel.hpp"
#include "msd/point_cloud.hpp"
#include "msd/rng.hpp"
#include "msd/shift.hpp"
#include "msd/stats.hpp"

// Monte Carlo checks of how one or more mean shift applications move
// probability mass: level-set mass gain, density change at critical points,
// the empirical-vs-population gap, repeated sweeps and perturbations.

namespace msd {

//! Upper level set {x : f(x) >= level}.
struct LevelSetSpec {
  double level = 0.0;
  std::function<double(std::span<const double>)> f;
  //! Boundary points (1-D densities only).
  std::vector<double> boundary;
  //! Minimum |f'| over the boundary (1-D densities only).
  double g0 = std::numeric_limits<double>::quiet_NaN();

  bool contains(std::span<const double> x) const { return f(x) >= level; }
};

//! Level set of an analytic density. For 1-D densities the boundary points
//! and g0 are located on the density's window.
inline LevelSetSpec level_set(const AnalyticDensity& f, double level) {
  if (!(level > 0.0)) throw std::invalid_argument("level_set: level must be positive");
  LevelSetSpec s;
  s.level = level;
  s.f = f.density;
  if (f.dim == 1) {
    auto g = [&](double x) { return f.density(std::span<const double>(&x, 1)) - level; };
    s.boundary = detail::scan_roots(g, f.window_lo, f.window_hi, 1e-3);
    double g0 = std::numeric_limits<double>::infinity();
    for (double b : s.boundary) g0 = std::min(g0, std::abs(f.gradient_at(std::span<const double>(&b, 1))[0]));
    if (!s.boundary.empty()) s.g0 = g0;
  }
  return s;
}

//! Results of a scaling experiment: the measured quantity on a parameter
//! grid and its fitted log-log slope.
struct ScalingReport {
  std::string check;
  std::string parameter;
  std::string quantity;
  std::vector<double> grid;
  std::vector<double> measured;
  std::vector<double> standard_error;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_half_width = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> diagnostics;
  std::map<std::string, std::vector<double>> series;
  std::vector<std::string> violations;

  void fit_slope() {
    const LineFit f = fit_loglog(grid, measured);
    slope = f.slope;
    slope_half_width = f.slope_half_width;
    intercept = f.intercept;
  }
};

inline double level_set_mass(const PointCloud& sample, const LevelSetSpec& spec) {
  if (sample.empty()) throw std::invalid_argument("level_set_mass: empty sample");
  std::size_t inside = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) inside += spec.contains(sample.row(i)) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(sample.size());
}

inline double unit_ball_volume(std::size_t d) {
  const double hd = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, hd) / std::tgamma(hd + 1.0);
}

//! Ball-count density estimate: #{X_i in B(x, r)} / (n v_d r^d).
inline double geometric_density_at(const PointCloud& sample, std::span<const double> x, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("geometric_density_at: radius must be positive");
  if (sample.empty()) throw std::invalid_argument("geometric_density_at: empty sample");
  require_dim(x, sample.dim(), "geometric_density_at");
  const double r2 = radius * radius;
  std::size_t count = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) count += squared_distance(sample.row(i), x) <= r2 ? 1 : 0;
  const double vol = unit_ball_volume(sample.dim()) * std::pow(radius, static_cast<double>(sample.dim()));
  return static_cast<double>(count) / (static_cast<double>(sample.size()) * vol);
}

//! Largest admissible h^2 for the level-set mass bound:
//! min{ 3 sqrt2 lambda / (c |f|_2), sqrt2 lambda^2 / (c g0^2) }.
inline double level_set_h2_limit(const AnalyticDensity& f, const LevelSetSpec& spec, double c) {
  const double a = 3.0 * std::numbers::sqrt2 * spec.level / (c * f.hessian_sup);
  const double b = std::numbers::sqrt2 * spec.level * spec.level / (c * spec.g0 * spec.g0);
  return std::min(a, b);
}

namespace detail {

inline std::size_t count_in_ball(const PointCloud& s, std::span<const double> c, double r) {
  const double r2 = r * r;
  std::size_t k = 0;
  for (std::size_t i = 0; i < s.size(); ++i) k += squared_distance(s.row(i), c) <= r2 ? 1 : 0;
  return k;
}

}  // namespace detail

//! For each h: draw n_mc points from f, shift them once with the population
//! operator M_{f,h}, and report dQ = Q(L) - P(L) from the paired indicators.
//! Grids outside the admissible range are rejected. In 1-D the report also
//! carries the explicit lower bound c h^2 g0 #boundary / (6 sqrt2 lambda)
//! and the first-order boundary-flux prediction h^2 sum_b |f'(b)|.
inline ScalingReport mass_increase_curve(const AnalyticDensity& f, const LevelSetSpec& spec,
                                         const std::vector<double>& h_grid, std::size_t n_mc, std::uint64_t seed,
                                         double c = 1.0) {
  if (h_grid.empty() || n_mc == 0) throw std::invalid_argument("mass_increase_curve: empty grid or sample");
  if (!std::is_sorted(h_grid.begin(), h_grid.end())) throw std::invalid_argument("mass_increase_curve: grid must increase");
  ScalingReport rep;
  rep.check = "level_set_mass_increase";
  rep.parameter = "h";
  rep.quantity = "Q(L) - P(L)";
  const bool one_d = f.dim == 1 && !spec.boundary.empty();
  if (one_d) {
    const double limit = level_set_h2_limit(f, spec, c);
    rep.diagnostics["h2_limit"] = limit;
    for (double h : h_grid)
      if (h * h > limit) throw std::invalid_argument("mass_increase_curve: h = " + std::to_string(h) + " outside the admissible range");
    rep.diagnostics["g0"] = spec.g0;
    rep.diagnostics["boundary_points"] = static_cast<double>(spec.boundary.size());
  }
  rep.diagnostics["level"] = spec.level;
  double flux = 0.0;
  for (double b : spec.boundary) flux += std::abs(f.gradient_at(std::span<const double>(&b, 1))[0]);

  bool bound_holds = true;
  for (std::size_t g = 0; g < h_grid.size(); ++g) {
    const double h = h_grid[g];
    Rng rng(derive_seed(seed, g));
    PointCloud x = f.sample(n_mc, rng);
    const auto op = ShiftOperator::population(f, h, c);
    PointCloud y = denoise(x, op, 1);
    double sum = 0.0, sumsq = 0.0, p = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      const double a = spec.contains(x.row(i)) ? 1.0 : 0.0, b = spec.contains(y.row(i)) ? 1.0 : 0.0;
      sum += b - a;
      sumsq += (b - a) * (b - a);
      p += a;
      q += b;
    }
    const double n = static_cast<double>(n_mc);
    const double dq = sum / n;
    const double se = std::sqrt(std::max(0.0, sumsq / n - dq * dq) / n);
    rep.grid.push_back(h);
    rep.measured.push_back(dq);
    rep.standard_error.push_back(se);
    rep.series["P(L)"].push_back(p / n);
    rep.series["Q(L)"].push_back(q / n);
    if (dq < -3.0 * se) rep.violations.push_back("mass decreased beyond 3 standard errors at h = " + std::to_string(h));
    if (one_d) {
      const double bound = c * h * h * spec.g0 * static_cast<double>(spec.boundary.size()) / (6.0 * std::numbers::sqrt2 * spec.level);
      rep.series["explicit_bound"].push_back(bound);
      rep.series["boundary_flux_prediction"].push_back(c * h * h * flux);
      if (dq < bound) bound_holds = false;
    }
  }
  if (one_d) rep.diagnostics["explicit_bound_holds"] = bound_holds ? 1.0 : 0.0;
  rep.fit_slope();
  return rep;
}

enum class CriticalKind { mode, minimum };

//! Density ratio at a declared critical point m of f after one population
//! shift: measured = q(m)/p(m) - 1 at a mode, 1 - q(m)/p(m) at a minimum,
//! with q and p estimated by ball counts of radius `ball_radius` on the
//! shifted and unshifted copies of the same sample.
inline ScalingReport mode_density_ratio_curve(const AnalyticDensity& f, const Point& point,
                                              const std::vector<double>& h_grid, double ball_radius, std::size_t n_mc,
                                              std::uint64_t seed, double c = 1.0) {
  if (point.size() != f.dim) throw std::invalid_argument("mode_density_ratio_curve: dimension mismatch");
  if (h_grid.empty() || n_mc == 0) throw std::invalid_argument("mode_density_ratio_curve: empty grid or sample");
  const Point grad = f.gradient_at(point);
  double gnorm = 0.0;
  for (double v : grad) gnorm += v * v;
  if (std::sqrt(gnorm) >= 1e-8) throw std::invalid_argument("mode_density_ratio_curve: point is not a critical point");
  auto near = [&](const std::vector<Point>& pts) {
    return std::any_of(pts.begin(), pts.end(), [&](const Point& p) { return distance(p, point) < 1e-6; });
  };
  CriticalKind kind;
  if (near(f.modes)) kind = CriticalKind::mode;
  else if (near(f.minima)) kind = CriticalKind::minimum;
  else throw std::invalid_argument("mode_density_ratio_curve: point is neither a declared mode nor minimum");

  const double pm = f.density(point);
  const double limit = pm / (c * f.hessian_sup);
  for (double h : h_grid)
    if (!(h * h < limit)) throw std::invalid_argument("mode_density_ratio_curve: h = " + std::to_string(h) + " outside the admissible range");

  ScalingReport rep;
  rep.check = kind == CriticalKind::mode ? "mode_density_increase" : "minimum_density_decrease";
  rep.parameter = "h";
  rep.quantity = kind == CriticalKind::mode ? "q(m)/p(m) - 1" : "1 - q(m)/p(m)";
  rep.diagnostics["p(m)"] = pm;
  rep.diagnostics["h2_limit"] = limit;
  rep.diagnostics["ball_radius"] = ball_radius;
  for (std::size_t g = 0; g < h_grid.size(); ++g) {
    const double h = h_grid[g];
    Rng rng(derive_seed(seed, g));
    PointCloud x = f.sample(n_mc, rng);
    PointCloud y = denoise(x, ShiftOperator::population(f, h, c), 1);
    const double r2 = ball_radius * ball_radius;
    double before = 0.0, after = 0.0, moved = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      const bool a = squared_distance(x.row(i), point) <= r2, b = squared_distance(y.row(i), point) <= r2;
      before += a;
      after += b;
      moved += a != b;
    }
    if (before == 0.0) throw std::runtime_error("mode_density_ratio_curve: empty ball, increase n_mc or the radius");
    const double ratio = after / before;
    const double gap = kind == CriticalKind::mode ? ratio - 1.0 : 1.0 - ratio;
    const double se = std::sqrt(moved) / before;
    rep.grid.push_back(h);
    rep.measured.push_back(gap);
    rep.standard_error.push_back(se);
    rep.series["ratio"].push_back(ratio);
    rep.series["p_ball"].push_back(before / (static_cast<double>(n_mc) * unit_ball_volume(f.dim) * std::pow(ball_radius, static_cast<double>(f.dim))));
    rep.series["q_ball"].push_back(after / (static_cast<double>(n_mc) * unit_ball_volume(f.dim) * std::pow(ball_radius, static_cast<double>(f.dim))));
    if (gap <= 0.0 && gap <= -3.0 * se)
      rep.violations.push_back("density ratio moved the wrong way at h = " + std::to_string(h));
  }
  rep.fit_slope();
  return rep;
}

//! |Q_hat_n(A) - Q_bar_n(A)| against n. For each n and replicate: draw a
//! size-n sample, fit the KDE with bandwidth h, shift the sample itself
//! (Q_hat_n) and a fresh population sample with that same operator
//! (Q_bar_n); the gap is averaged over replicates. The population sample
//! has `population_size` points, or 10 n when 0, so its noise shrinks at
//! the same n^(-1/2) rate as the gap.
inline ScalingReport empirical_population_gap(const AnalyticDensity& f, const LevelSetSpec& probe,
                                              const std::vector<std::size_t>& n_grid, double h, std::size_t n_reps,
                                              std::uint64_t seed, std::size_t population_size = 0) {
  if (n_grid.empty() || n_reps == 0) throw std::invalid_argument("empirical_population_gap: empty grid or no replicates");
  for (std::size_t n : n_grid)
    if (n < 100) throw std::invalid_argument("empirical_population_gap: n values must be >= 100");
  ScalingReport rep;
  rep.check = "empirical_population_gap";
  rep.parameter = "n";
  rep.quantity = "mean |Q_hat_n(A) - Q_bar_n(A)|";
  rep.diagnostics["h"] = h;
  rep.diagnostics["population_size"] = static_cast<double>(population_size);  // 0: ten times n
  rep.diagnostics["replicates"] = static_cast<double>(n_reps);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const std::size_t n = n_grid[g];
    std::vector<double> gaps(n_reps), qhat(n_reps), qbar(n_reps);
    for (std::size_t r = 0; r < n_reps; ++r) {
      const std::uint64_t rs = derive_seed(derive_seed(seed, g), r);
      Rng rng(rs);
      PointCloud sample = f.sample(n, rng);
      Rng pop_rng(derive_seed(rs, 1));
      PointCloud population = f.sample(population_size > 0 ? population_size : 10 * n, pop_rng);
      const auto op = ShiftOperator::empirical(fit(sample, h));
      qhat[r] = level_set_mass(denoise(sample, op, 1), probe);
      qbar[r] = level_set_mass(denoise(population, op, 1), probe);
      gaps[r] = std::abs(qhat[r] - qbar[r]);
    }
    rep.grid.push_back(static_cast<double>(n));
    rep.measured.push_back(mean(gaps));
    rep.standard_error.push_back(sample_sd(gaps) / std::sqrt(static_cast<double>(n_reps)));
    rep.series["mean_Q_hat"].push_back(mean(qhat));
    rep.series["mean_Q_bar"].push_back(mean(qbar));
  }
  rep.fit_slope();
  return rep;
}

//! Repeated fixed-operator sweeps of the empirical operator (KDE of a
//! size-`sample_size` sample, bandwidth h) applied to a population sample.
//! The ball-count density at the KDE mode m nearest to f's first declared
//! mode is recorded after N = 0..max_sweeps sweeps. The fitted growth
//! constant is c1 = min_N ((q_N / p(m))^(1/N) - 1) / h^2.
inline ScalingReport multi_sweep_mode_growth(const AnalyticDensity& f, std::size_t sample_size, double h,
                                             std::size_t max_sweeps, std::size_t population_size, double ball_radius,
                                             std::uint64_t seed) {
  if (f.modes.empty()) throw std::invalid_argument("multi_sweep_mode_growth: density has no declared mode");
  if (max_sweeps == 0) throw std::invalid_argument("multi_sweep_mode_growth: need at least one sweep");
  Rng rng(derive_seed(seed, 0));
  PointCloud sample = f.sample(sample_size, rng);
  const auto model = fit(sample, h);
  const auto op = ShiftOperator::empirical(model);
  const Point mode = shift_until_converged(op, f.modes.front(), default_tolerance(model), 5000).end();

  Rng pop_rng(derive_seed(seed, 1));
  PointCloud pop = f.sample(population_size, pop_rng);
  ScalingReport rep;
  rep.check = "multi_sweep_mode_growth";
  rep.parameter = "sweeps";
  rep.quantity = "ball density at the KDE mode";
  const double pm = f.density(mode);
  rep.diagnostics["p(m)"] = pm;
  rep.diagnostics["h"] = h;
  rep.diagnostics["ball_radius"] = ball_radius;
  rep.series["mode"] = mode;
  double c1 = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s <= max_sweeps; ++s) {
    if (s > 0) pop = denoise(pop, op, 1);
    const double q = geometric_density_at(pop, mode, ball_radius);
    rep.grid.push_back(static_cast<double>(s));
    rep.measured.push_back(q);
    const double count = static_cast<double>(detail::count_in_ball(pop, mode, ball_radius));
    rep.standard_error.push_back(count > 0.0 ? q / std::sqrt(count) : 0.0);
    if (s > 0) c1 = std::min(c1, (std::pow(q / pm, 1.0 / static_cast<double>(s)) - 1.0) / (h * h));
  }
  bool increasing = true;
  for (std::size_t s = 1; s < rep.measured.size(); ++s) increasing = increasing && rep.measured[s] > rep.measured[s - 1];
  rep.diagnostics["strictly_increasing"] = increasing ? 1.0 : 0.0;
  rep.diagnostics["c1"] = c1;
  // log q against N: geometric growth shows as a positive linear slope
  std::vector<double> logq;
  for (double q : rep.measured) logq.push_back(std::log(q));
  const LineFit lf = fit_line(rep.grid, logq);
  rep.slope = lf.slope;
  rep.slope_half_width = lf.slope_half_width;
  rep.intercept = lf.intercept;
  if (!increasing) rep.violations.push_back("mode density did not increase at every sweep");
  if (!(c1 > 0.0)) rep.violations.push_back("no positive growth constant c1");
  return rep;
}

// ---------------------------------------------------------------------------
// Perturbations of the generalized shift S_{f,tau,P}(A)

enum class PerturbationKind {
  density,        // f_n = f + delta * bump
  level_scaling,  // f_n = (1 + delta) f, which leaves the operator unchanged
  step_scale,     // tau_n = tau + delta
  sampling,       // P_n = (1 - delta) P + delta R
};

inline const char* to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::density: return "density";
    case PerturbationKind::level_scaling: return "level_scaling";
    case PerturbationKind::step_scale: return "step_scale";
    case PerturbationKind::sampling: return "sampling";
  }
  return "?";
}

struct PerturbationSetup {
  AnalyticDensity f;        // operator source and sampling law P
  AnalyticDensity bump;     // additive density perturbation direction
  AnalyticDensity tilt;     // alternative sampling law R
  double tau = 0.3;
  double c = 1.0;
  LevelSetSpec probe;       // the set A
};

namespace detail {

inline AnalyticDensity perturbed_density(const AnalyticDensity& f, const AnalyticDensity& bump, double delta, bool scale) {
  AnalyticDensity g = f;
  g.name = f.name + (scale ? "_scaled" : "_bumped");
  if (scale) {
    g.density = [f, delta](std::span<const double> x) { return (1.0 + delta) * f.density(x); };
    g.gradient = [f, delta](std::span<const double> x, std::span<double> out) {
      f.gradient(x, out);
      for (auto& v : out) v *= 1.0 + delta;
    };
  } else {
    g.density = [f, bump, delta](std::span<const double> x) { return f.density(x) + delta * bump.density(x); };
    g.gradient = [f, bump, delta](std::span<const double> x, std::span<double> out) {
      f.gradient(x, out);
      Point b(out.size());
      bump.gradient(x, b);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += delta * b[k];
    };
  }
  return g;
}

//! sup |bump| and sup |bump'| on the density window (1-D grid search).
inline double sup_norm_01(const AnalyticDensity& bump) {
  double s = 0.0;
  for (double x = bump.window_lo; x <= bump.window_hi; x += 1e-3) {
    s = std::max(s, std::abs(bump.density(std::span<const double>(&x, 1))));
    s = std::max(s, std::abs(bump.gradient_at(std::span<const double>(&x, 1))[0]));
  }
  return s;
}

}  // namespace detail

//! |S_perturbed(A) - S(A)| over a grid of perturbation magnitudes, from
//! paired (common random number) samples so the difference counts only the
//! points whose membership changes.
inline ScalingReport perturbation_response(PerturbationKind kind, const PerturbationSetup& setup,
                                           const std::vector<double>& magnitudes, std::size_t n_mc, std::uint64_t seed) {
  if (magnitudes.empty() || n_mc == 0) throw std::invalid_argument("perturbation_response: empty grid or sample");
  ScalingReport rep;
  rep.check = std::string("perturbation_") + to_string(kind);
  rep.parameter = kind == PerturbationKind::step_scale ? "|tau_n - tau|" : "delta";
  rep.quantity = "|S_perturbed(A) - S(A)|";
  rep.diagnostics["tau"] = setup.tau;
  const double bump_norm = kind == PerturbationKind::density ? detail::sup_norm_01(setup.bump) : 0.0;
  const auto base_op = ShiftOperator::population(setup.f, setup.tau, setup.c);

  for (std::size_t g = 0; g < magnitudes.size(); ++g) {
    const double delta = magnitudes[g];
    Rng rng(derive_seed(seed, g));
    PointCloud x = setup.f.sample(n_mc, rng);
    PointCloud x_alt = x;
    if (kind == PerturbationKind::sampling) {
      if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("perturbation_response: mixture tilt must be in [0, 1]");
      Rng tilt_rng(derive_seed(seed, 1000 + g));
      PointCloud r = setup.tilt.sample(n_mc, tilt_rng);
      std::vector<double> coords = x.coords();
      for (std::size_t i = 0; i < n_mc; ++i)
        if (tilt_rng.uniform() < delta)
          for (std::size_t k = 0; k < x.dim(); ++k) coords[i * x.dim() + k] = r(i, k);
      x_alt = PointCloud(x.dim(), std::move(coords));
    }
    const PointCloud base = denoise(x, base_op, 1);
    PointCloud alt;
    switch (kind) {
      case PerturbationKind::density:
      case PerturbationKind::level_scaling:
        alt = denoise(x, ShiftOperator::population(detail::perturbed_density(setup.f, setup.bump, delta, kind == PerturbationKind::level_scaling), setup.tau, setup.c), 1);
        break;
      case PerturbationKind::step_scale:
        alt = denoise(x, ShiftOperator::population(setup.f, setup.tau + delta, setup.c), 1);
        break;
      case PerturbationKind::sampling:
        alt = denoise(x_alt, base_op, 1);
        break;
    }
    double diff = 0.0, changed = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      const double a = setup.probe.contains(base.row(i)), b = setup.probe.contains(alt.row(i));
      diff += b - a;
      changed += a != b;
    }
    const double n = static_cast<double>(n_mc);
    rep.grid.push_back(delta);
    rep.measured.push_back(std::abs(diff) / n);
    rep.standard_error.push_back(std::sqrt(changed) / n);
    if (kind == PerturbationKind::density) rep.series["Delta_1n"].push_back(delta * bump_norm);
  }
  bool positive = std::all_of(rep.measured.begin(), rep.measured.end(), [](double v) { return v > 0.0; });
  if (positive && rep.grid.size() >= 2) rep.fit_slope();
  return rep;
}

//! Number of probes where one empirical mean shift step fails to raise the
//! KDE: p(shifted) <= p(x) - 1e-12.
inline std::size_t monotone_ascent_audit(const DensityModel& model, const PointCloud& probes, double slack = 1e-12) {
  const auto op = ShiftOperator::empirical(model);
  std::vector<char> bad(probes.size(), 0);
  parallel_for(probes.size(), [&](std::size_t i) {
    const Point y = shift_step(op, probes.row(i));
    bad[i] = model.density_at(y) <= model.density_at(probes.row(i)) - slack;
  });
  return static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
}

}  // namespace msd
