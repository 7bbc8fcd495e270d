#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/point_cloud.hpp"
#include "msd/rng.hpp"

namespace msd {

//! A density known in closed form, used as the population source of a
//! shift operator and as ground truth in the theory checks.
struct AnalyticDensity {
  using ScalarFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
  using Sampler = std::function<void(Rng&, std::span<double>)>;

  std::string name;
  std::size_t dim = 1;
  ScalarFn density;
  GradientFn gradient;
  Sampler sampler;  // optional

  std::vector<Point> modes;
  std::vector<Point> minima;
  //! sup_x max_ij |d2 f / dx_i dx_j|.
  double hessian_sup = std::numeric_limits<double>::quiet_NaN();
  //! Window containing all the mass that matters (1-D searches use it).
  double window_lo = -10.0, window_hi = 10.0;

  double operator()(std::span<const double> x) const { return density(x); }

  Point gradient_at(std::span<const double> x) const {
    Point g(dim);
    gradient(x, g);
    return g;
  }

  PointCloud sample(std::size_t n, Rng& rng) const {
    if (!sampler) throw std::logic_error("AnalyticDensity '" + name + "' has no sampler");
    std::vector<double> coords(n * dim);
    for (std::size_t i = 0; i < n; ++i) sampler(rng, std::span<double>(coords.data() + i * dim, dim));
    return PointCloud(dim, std::move(coords));
  }
};

inline double normal_pdf(double x, double mu = 0.0, double sd = 1.0) {
  const double z = (x - mu) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

namespace detail {

//! Roots of g on [lo, hi] located by a sign scan with the given step and
//! refined by bisection.
inline std::vector<double> scan_roots(const std::function<double(double)>& g, double lo, double hi, double step) {
  std::vector<double> roots;
  double a = lo, ga = g(a);
  while (a < hi) {
    const double b = std::min(hi, a + step);
    const double gb = g(b);
    if (ga == 0.0) {
      roots.push_back(a);
    } else if ((ga < 0.0) != (gb < 0.0) && gb != 0.0) {
      double l = a, r = b, gl = ga;
      for (int it = 0; it < 200 && r - l > 1e-15 * std::max(1.0, std::abs(l)); ++it) {
        const double m = 0.5 * (l + r), gm = g(m);
        if ((gm < 0.0) == (gl < 0.0)) {
          l = m;
          gl = gm;
        } else {
          r = m;
        }
      }
      roots.push_back(0.5 * (l + r));
    }
    a = b;
    ga = gb;
  }
  return roots;
}

}  // namespace detail

//! Two-component 1-D gaussian mixture
//!   p(x) = mix * phi(x; mu1, s1^2) + (1 - mix) * phi(x; mu2, s2^2).
//! Critical points and sup |p''| are located numerically at construction.
inline AnalyticDensity gaussian_mixture_1d(double mix, double mu1, double mu2, double s1, double s2) {
  if (!(mix >= 0.0 && mix <= 1.0) || !(s1 > 0.0) || !(s2 > 0.0))
    throw std::invalid_argument("gaussian_mixture_1d: invalid parameters");
  AnalyticDensity f;
  f.name = "gmm1d";
  f.dim = 1;
  auto pdf = [=](double x) { return mix * normal_pdf(x, mu1, s1) + (1.0 - mix) * normal_pdf(x, mu2, s2); };
  auto d1 = [=](double x) {
    return -mix * (x - mu1) / (s1 * s1) * normal_pdf(x, mu1, s1) -
           (1.0 - mix) * (x - mu2) / (s2 * s2) * normal_pdf(x, mu2, s2);
  };
  auto d2 = [=](double x) {
    const double z1 = (x - mu1) / s1, z2 = (x - mu2) / s2;
    return mix * (z1 * z1 - 1.0) / (s1 * s1) * normal_pdf(x, mu1, s1) +
           (1.0 - mix) * (z2 * z2 - 1.0) / (s2 * s2) * normal_pdf(x, mu2, s2);
  };
  f.density = [=](std::span<const double> x) { return pdf(x[0]); };
  f.gradient = [=](std::span<const double> x, std::span<double> g) { g[0] = d1(x[0]); };
  f.sampler = [=](Rng& rng, std::span<double> out) {
    out[0] = rng.uniform() < mix ? rng.normal(mu1, s1) : rng.normal(mu2, s2);
  };
  f.window_lo = std::min(mu1 - 8.0 * s1, mu2 - 8.0 * s2);
  f.window_hi = std::max(mu1 + 8.0 * s1, mu2 + 8.0 * s2);
  const double step = 1e-3 * std::min(s1, s2);
  for (double r : detail::scan_roots(d1, f.window_lo, f.window_hi, step)) {
    if (pdf(r) < 1e-300) continue;
    (d2(r) < 0.0 ? f.modes : f.minima).push_back({r});
  }
  double sup = 0.0;
  for (double x = f.window_lo; x <= f.window_hi; x += step) sup = std::max(sup, std::abs(d2(x)));
  f.hessian_sup = sup;
  return f;
}

inline AnalyticDensity standard_normal() {
  AnalyticDensity f = gaussian_mixture_1d(1.0, 0.0, 0.0, 1.0, 1.0);
  f.name = "standard_normal";
  f.sampler = [](Rng& rng, std::span<double> out) { out[0] = rng.normal(); };
  f.modes = {{0.0}};
  f.minima.clear();
  f.hessian_sup = normal_pdf(0.0);
  return f;
}

//! The two-sample and theory-check reference mixture: 0.7 N(0, 1) + 0.3 N(5, 1).
inline AnalyticDensity reference_mixture() {
  AnalyticDensity f = gaussian_mixture_1d(0.7, 0.0, 5.0, 1.0, 1.0);
  f.name = "reference_mixture";
  return f;
}

}  // namespace msd
