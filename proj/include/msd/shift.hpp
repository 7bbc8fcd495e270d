#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "msd/analytic.hpp"
#include "msd/density.hpp"
#include "msd/parallel.hpp"
#include "msd/point_cloud.hpp"

namespace msd {

using DensitySource = std::variant<DensityModel, AnalyticDensity>;

//! The generalized mean shift map x -> x + c tau^2 grad f(x) / f(x) for a
//! density source f. Empirical operators (f a KDE, tau = h) step with the
//! weighted-mean form, which is algebraically identical for the gaussian
//! kernel with c = 1 and avoids forming the ratio.
class ShiftOperator {
 public:
  ShiftOperator(DensitySource source, double tau, double c) : source_(std::move(source)), tau_(tau), c_(c) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("ShiftOperator: tau must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("ShiftOperator: c must be positive");
  }

  static ShiftOperator empirical(DensityModel model) {
    const double h = model.bandwidth(), c = model.kernel().c;
    return ShiftOperator(std::move(model), h, c);
  }

  static ShiftOperator population(AnalyticDensity f, double tau, double c = 1.0) {
    return ShiftOperator(std::move(f), tau, c);
  }

  const DensitySource& source() const noexcept { return source_; }
  double tau() const noexcept { return tau_; }
  double c() const noexcept { return c_; }

  std::size_t dim() const {
    return std::visit([](const auto& s) -> std::size_t {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DensityModel>) return s.dim();
      else return s.dim;
    }, source_);
  }

  const DensityModel* model() const noexcept { return std::get_if<DensityModel>(&source_); }

  double density_at(std::span<const double> x) const {
    if (const auto* m = model()) return m->density_at(x);
    return std::get<AnalyticDensity>(source_).density(x);
  }

  //! Returns f(x) and writes grad f(x).
  double density_and_gradient(std::span<const double> x, std::span<double> grad) const {
    if (const auto* m = model()) return m->density_and_gradient(x, grad);
    const auto& f = std::get<AnalyticDensity>(source_);
    f.gradient(x, grad);
    return f.density(x);
  }

  bool uses_weighted_mean() const {
    const auto* m = model();
    return m && m->kernel().family == KernelFamily::gaussian && tau_ == m->bandwidth() && c_ == 1.0;
  }

 private:
  DensitySource source_;
  double tau_;
  double c_;
};

//! x + c tau^2 grad f(x) / f(x), always via the ratio.
inline Point ratio_step(const ShiftOperator& op, std::span<const double> x) {
  require_dim(x, op.dim(), "shift_step");
  Point g(x.size());
  const double f = op.density_and_gradient(x, g);
  if (!(f > 0.0) || !std::isfinite(f)) throw SupportError("shift_step: density is zero or non-finite at the query point");
  const double s = op.c() * op.tau() * op.tau() / f;
  Point out(x.begin(), x.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += s * g[k];
  for (double v : out)
    if (!std::isfinite(v)) throw SupportError("shift_step: non-finite shifted position");
  return out;
}

//! sum_i X_i K((x - X_i)/h) / sum_j K((x - X_j)/h)
inline Point empirical_step_weighted_mean(const DensityModel& model, std::span<const double> x) {
  return model.weighted_mean(x);
}

inline Point shift_step(const ShiftOperator& op, std::span<const double> x) {
  if (op.uses_weighted_mean()) {
    require_dim(x, op.dim(), "shift_step");
    return op.model()->weighted_mean(x);
  }
  return ratio_step(op, x);
}

struct ShiftTrace {
  std::vector<Point> path;  // path.front() is the start
  std::vector<double> step_lengths;
  double total_length = 0.0;
  bool converged = false;
  std::size_t iterations = 0;

  const Point& end() const { return path.back(); }
};

//! 1e-7 times the mean per-coordinate sample sd of the model data; the
//! bandwidth stands in when the data has no spread.
inline double default_tolerance(const DensityModel& model) {
  double scale = 0.0;
  if (model.size() >= 2) scale = mean_sd(model.data());
  if (!(scale > 0.0)) scale = model.bandwidth();
  return 1e-7 * scale;
}

inline constexpr std::size_t kDefaultMaxIter = 500;

//! Iterates shift_step until a step shorter than tol or max_iter steps.
//! Running out of iterations is reported through converged = false.
inline ShiftTrace shift_until_converged(const ShiftOperator& op, std::span<const double> x, double tol,
                                        std::size_t max_iter = kDefaultMaxIter) {
  if (!(tol > 0.0)) throw std::invalid_argument("shift_until_converged: tol must be positive");
  if (max_iter == 0) throw std::invalid_argument("shift_until_converged: max_iter must be positive");
  ShiftTrace trace;
  trace.path.emplace_back(x.begin(), x.end());
  for (std::size_t it = 0; it < max_iter; ++it) {
    Point next = shift_step(op, trace.path.back());
    const double len = distance(next, trace.path.back());
    trace.path.push_back(std::move(next));
    trace.step_lengths.push_back(len);
    trace.total_length += len;
    ++trace.iterations;
    if (len < tol) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

//! Applies the fixed operator to every point, `sweeps` times. The operator
//! source is never refitted to the moved points.
inline PointCloud denoise(const PointCloud& data, const ShiftOperator& op, std::size_t sweeps = 1) {
  if (sweeps == 0) throw std::invalid_argument("denoise: sweeps must be >= 1");
  if (data.dim() != op.dim()) throw std::invalid_argument("denoise: dimension mismatch");
  std::vector<double> coords = data.coords();
  const std::size_t d = data.dim();
  for (std::size_t s = 0; s < sweeps; ++s) {
    parallel_for(data.size(), [&](std::size_t i) {
      std::span<double> row(coords.data() + i * d, d);
      Point moved;
      try {
        moved = shift_step(op, row);
      } catch (const SupportError& e) {
        throw e.with_index(i);
      }
      std::copy(moved.begin(), moved.end(), row.begin());
    });
  }
  return PointCloud(d, std::move(coords));
}

}  // namespace msd
