#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "msd/density.hpp"
#include "msd/parallel.hpp"
#include "msd/shift.hpp"

namespace msd {

//! Path-length anomaly scores: score_i is the total length of point i's mean
//! shift trajectory to convergence under one fixed KDE.
struct AnomalyReport {
  std::vector<double> scores;
  std::vector<std::size_t> ranking;  // descending score, ties by lower index
  std::vector<char> converged;
  std::vector<std::size_t> iterations;
  std::vector<ShiftTrace> traces;  // empty unless requested

  std::size_t non_converged() const {
    return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
  }
};

inline std::vector<std::size_t> rank_descending(const std::vector<double>& scores) {
  std::vector<std::size_t> r(scores.size());
  std::iota(r.begin(), r.end(), 0);
  std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return r;
}

inline AnomalyReport anomaly_scores(const PointCloud& data, const DensityModel& model, double tol,
                                    std::size_t max_iter = kDefaultMaxIter, bool keep_traces = false) {
  if (data.dim() != model.dim()) throw std::invalid_argument("anomaly_scores: dimension mismatch");
  const auto op = ShiftOperator::empirical(model);
  const std::size_t n = data.size();
  AnomalyReport rep;
  rep.scores.resize(n);
  rep.converged.resize(n);
  rep.iterations.resize(n);
  if (keep_traces) rep.traces.resize(n);
  parallel_for(n, [&](std::size_t i) {
    ShiftTrace t;
    try {
      t = shift_until_converged(op, data.row(i), tol, max_iter);
    } catch (const SupportError& e) {
      throw e.with_index(i);
    }
    rep.scores[i] = t.total_length;
    rep.converged[i] = t.converged;
    rep.iterations[i] = t.iterations;
    if (keep_traces) rep.traces[i] = std::move(t);
  }, 1);
  rep.ranking = rank_descending(rep.scores);
  return rep;
}

inline AnomalyReport anomaly_scores(const PointCloud& data, const DensityModel& model) {
  return anomaly_scores(data, model, default_tolerance(model));
}

inline std::vector<std::size_t> top_k(const AnomalyReport& report, std::size_t k) {
  if (k > report.ranking.size()) throw std::invalid_argument("top_k: k exceeds the number of points");
  return {report.ranking.begin(), report.ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

}  // namespace msd
