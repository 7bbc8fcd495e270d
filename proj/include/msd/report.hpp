#pragma once

#include <string>

#include "json.hpp"
#include "msd/anomaly.hpp"
#include "msd/experiments.hpp"
#include "msd/theory_lab.hpp"
#include "msd/twosample.hpp"

#ifndef MSD_VERSION
#define MSD_VERSION "0.1.0"
#endif

namespace msd {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = MSD_VERSION;

//! Non-finite values serialize as null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const ScalingReport& r) {
  Json j;
  j["check"] = r.check;
  j["parameter"] = r.parameter;
  j["quantity"] = r.quantity;
  j["grid"] = r.grid;
  Json m = Json::array(), se = Json::array();
  for (double v : r.measured) m.push_back(number(v));
  for (double v : r.standard_error) se.push_back(number(v));
  j["measured"] = m;
  j["standard_error"] = se;
  j["slope"] = number(r.slope);
  j["slope_half_width"] = number(r.slope_half_width);
  j["intercept"] = number(r.intercept);
  Json d = Json::object();
  for (const auto& [k, v] : r.diagnostics) d[k] = number(v);
  j["diagnostics"] = d;
  Json s = Json::object();
  for (const auto& [k, v] : r.series) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    s[k] = a;
  }
  j["series"] = s;
  j["violations"] = r.violations;
  return j;
}

inline Json to_json(const TheoryOutcome& o) {
  Json j;
  j["reports"] = Json::array();
  for (const auto& r : o.reports) j["reports"].push_back(to_json(r));
  j["checks"] = Json::object();
  for (const auto& [k, v] : o.checks) j["checks"][k] = v;
  j["passed"] = o.passed();
  return j;
}

inline Json to_json(const TestResult& t) {
  return Json{{"statistic", number(t.statistic)},
              {"p_value", t.p_value},
              {"n_permutations", t.n_permutations},
              {"alpha", t.alpha},
              {"reject", t.reject}};
}

//! Rates at null grid points above alpha are flagged as level inflation.
inline Json to_json(const PowerCurve& c) {
  Json j;
  j["scenario"] = c.scenario;
  j["test"] = to_string(c.test);
  j["reps"] = c.reps;
  j["n_permutations"] = c.n_perm;
  j["alpha"] = c.alpha;
  j["rows"] = Json::array();
  for (std::size_t g = 0; g < c.grid.size(); ++g) {
    Json row;
    row["grid"] = c.grid[g];
    row["null"] = static_cast<bool>(c.h0[g]);
    row["power_before"] = c.power_before[g];
    if (!c.power_after.empty()) row["power_after"] = c.power_after[g];
    if (c.h0[g]) {
      row["level_inflated_before"] = c.power_before[g] > c.alpha;
      if (!c.power_after.empty()) row["level_inflated_after"] = c.power_after[g] > c.alpha;
    }
    j["rows"].push_back(row);
  }
  return j;
}

inline Json to_json(const AnomalyReport& r) {
  Json j;
  j["scores"] = r.scores;
  j["ranking"] = r.ranking;
  Json conv = Json::array();
  for (char c : r.converged) conv.push_back(static_cast<bool>(c));
  j["converged"] = conv;
  j["iterations"] = r.iterations;
  j["non_converged"] = r.non_converged();
  return j;
}

inline Json to_json(const ClusterEvalResult& r, bool msd) {
  Json j;
  j["ari_before"] = r.ari_before;
  j["mean_before"] = r.mean_before;
  j["sd_before"] = r.sd_before;
  if (msd) {
    j["ari_after"] = r.ari_after;
    j["mean_after"] = r.mean_after;
    j["sd_after"] = r.sd_after;
    j["bandwidth"] = r.bandwidth;
  }
  return j;
}

//! Every report carries the version and the configuration that produced it.
inline Json envelope(const std::string& command, Json config, Json result) {
  return Json{{"command", command}, {"version", kVersion}, {"config", std::move(config)}, {"result", std::move(result)}};
}

}  // namespace msd
