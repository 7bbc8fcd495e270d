#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msd/msd.hpp"

namespace {

using msd::Json;

constexpr int kExitViolation = 1;
constexpr int kExitError = 2;

struct Output {
  explicit Output(std::string p) : path(std::move(p)) {}
  std::string path;

  std::ostream& stream() {
    if (path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + path);
    return file;
  }

 private:
  std::ofstream file;
};

void emit(const std::string& path, const Json& j) {
  Output out{path};
  out.stream() << j.dump(2) << '\n';
}

//! "scv", "nrd" or a positive number.
double resolve_bandwidth(const std::string& spec, const msd::PointCloud& data) {
  if (spec == "scv") return msd::select_bandwidth_scv(data);
  if (spec == "nrd") return msd::select_bandwidth_normal_scale(data);
  std::size_t used = 0;
  double h = 0.0;
  try {
    h = std::stod(spec, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != spec.size() || !(h > 0.0) || !std::isfinite(h))
    throw std::invalid_argument("--h must be 'scv', 'nrd' or a positive number, got '" + spec + "'");
  return h;
}

std::vector<double> mean_density(const msd::DensityModel& model, const msd::PointCloud& a, const msd::PointCloud& b) {
  const auto da = model.density_batch(a), db = model.density_batch(b);
  return {msd::mean(da), msd::mean(db)};
}

// ---------------------------------------------------------------------------

struct DenoiseArgs {
  std::string input, output = "-", report, h = "scv";
  std::size_t sweeps = 1;
  std::uint64_t seed = 1;
};

int run_denoise(const DenoiseArgs& a) {
  const auto table = msd::read_csv_file(a.input);
  const double h = resolve_bandwidth(a.h, table.data);
  const auto model = msd::fit(table.data, h);
  const auto moved = msd::denoise(table.data, msd::ShiftOperator::empirical(model), a.sweeps);
  {
    Output out{a.output};
    msd::write_csv(out.stream(), moved, table.header);
  }
  if (!a.report.empty()) {
    const auto m = mean_density(model, table.data, moved);
    Json cfg{{"input", a.input}, {"h", a.h}, {"sweeps", a.sweeps}, {"seed", a.seed}};
    Json res{{"n", table.data.size()},
             {"dim", table.data.dim()},
             {"bandwidth", h},
             {"mean_density_before", m[0]},
             {"mean_density_after", m[1]},
             {"mean_density_increased", m[1] > m[0]}};
    emit(a.report, msd::envelope("denoise", cfg, res));
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ClusterArgs {
  std::string case_name, dataset, input, algo = "spectral", msd = "on", linkage = "average", output = "-", h;
  std::size_t k = 0, reps = 50, knn = 0, sweeps = 1;
  double sigma = -1.0;
  std::uint64_t seed = 1;
};

msd::Linkage parse_linkage(const std::string& s) {
  if (s == "single") return msd::Linkage::single;
  if (s == "complete") return msd::Linkage::complete;
  if (s == "average") return msd::Linkage::average;
  if (s == "ward") return msd::Linkage::ward;
  throw std::invalid_argument("unknown linkage '" + s + "'");
}

int run_cluster_eval(const ClusterArgs& a) {
  const auto algo = msd::parse_cluster_algo(a.algo);
  const bool msd_on = a.msd == "on";
  Json cfg{{"algo", a.algo}, {"msd", a.msd}, {"seed", a.seed}, {"linkage", a.linkage}, {"sweeps", a.sweeps}};
  if (!a.case_name.empty()) {
    msd::ClusterCase c = msd::cluster_case(a.case_name);
    if (a.sigma > 0.0) c.spectral.sigma = a.sigma;
    if (a.knn > 0) c.spectral.knn = a.knn;
    msd::ClusterEvalConfig ec;
    ec.algo = algo;
    ec.k = a.k == 0 ? 2 : a.k;
    ec.msd = msd_on;
    ec.reps = a.reps;
    ec.seed = a.seed;
    ec.linkage = parse_linkage(a.linkage);
    ec.sweeps = a.sweeps;
    const auto res = msd::cluster_eval(c, ec);
    cfg["case"] = c.name;
    cfg["k"] = ec.k;
    cfg["reps"] = ec.reps;
    cfg["n0"] = c.n0;
    cfg["n1"] = c.n1;
    cfg["spectral_sigma"] = c.spectral.sigma;
    cfg["spectral_knn"] = c.spectral.knn;
    emit(a.output, msd::envelope("cluster-eval", cfg, msd::to_json(res, msd_on)));
    return 0;
  }
  // one labelled dataset, clustered once before and once after
  const auto ds = msd::load_dataset(a.dataset, a.input);
  if (ds.labels.empty()) throw std::invalid_argument("cluster-eval on a dataset needs a trailing class-label column");
  const auto& shape = msd::known_datasets().at(a.dataset);
  const std::size_t k = a.k == 0 ? shape.k : a.k;
  if (k > ds.data.size()) throw std::invalid_argument("--k exceeds the number of points");
  msd::SpectralOptions so;
  so.sigma = a.sigma;
  so.knn = a.knn;
  const auto link = parse_linkage(a.linkage);
  const msd::LabelSet truth(ds.labels);
  Json res;
  res["ari_before"] = msd::ari(truth, msd::run_clustering(ds.data, k, algo, so, link, a.seed));
  if (msd_on) {
    const double h = a.h.empty() ? shape.h : resolve_bandwidth(a.h, ds.data);
    const auto moved = msd::denoise(ds.data, msd::ShiftOperator::empirical(msd::fit(ds.data, h)), a.sweeps);
    res["ari_after"] = msd::ari(truth, msd::run_clustering(moved, k, algo, so, link, a.seed));
    res["bandwidth"] = h;
  }
  cfg["dataset"] = a.dataset;
  cfg["input"] = a.input;
  cfg["k"] = k;
  cfg["h"] = a.h.empty() ? "dataset default" : a.h;
  emit(a.output, msd::envelope("cluster-eval", cfg, res));
  return 0;
}

// ---------------------------------------------------------------------------

struct TwoSampleArgs {
  std::string scenario = "uniform-noise", test = "energy", msd = "off", output = "-", csv;
  std::vector<double> grid;
  std::size_t reps = 50, n0 = 1000, n_perm = 199;
  double alpha = 0.05;
  std::uint64_t seed = 1;
};

int run_twosample(const TwoSampleArgs& a) {
  msd::PowerConfig pc;
  pc.n0 = a.n0;
  pc.reps = a.reps;
  pc.n_perm = a.n_perm;
  pc.alpha = a.alpha;
  pc.msd = a.msd == "on";
  pc.test = a.test == "energy" ? msd::TwoSampleTest::energy : msd::TwoSampleTest::mmd;
  pc.seed = a.seed;
  msd::PowerCurve curve;
  std::vector<double> grid = a.grid;
  if (a.scenario == "uniform-noise") {
    if (grid.empty()) grid = {0, 100, 200, 300, 400, 500};
    curve = msd::power_experiment_uniform_noise(grid, pc);
  } else {
    if (grid.empty()) grid = {0.5, 0.55, 0.6, 0.65, 0.7};
    curve = msd::power_experiment_mixture_proportion(grid, pc);
  }
  Json cfg{{"scenario", a.scenario}, {"test", a.test}, {"msd", a.msd}, {"grid", grid}, {"reps", a.reps},
           {"n0", a.n0}, {"n_permutations", a.n_perm}, {"alpha", a.alpha}, {"seed", a.seed}};
  emit(a.output, msd::envelope("twosample", cfg, msd::to_json(curve)));
  if (!a.csv.empty()) {
    Output out{a.csv};
    auto& os = out.stream();
    os << "grid,null,power_before" << (pc.msd ? ",power_after" : "") << '\n';
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
      os << msd::format_double(curve.grid[g]) << ',' << int(curve.h0[g]) << ',' << msd::format_double(curve.power_before[g]);
      if (pc.msd) os << ',' << msd::format_double(curve.power_after[g]);
      os << '\n';
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct AnomalyArgs {
  std::string input, output = "-", traces, h = "scv";
  std::size_t k = 10, max_iter = msd::kDefaultMaxIter;
  double tol = 0.0;
  std::uint64_t seed = 1;
};

int run_anomaly(const AnomalyArgs& a) {
  msd::PointCloud data;
  std::vector<std::size_t> planted;
  if (a.input.empty()) {
    auto s = msd::anomaly_scenario(a.seed);
    data = std::move(s.data.cloud);
    planted = std::move(s.outlier_indices);
  } else {
    data = msd::read_csv_file(a.input).data;
  }
  const double h = resolve_bandwidth(a.h, data);
  const auto model = msd::fit(data, h);
  const double tol = a.tol > 0.0 ? a.tol : msd::default_tolerance(model);
  const auto rep = msd::anomaly_scores(data, model, tol, a.max_iter, !a.traces.empty());
  const auto top = msd::top_k(rep, a.k);
  Json cfg{{"input", a.input.empty() ? "builtin" : a.input}, {"k", a.k}, {"h", a.h}, {"tol", tol},
           {"max_iter", a.max_iter}, {"seed", a.seed}};
  Json res = msd::to_json(rep);
  res["bandwidth"] = h;
  res["top_k"] = top;
  if (!planted.empty()) {
    std::size_t found = 0;
    for (std::size_t i : planted) found += std::find(top.begin(), top.end(), i) != top.end();
    res["planted"] = planted;
    res["planted_in_top_k"] = found;
  }
  emit(a.output, msd::envelope("anomaly", cfg, res));
  if (!a.traces.empty()) {
    Output out{a.traces};
    auto& os = out.stream();
    os << "point,step";
    for (std::size_t j = 0; j < data.dim(); ++j) os << ",x" << j;
    os << '\n';
    for (std::size_t i = 0; i < rep.traces.size(); ++i)
      for (std::size_t s = 0; s < rep.traces[i].path.size(); ++s) {
        os << i << ',' << s;
        for (double v : rep.traces[i].path[s]) os << ',' << msd::format_double(v);
        os << '\n';
      }
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_theory(const std::string& check, std::uint64_t seed, const std::string& output) {
  const auto outcome = msd::run_theory_check(check, seed);
  emit(output, msd::envelope("theory", Json{{"check", check}, {"seed", seed}}, msd::to_json(outcome)));
  return outcome.passed() ? 0 : kExitViolation;
}

int run_generate(const std::string& what, std::uint64_t seed, const std::string& output) {
  msd::LabeledCloud data;
  if (what == "anomaly") data = msd::anomaly_scenario(seed).data;
  else data = msd::generate_case(msd::cluster_case(what), seed);
  Output out{output};
  msd::write_csv(out.stream(), data.cloud, {"x", "y", "label"}, &data.labels);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean shift denoising toolkit"};
  // -h is left free: --h selects the bandwidth
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(msd::kVersion));
  app.require_subcommand(1);
  const std::vector<std::string> on_off{"on", "off"};

  DenoiseArgs dn;
  auto* den = app.add_subcommand("denoise", "Shift every point of a CSV by the fixed KDE mean shift operator");
  den->add_option("input", dn.input, "Input CSV")->required()->check(CLI::ExistingFile);
  den->add_option("-o,--output", dn.output, "Output CSV ('-' for stdout)");
  den->add_option("--h", dn.h, "Bandwidth: scv, nrd or a positive value");
  den->add_option("--sweeps", dn.sweeps, "Number of sweeps (>= 1)")->check(CLI::PositiveNumber);
  den->add_option("--seed", dn.seed, "Master seed");
  den->add_option("--report", dn.report, "Write a JSON summary to this path");

  ClusterArgs cl;
  auto* clu = app.add_subcommand("cluster-eval", "ARI before and after denoising");
  auto* case_opt = clu->add_option("--case", cl.case_name, "bullseye1..3 or spiral4..6");
  auto* ds_opt = clu->add_option("--dataset", cl.dataset, "olive, banknote or seeds (needs --input)");
  case_opt->excludes(ds_opt);
  clu->add_option("--input", cl.input, "Dataset CSV")->check(CLI::ExistingFile);
  clu->add_option("--algo", cl.algo, "kmeans, spectral or hier")->check(CLI::IsMember({"kmeans", "spectral", "hier"}));
  clu->add_option("--k", cl.k, "Cluster count (default: 2, or the dataset's)");
  clu->add_option("--msd", cl.msd, "on or off")->check(CLI::IsMember(on_off));
  clu->add_option("--reps", cl.reps, "Replicates")->check(CLI::PositiveNumber);
  clu->add_option("--seed", cl.seed, "Master seed");
  clu->add_option("--sigma", cl.sigma, "Spectral affinity scale (default: case preset or median distance)");
  clu->add_option("--knn", cl.knn, "Spectral k-nearest-neighbour graph (0 = dense)");
  clu->add_option("--linkage", cl.linkage, "single, complete, average or ward");
  clu->add_option("--sweeps", cl.sweeps, "Denoising sweeps")->check(CLI::PositiveNumber);
  clu->add_option("--h", cl.h, "Dataset bandwidth: scv, nrd or a value (default: the dataset's)");
  clu->add_option("-o,--output", cl.output, "JSON output path");

  TwoSampleArgs ts;
  auto* two = app.add_subcommand("twosample", "Permutation-test power curves");
  two->add_option("--scenario", ts.scenario, "uniform-noise or mixture")->check(CLI::IsMember({"uniform-noise", "mixture"}));
  two->add_option("--test", ts.test, "energy or mmd")->check(CLI::IsMember({"energy", "mmd"}));
  two->add_option("--msd", ts.msd, "on or off")->check(CLI::IsMember(on_off));
  two->add_option("--grid", ts.grid, "Noise counts or mixture weights")->delimiter(',');
  two->add_option("--reps", ts.reps, "Replicates per grid point")->check(CLI::PositiveNumber);
  two->add_option("--n0", ts.n0, "Sample size")->check(CLI::PositiveNumber);
  two->add_option("--n-perm", ts.n_perm, "Permutations (>= 99)")->check(CLI::Range(99, 1000000));
  two->add_option("--alpha", ts.alpha, "Level")->check(CLI::Range(0.0, 1.0));
  two->add_option("--seed", ts.seed, "Master seed");
  two->add_option("-o,--output", ts.output, "JSON output path");
  two->add_option("--csv", ts.csv, "Also write plot-ready CSV here");

  AnomalyArgs an;
  auto* ano = app.add_subcommand("anomaly", "Path-length anomaly scores");
  ano->add_option("--input", an.input, "Input CSV (default: builtin scenario)")->check(CLI::ExistingFile);
  ano->add_option("--k", an.k, "Report the top k");
  ano->add_option("--h", an.h, "Bandwidth: scv, nrd or a positive value");
  ano->add_option("--tol", an.tol, "Convergence tolerance (default: 1e-7 x mean sd)");
  ano->add_option("--max-iter", an.max_iter, "Iteration cap per point")->check(CLI::PositiveNumber);
  ano->add_option("--seed", an.seed, "Seed of the builtin scenario");
  ano->add_option("-o,--output", an.output, "JSON output path");
  ano->add_option("--traces", an.traces, "Write per-point trajectories as CSV");

  std::string check, theory_out = "-";
  std::uint64_t theory_seed = 1;
  auto* th = app.add_subcommand("theory", "Monte Carlo property checks");
  th->add_option("--check", check, "t1, t2, t4, t5, t6 or ascent")
      ->required()
      ->check(CLI::IsMember({"t1", "t2", "t4", "t5", "t6", "ascent"}));
  th->add_option("--seed", theory_seed, "Master seed");
  th->add_option("-o,--output", theory_out, "JSON output path");

  std::string gen_what, gen_out = "-";
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("generate", "Write a simulated dataset as CSV (x, y, label)");
  gen->add_option("what", gen_what, "bullseye1..3, spiral4..6 or anomaly")->required();
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("-o,--output", gen_out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  try {
    if (*den) return run_denoise(dn);
    if (*clu) {
      if (cl.case_name.empty() && (cl.dataset.empty() || cl.input.empty()))
        throw std::invalid_argument("cluster-eval needs --case, or --dataset with --input");
      return run_cluster_eval(cl);
    }
    if (*two) return run_twosample(ts);
    if (*ano) return run_anomaly(an);
    if (*th) return run_theory(check, theory_seed, theory_out);
    if (*gen) return run_generate(gen_what, gen_seed, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "msd: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
