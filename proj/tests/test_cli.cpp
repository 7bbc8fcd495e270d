#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(MSD_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int rc = pclose(p);
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("msd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, GenerateWritesLabeledCsv) {
  ASSERT_EQ(run("generate bullseye1 --seed 3 -o " + path("b.csv")).status, 0);
  const auto text = slurp(path("b.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "x,y,label");
  EXPECT_EQ(count_lines(text), 601u);
  EXPECT_EQ(run("generate nothing").status, 2);
}

TEST_F(Cli, DenoiseRaisesMeanDensityAndKeepsHeader) {
  ASSERT_EQ(run("generate bullseye1 --seed 4 -o " + path("b.csv")).status, 0);
  const auto r = run("denoise " + path("b.csv") + " --sweeps 3 -o " + path("d.csv") + " --report " + path("r.json"));
  ASSERT_EQ(r.status, 0);
  const auto rep = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_EQ(rep["command"], "denoise");
  EXPECT_TRUE(rep["result"]["mean_density_increased"].get<bool>());
  const auto text = slurp(path("d.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "x,y,label");
  EXPECT_EQ(count_lines(text), 601u);
}

TEST_F(Cli, DenoiseIsByteReproducible) {
  ASSERT_EQ(run("generate spiral4 --seed 5 -o " + path("s.csv")).status, 0);
  const auto a = run("denoise " + path("s.csv"));
  const auto b = run("denoise " + path("s.csv"));
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(a.out.empty());
}

TEST_F(Cli, RejectsBadArguments) {
  ASSERT_EQ(run("generate bullseye1 -o " + path("b.csv")).status, 0);
  EXPECT_EQ(run("denoise " + path("b.csv") + " --sweeps 0").status, 2);
  EXPECT_EQ(run("denoise " + path("b.csv") + " --h -1").status, 2);
  EXPECT_EQ(run("denoise " + path("missing.csv")).status, 2);
  EXPECT_EQ(run("twosample --reps 0").status, 2);
  EXPECT_EQ(run("twosample --n-perm 10").status, 2);
  EXPECT_EQ(run("cluster-eval").status, 2);
  EXPECT_EQ(run("cluster-eval --case bullseye1 --algo dbscan").status, 2);
  EXPECT_EQ(run("").status, 2);
  std::ofstream(path("bad.csv")) << "1,2\n3\n";
  EXPECT_EQ(run("denoise " + path("bad.csv")).status, 2);
}

TEST_F(Cli, ClusterEvalSingleReplicate) {
  const auto r = run("cluster-eval --case bullseye1 --algo kmeans --reps 1 --seed 2");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["result"]["ari_before"].size(), 1u);
  EXPECT_EQ(j["result"]["sd_after"], 0.0);
  EXPECT_EQ(j["config"]["case"], "bullseye1");
}

TEST_F(Cli, TwoSampleSmallRun) {
  const auto r = run("twosample --scenario mixture --grid 0.5,0.9 --reps 3 --n0 80 --n-perm 99 --msd on --csv " + path("p.csv"));
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["result"]["rows"].size(), 2u);
  EXPECT_TRUE(j["result"]["rows"][0].contains("level_inflated_after"));
  EXPECT_EQ(count_lines(slurp(path("p.csv"))), 3u);
}

TEST_F(Cli, AnomalyTopKAndTraces) {
  const auto none = run("anomaly --k 0");
  ASSERT_EQ(none.status, 0);
  EXPECT_TRUE(nlohmann::json::parse(none.out)["result"]["top_k"].empty());
  const auto r = run("anomaly --seed 2 --traces " + path("t.csv"));
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["result"]["top_k"].size(), 10u);
  EXPECT_EQ(j["result"]["planted"].size(), 5u);
  std::size_t rows = 0;
  for (const auto& it : j["result"]["iterations"]) rows += it.get<std::size_t>() + 1;
  EXPECT_EQ(count_lines(slurp(path("t.csv"))), rows + 1);
  EXPECT_EQ(run("anomaly --k 100000").status, 2);
}

TEST_F(Cli, TheoryAscentPasses) {
  const auto r = run("theory --check ascent --seed 1");
  ASSERT_EQ(r.status, 0);
  EXPECT_TRUE(nlohmann::json::parse(r.out)["result"]["passed"].get<bool>());
  EXPECT_EQ(run("theory --check t9").status, 2);
}

TEST_F(Cli, VersionFlag) {
  const auto r = run("--version");
  EXPECT_EQ(r.status, 0);
  EXPECT_FALSE(r.out.empty());
}
