#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "msd/io.hpp"
#include "msd/rng.hpp"

using namespace msd;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in, "mem");
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("msd_io_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(Csv, HeaderDetection) {
  const auto t = parse("x, y\n1,2\n3,4\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.data.size(), 2u);
  EXPECT_EQ(t.data(1, 1), 4.0);
  const auto u = parse("1,2\n\n3,+4e1\r\n");
  EXPECT_TRUE(u.header.empty());
  EXPECT_EQ(u.data(1, 1), 40.0);
}

TEST(Csv, DiagnosticsCarryRowAndColumn) {
  try {
    parse("a,b\n1,2\n3\n");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_NE(std::string(e.what()).find("expected 2 columns"), std::string::npos);
  }
  try {
    parse("1,2\n3,oops\n");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(parse("1,nan\n"), CsvError);
  EXPECT_THROW(parse("1,inf\n"), CsvError);
  EXPECT_THROW(parse("x,y\n"), CsvError);
  EXPECT_THROW(parse(""), CsvError);
}

TEST(Csv, RoundTripIsExact) {
  Rng rng(1);
  std::vector<double> c(60);
  for (auto& v : c) v = rng.normal(0, 1e3) * std::pow(10.0, rng.uniform(-20, 20));
  const PointCloud p(3, c);
  const std::vector<int> labels(20, 7);
  std::ostringstream out;
  write_csv(out, p, {"a", "b", "c", "label"}, &labels);
  const auto t = parse(out.str());
  EXPECT_EQ(t.header.size(), 4u);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t.data(i, j), p(i, j));
    EXPECT_EQ(t.data(i, 3), 7.0);
  }
  const std::vector<int> bad(3, 0);
  EXPECT_THROW(write_csv(out, p, {}, &bad), std::invalid_argument);
}

TEST(Dataset, ShapeChecked) {
  const auto path = temp_file("short.csv", "1,2,3,4\n5,6,7,8\n");
  try {
    load_dataset("banknote", path.string());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("expected 1372 rows"), std::string::npos);
  }
  EXPECT_THROW(load_dataset("iris", path.string()), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST(Dataset, LabelColumnSplitAndStandardized) {
  std::ostringstream body;
  Rng rng(2);
  for (int i = 0; i < 210; ++i) {
    for (int j = 0; j < 7; ++j) body << rng.normal(5.0 * j, 2.0) << ',';
    body << (i % 3 == 0 ? 9 : (i % 3 == 1 ? 4 : 1)) << '\n';
  }
  const auto path = temp_file("seeds.csv", body.str());
  const auto ds = load_dataset("seeds", path.string());
  EXPECT_EQ(ds.data.size(), 210u);
  EXPECT_EQ(ds.data.dim(), 7u);
  ASSERT_EQ(ds.labels.size(), 210u);
  EXPECT_EQ(ds.labels[0], 0);
  EXPECT_EQ(ds.labels[1], 1);
  EXPECT_EQ(ds.labels[2], 2);
  for (double m : column_means(ds.data)) EXPECT_NEAR(m, 0.0, 1e-12);
  for (double s : column_sds(ds.data)) EXPECT_NEAR(s, 1.0, 1e-12);
  const auto raw = load_dataset("seeds", path.string(), false);
  EXPECT_FALSE(raw.transform.has_value());
  EXPECT_TRUE(ds.transform.has_value());
  std::filesystem::remove(path);
}
