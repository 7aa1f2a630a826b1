#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <unistd.h>

#include "json.hpp"

#include "eplace3d/bookshelf.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / ("ep3d_cli_test_" + std::to_string(::getpid()));

int run(const std::string& args) {
  const std::string cmd = std::string(EPLACE3D_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string value_of(const std::string& report, const std::string& key) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    ASSERT_EQ(run("generate --cells 600 --macros 2 --seed 4 --out " + (kRoot / "gen").string()), 0);
    ASSERT_EQ(run("transform " + aux2d() + " --tiers 2 --out " + (kRoot / "t2").string()), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(kRoot); }
  static std::string aux2d() { return (kRoot / "gen" / "synthetic.aux").string(); }
  static std::string aux3d() { return (kRoot / "t2" / "synthetic.aux").string(); }
};

}  // namespace

TEST_F(Cli, TransformAreaFollowsTierRule) {
  const ep3d::BookshelfDesign a = ep3d::parse_bookshelf(aux2d()), b = ep3d::parse_bookshelf(aux3d());
  EXPECT_EQ(b.tiers, 2);
  const double want = a.width() * a.height() / (2 * 0.9);
  EXPECT_NEAR(b.width() * b.height(), want, 1e-9 * want);
  EXPECT_NEAR(b.width() / b.height(), a.width() / a.height(), 1e-9);
}

TEST_F(Cli, TransformRejectsBadWhitespace) {
  EXPECT_NE(run("transform " + aux2d() + " --whitespace 1.5 --out " + (kRoot / "bad").string()), 0);
}

TEST_F(Cli, PlaceIsLegalAndEvalAgrees) {
  const fs::path out = kRoot / "p1";
  ASSERT_EQ(run("place " + aux3d() + " --seed 7 --out " + out.string()), 0);
  for (const char* f : {"placement.pl", "report.txt", "report.json", "iterations.log", "manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const std::string rep = slurp(out / "report.txt");
  EXPECT_EQ(value_of(rep, "legal"), "1");

  const fs::path ev = kRoot / "e1";
  ASSERT_EQ(run("eval " + aux3d() + " " + (out / "placement.pl").string() + " --out " + ev.string()), 0);
  const std::string er = slurp(ev / "report.txt");
  EXPECT_EQ(value_of(er, "vi"), value_of(rep, "vi"));
  const double h0 = std::stod(value_of(rep, "hpwl")), h1 = std::stod(value_of(er, "hpwl"));
  EXPECT_NEAR(h1, h0, 1e-9 * h0);
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_TRUE(j["legal"].get<bool>());
  EXPECT_FALSE(j["stages"].empty());
}

TEST_F(Cli, SameSeedGivesIdenticalFilesAndReplayReproduces) {
  const fs::path a = kRoot / "d1", b = kRoot / "d2", c = kRoot / "d3";
  ASSERT_EQ(run("place " + aux3d() + " --seed 7 --out " + a.string()), 0);
  ASSERT_EQ(run("place " + aux3d() + " --seed 7 --out " + b.string()), 0);
  ASSERT_EQ(run("place --replay " + (a / "manifest.json").string() + " --out " + c.string()), 0);
  for (const char* f : {"placement.pl", "report.txt", "report.json", "iterations.log"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
  }
}

TEST_F(Cli, EnvironmentOverridesDefaults) {
  const fs::path out = kRoot / "env";
  const std::string cmd = "EPLACE3D_SEED=11 " + std::string(EPLACE3D_BIN) + " place " + aux3d() +
                          " --density-only --out " + out.string() + " > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["options"]["seed"].get<int>(), 11);
}

TEST_F(Cli, DensityOnlyLogShowsOverflowDescent) {
  const fs::path out = kRoot / "dens";
  ASSERT_EQ(run("place " + aux3d() + " --density-only --out " + out.string()), 0);
  std::ifstream log(out / "iterations.log");
  std::string line;
  std::vector<double> tau;
  while (std::getline(log, line)) {
    const auto at = line.find(" tau=");
    ASSERT_NE(at, std::string::npos);
    tau.push_back(std::stod(line.substr(at + 5)));
  }
  ASSERT_GT(tau.size(), 5u);
  EXPECT_LT(tau.back(), tau.front());
  for (std::size_t i = 5; i < tau.size(); ++i) EXPECT_LT(tau[i], tau[i - 5]) << "iteration " << i;
}

TEST_F(Cli, CorruptedPlacementIsIllegal) {
  const fs::path out = kRoot / "p2";
  ASSERT_EQ(run("place " + aux3d() + " --out " + out.string()), 0);
  // Move one std cell onto another of the same size.
  const ep3d::BookshelfDesign d = ep3d::parse_bookshelf(aux3d());
  std::map<std::string, double> width;
  for (const ep3d::Cell& c : d.netlist.cells)
    if (c.kind == ep3d::CellKind::StdCell) width[c.name] = c.width;
  std::ifstream in(out / "placement.pl");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  auto name_of = [&](int i) { return lines[i].substr(0, lines[i].find(' ')); };
  int first = -1, second = -1;
  for (int i = 0; i < static_cast<int>(lines.size()) && second < 0; ++i) {
    if (!width.count(name_of(i))) continue;
    if (first < 0) first = i;
    else if (width[name_of(i)] == width[name_of(first)]) second = i;
  }
  ASSERT_GE(second, 0);
  std::istringstream a(lines[first]), b(lines[second]);
  std::string na, nb, xb, yb, tb;
  a >> na;
  b >> nb >> xb >> yb >> tb;
  lines[first] = na + " " + xb + " " + yb + " " + tb + " : N";
  std::ofstream o(out / "bad.pl");
  for (const auto& l : lines) o << l << "\n";
  o.close();
  const fs::path ev = kRoot / "e2";
  EXPECT_EQ(run("eval " + aux3d() + " " + (out / "bad.pl").string() + " --out " + ev.string()), 1);
  const auto j = nlohmann::json::parse(slurp(ev / "report.json"));
  EXPECT_FALSE(j["legal"].get<bool>());
  ASSERT_EQ(j["violations"].size(), 1u);
  EXPECT_EQ(j["violations"][0]["kind"], "overlap");
}

TEST_F(Cli, HeatmapWritesOneFilePairPerSlice) {
  const fs::path out = kRoot / "heat";
  ASSERT_EQ(run("heatmap " + aux3d() + " --grid 8 --out " + out.string()), 0);
  for (const char* f : {"density_z0.txt", "density_z1.pgm", "field_z1.txt"}) EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST_F(Cli, MissingInputFails) {
  EXPECT_NE(run("place " + (kRoot / "nope.aux").string() + " --out " + (kRoot / "x").string()), 0);
  EXPECT_NE(run("place --out " + (kRoot / "x").string()), 0);
}
