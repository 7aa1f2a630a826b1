#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "eplace3d/flow.hpp"
#include "eplace3d/heatmap.hpp"
#include "eplace3d/synthetic.hpp"

using namespace ep3d;

namespace {

Instance synthetic_instance(std::size_t cells, int macros, int tiers, std::uint64_t seed) {
  SyntheticSpec s;
  s.cells = cells;
  s.macros = macros;
  s.seed = seed;
  return to_instance(transform_2d_to_3d(make_synthetic(s), {tiers, 0.10}), 1.0);
}

const StageReport* find_stage(const FlowResult& r, const std::string& name) {
  for (const StageReport& s : r.stages)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace

TEST(Flow, SingleTierIsLegalWithoutVerticalInterconnects) {
  Instance inst = synthetic_instance(800, 2, 1, 3);
  const FlowResult r = run_flow(inst, FlowConfig{});
  ASSERT_TRUE(r.completed);
  EXPECT_TRUE(r.final_report.legal) << r.final_report.violations.size() << " violations";
  EXPECT_EQ(r.final_report.vi, 0);
  EXPECT_EQ(find_stage(r, "mgp3d"), nullptr);
  EXPECT_EQ(find_stage(r, "cgp3d"), nullptr);
}

TEST(Flow, MultiTierMixedSizeIsLegal) {
  Instance inst = synthetic_instance(1500, 6, 3, 5);
  const FlowResult r = run_flow(inst, FlowConfig{});
  ASSERT_TRUE(r.completed);
  EXPECT_TRUE(r.final_report.legal) << r.final_report.violations.size() << " violations";
  EXPECT_GT(r.final_report.vi, 0);
  const StageReport* lg = find_stage(r, "legalization");
  const StageReport* dp = find_stage(r, "detailed_placement");
  ASSERT_TRUE(lg && dp);
  EXPECT_EQ(lg->vi, dp->vi);
  EXPECT_LE(dp->hpwl, lg->hpwl + 1e-9);
  EXPECT_EQ(lg->om, 0.0);
  for (const Cell& c : inst.netlist.cells) EXPECT_FALSE(c.is_filler());
}

TEST(Flow, FixedSeedIsDeterministic) {
  auto run = [] {
    Instance inst = synthetic_instance(600, 3, 2, 8);
    FlowConfig cfg;
    cfg.seed = 7;
    run_flow(inst, cfg);
    return inst.placement;
  };
  const Placement a = run(), b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.pos[i].x, b.pos[i].x);
    EXPECT_EQ(a.pos[i].y, b.pos[i].y);
    EXPECT_EQ(a.tier[i], b.tier[i]);
  }
}

TEST(Flow, DensityOnlyStopsAfterFirstPlacement) {
  Instance inst = synthetic_instance(500, 0, 3, 2);
  FlowConfig cfg;
  cfg.density_only = true;
  const FlowResult r = run_flow(inst, cfg);
  ASSERT_EQ(r.stages.size(), 2u);
  EXPECT_EQ(r.stages[1].name, "mgp3d");
  EXPECT_LE(r.stages[1].tau, cfg.tau_stop_3d);
  for (const IterRecord& rec : r.iterations) EXPECT_EQ(rec.stage, "mgp3d");
}

TEST(Flow, BadConfigIsRejected) {
  Instance inst = synthetic_instance(200, 0, 2, 1);
  FlowConfig cfg;
  cfg.tau_stop_3d = 1.5;
  EXPECT_THROW(run_flow(inst, cfg), InvalidInput);
  cfg = {};
  cfg.threads = 0;
  EXPECT_THROW(run_flow(inst, cfg), InvalidInput);
}

TEST(Flow, FailureNamesTheStage) {
  Instance inst = synthetic_instance(300, 0, 2, 1);
  inst.region.rows = {};
  try {
    run_flow(inst, FlowConfig{});
    FAIL() << "expected a stage failure";
  } catch (const StageFailure& e) {
    EXPECT_EQ(e.stage(), "legalization");
  }
}

TEST(Flow, StageCallbackSeesEveryStage) {
  Instance inst = synthetic_instance(400, 2, 2, 4);
  FlowConfig cfg;
  std::vector<std::string> seen;
  cfg.on_stage = [&](const std::string& name, const Instance&) { seen.push_back(name); };
  const FlowResult r = run_flow(inst, cfg);
  ASSERT_EQ(seen.size(), r.stages.size());
  const std::vector<std::string> want{"initial_placement", "mgp3d", "tier_assignment", "mgp2d",
                                      "macro_legalization", "cgp3d", "tier_reassignment", "cgp2d",
                                      "legalization", "detailed_placement"};
  EXPECT_EQ(seen, want);
}

// ---------------------------------------------------------------- heatmap

TEST(Heatmap, UniformPlacementGivesFlatDensity) {
  Instance inst;
  inst.region = normalize_region(1, 1, 2);
  const int m = 8;
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      for (int t = 0; t < 2; ++t) {
        inst.netlist.add_cell({"c", 1.0 / m, 1.0 / m, CellKind::StdCell, true});
        inst.placement.pos.push_back({(x + 0.5) / m, (y + 0.5) / m, inst.region.tier_center(t)});
      }
  const Heatmap h = heatmap_of(inst.netlist, inst.region, inst.placement, m, 2);
  for (double d : h.density) EXPECT_NEAR(d, 1.0, 1e-12);
  for (double f : h.field) EXPECT_NEAR(f, 0.0, 1e-12);
}

TEST(Heatmap, CornerClusterPeaksInCornerBin) {
  Instance inst;
  inst.region = normalize_region(1, 1, 2);
  for (int i = 0; i < 20; ++i) {
    inst.netlist.add_cell({"c", 0.05, 0.05, CellKind::StdCell, true});
    inst.placement.pos.push_back({0.03 + 0.001 * i, 0.04, inst.region.tier_center(0)});
  }
  const Heatmap h = heatmap_of(inst.netlist, inst.region, inst.placement, 8, 2);
  const auto top = std::max_element(h.density.begin(), h.density.end()) - h.density.begin();
  EXPECT_EQ(static_cast<std::size_t>(top), h.grid.index(0, 0, 0));
}

TEST(Heatmap, SingleCosineModeGivesStripes) {
  BinGridSpec g;
  g.nx = g.ny = 16;
  g.nz = 4;
  const double w = std::numbers::pi * 2 / g.lx;
  std::vector<double> rho(g.size());
  for (int x = 0; x < g.nx; ++x)
    for (int y = 0; y < g.ny; ++y)
      for (int z = 0; z < g.nz; ++z) rho[g.index(x, y, z)] = 1.0 + 0.5 * std::cos(w * (x + 0.5) * g.bx());
  const Heatmap h = heatmap_from_density(g, rho);
  for (int x = 0; x < g.nx; ++x) {
    const double want = 0.5 / w * std::abs(std::sin(w * (x + 0.5) * g.bx()));
    for (int y = 0; y < g.ny; ++y)
      for (int z = 0; z < g.nz; ++z) {
        EXPECT_NEAR(h.field_at(x, y, z), want, 1e-10);
        EXPECT_EQ(h.density_at(x, y, z), h.density_at(x, 0, 0));
      }
  }
}

TEST(Heatmap, WritesMatrixAndImagePerSlice) {
  BinGridSpec g;
  g.nx = 4, g.ny = 3, g.nz = 2;
  std::vector<double> rho(g.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = static_cast<double>(i);
  const Heatmap h = heatmap_from_density(g, rho);
  const auto dir = std::filesystem::temp_directory_path() / "ep3d_heatmap_test";
  std::filesystem::remove_all(dir);
  const auto files = write_heatmaps(h, dir, "s_");
  EXPECT_EQ(files.size(), 8u);
  std::ifstream t(dir / "s_density_z1.txt");
  std::string line;
  int lines = 0;
  while (std::getline(t, line)) ++lines;
  EXPECT_EQ(lines, 3);
  std::ifstream p(dir / "s_field_z0.pgm", std::ios::binary);
  std::string magic;
  int wx, hy, maxv;
  p >> magic >> wx >> hy >> maxv;
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(wx, 4);
  EXPECT_EQ(hy, 3);
  std::filesystem::remove_all(dir);
}
