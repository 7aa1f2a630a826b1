#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "eplace3d/bookshelf.hpp"

using namespace ep3d;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ep3d_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// 10x10 core of ten rows of height 1 with two movable cells and a pad.
fs::path toy_bundle(const fs::path& dir, const std::string& nets_body, const std::string& extra_nodes = "") {
  put(dir / "toy.aux", "RowBasedPlacement : toy.nodes toy.nets toy.wts toy.pl toy.scl\n");
  put(dir / "toy.nodes", "UCLA nodes 1.0\n# comment\nNumNodes : 3\nNumTerminals : 1\n"
                         "  o0 2 1\n  o1 3 1\n  p0 0 0 terminal\n" + extra_nodes);
  put(dir / "toy.nets", "UCLA nets 1.0\nNumNets : 1\nNumPins : 3\n" + nets_body);
  put(dir / "toy.wts", "UCLA wts 1.0\nn0 2.5\n");
  put(dir / "toy.pl", "UCLA pl 1.0\n\no0 1 2 : N\no1 5 5 : N\np0 0 4 : N /FIXED\n");
  std::string scl = "UCLA scl 1.0\nNumRows : 10\n";
  for (int r = 0; r < 10; ++r)
    scl += "CoreRow Horizontal\n Coordinate : " + std::to_string(r) +
           "\n Height : 1\n Sitewidth : 1\n Sitespacing : 1\n Siteorient : 1\n Sitesymmetry : 1\n"
           " SubrowOrigin : 0 NumSites : 10\nEnd\n";
  put(dir / "toy.scl", scl);
  return dir / "toy.aux";
}

const char* kNets = "NetDegree : 3 n0\n  o0 I : 0.5 0\n  o1 O : -1 0.25\n  p0 I : 0 0\n";

BookshelfDesign grid_design(int tiers_hint, double w, double h, double macro_w = 0.0) {
  BookshelfDesign d;
  d.xl = 0;
  d.yl = 0;
  d.xh = w;
  d.yh = h;
  for (int r = 0; r < static_cast<int>(h); ++r) d.rows.push_back({static_cast<double>(r), 1.0, 0.0, 1.0, 1.0, static_cast<int>(w)});
  std::mt19937_64 rng(tiers_hint);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    d.netlist.add_cell({"c" + std::to_string(i), 1.0 + std::floor(3 * u(rng)), 1.0});
    d.center.push_back({2 + u(rng) * (w - 4), 1 + u(rng) * (h - 2), 0});
    d.fixed.push_back(false);
  }
  if (macro_w > 0) {
    d.netlist.add_cell({"m0", macro_w, 2.0, CellKind::Macro});
    d.center.push_back({w / 2, h / 2, 0});
    d.fixed.push_back(false);
  }
  d.netlist.add_cell({"pad", 0.0, 0.0, CellKind::IO, false});
  d.center.push_back({w * 0.3, h * 0.45, 0});
  d.fixed.push_back(true);
  for (int e = 0; e < 30; ++e) {
    Net n{"n" + std::to_string(e), 1.0, {}};
    n.pins.push_back({static_cast<std::size_t>(e), 0, 0});
    n.pins.push_back({static_cast<std::size_t>((e * 7 + 3) % 40), 0.1, -0.2});
    if (e % 5 == 0) n.pins.push_back({d.netlist.num_cells() - 1, 0, 0});
    d.netlist.add_net(n);
  }
  return d;
}

double movable_area(const BookshelfDesign& d) {
  double a = 0;
  for (const Cell& c : d.netlist.cells)
    if (c.movable) a += c.width * c.height;
  return a;
}

}  // namespace

TEST(ParseBookshelf, ToyBundle) {
  TempDir tmp("toy");
  const BookshelfDesign d = parse_bookshelf(toy_bundle(tmp.path, kNets));
  ASSERT_EQ(d.netlist.num_cells(), 3u);
  ASSERT_EQ(d.netlist.num_nets(), 1u);
  EXPECT_EQ(d.netlist.nets[0].pins.size(), 3u);
  EXPECT_EQ(d.netlist.nets[0].weight, 2.5);
  EXPECT_EQ(d.netlist.nets[0].pins[1].dx, -1.0);
  EXPECT_EQ(d.netlist.nets[0].pins[1].dy, 0.25);
  EXPECT_TRUE(d.netlist.cells[0].movable);
  EXPECT_FALSE(d.netlist.cells[2].movable);
  EXPECT_EQ(d.netlist.cells[2].kind, CellKind::IO);
  EXPECT_TRUE(d.fixed[2]);
  EXPECT_EQ(d.center[0].x, 2.0);
  EXPECT_EQ(d.center[0].y, 2.5);
  EXPECT_EQ(d.rows.size(), 10u);
  EXPECT_EQ(d.width(), 10.0);
  EXPECT_EQ(d.height(), 10.0);
}

TEST(ParseBookshelf, UndeclaredNodeNamesTheNode) {
  TempDir tmp("dangling");
  const auto aux = toy_bundle(tmp.path, "NetDegree : 2 n0\n  o0 I\n  o999 O\n");
  try {
    parse_bookshelf(aux);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("o999"), std::string::npos);
    EXPECT_EQ(e.line(), 6u);
  }
}

TEST(ParseBookshelf, NegativeWidthIsParseError) {
  TempDir tmp("negw");
  EXPECT_THROW(parse_bookshelf(toy_bundle(tmp.path, kNets, "  bad -1 1\n")), ParseError);
}

TEST(ParseBookshelf, MissingFileIsIoError) {
  TempDir tmp("missing");
  const auto aux = toy_bundle(tmp.path, kNets);
  fs::remove(tmp.path / "toy.nodes");
  EXPECT_THROW(parse_bookshelf(aux), IoError);
  EXPECT_THROW(parse_bookshelf(tmp.path / "nope.aux"), IoError);
}

TEST(ParseBookshelf, IdempotentNormalForm) {
  TempDir tmp("idem");
  const BookshelfDesign a = parse_bookshelf(toy_bundle(tmp.path, kNets));
  const auto aux2 = write_bookshelf(a, tmp.path / "out", "again");
  const BookshelfDesign b = parse_bookshelf(aux2);
  ASSERT_EQ(a.netlist.num_cells(), b.netlist.num_cells());
  for (std::size_t i = 0; i < a.netlist.num_cells(); ++i) {
    EXPECT_EQ(a.netlist.cells[i].name, b.netlist.cells[i].name);
    EXPECT_EQ(a.netlist.cells[i].width, b.netlist.cells[i].width);
    EXPECT_EQ(a.netlist.cells[i].kind, b.netlist.cells[i].kind);
    EXPECT_NEAR(a.center[i].x, b.center[i].x, 1e-12);
    EXPECT_NEAR(a.center[i].y, b.center[i].y, 1e-12);
    EXPECT_EQ(a.fixed[i], b.fixed[i]);
  }
  ASSERT_EQ(a.netlist.num_nets(), b.netlist.num_nets());
  EXPECT_EQ(a.netlist.nets[0].weight, b.netlist.nets[0].weight);
  EXPECT_EQ(a.netlist.nets[0].pins[1].dy, b.netlist.nets[0].pins[1].dy);
  EXPECT_EQ(a.rows.size(), b.rows.size());
}

TEST(Transform, PerTierAreaAndAspect) {
  BookshelfDesign d = grid_design(1, 100, 50);
  const BookshelfDesign t = transform_2d_to_3d(d, {4, 0.10});
  const double area = t.width() * t.height();
  EXPECT_NEAR(area, 100.0 * 50.0 / 4 / 0.9, 1e-9);
  EXPECT_NEAR(t.width() / t.height(), 2.0, 1e-12);
  EXPECT_EQ(t.tiers, 4);
  // Unit-area example: 0.25 / 0.9 per tier.
  BookshelfDesign unit = grid_design(2, 1, 1);
  unit.rows = {{0, 0.01, 0, 0.01, 0.01, 100}};
  for (auto& c : unit.netlist.cells) c.width = c.height = 0.001;
  for (int r = 1; r < 100; ++r) unit.rows.push_back({r * 0.01, 0.01, 0, 0.01, 0.01, 100});
  const BookshelfDesign ut = transform_2d_to_3d(unit, {4, 0.10});
  EXPECT_NEAR(ut.width() * ut.height(), 0.27777777777777778, 1e-12);
}

TEST(Transform, PreservesTopologyAndUtilization) {
  BookshelfDesign d = grid_design(3, 120, 60);
  const BookshelfDesign t = transform_2d_to_3d(d, {3, 0.2});
  ASSERT_EQ(t.netlist.num_cells(), d.netlist.num_cells());
  ASSERT_EQ(t.netlist.num_nets(), d.netlist.num_nets());
  for (std::size_t i = 0; i < d.netlist.num_cells(); ++i) {
    EXPECT_EQ(t.netlist.cells[i].width, d.netlist.cells[i].width);
    EXPECT_EQ(t.netlist.cells[i].height, d.netlist.cells[i].height);
  }
  for (std::size_t e = 0; e < d.netlist.num_nets(); ++e)
    for (std::size_t k = 0; k < d.netlist.nets[e].pins.size(); ++k)
      EXPECT_EQ(t.netlist.nets[e].pins[k].cell, d.netlist.nets[e].pins[k].cell);
  const double u2d = movable_area(d) / (d.width() * d.height());
  const double u3d = movable_area(t) / (t.tiers * t.width() * t.height());
  EXPECT_NEAR(u3d, u2d * (1 - 0.2), 1e-9);
  // Rows keep their height and fit inside the tier.
  EXPECT_EQ(t.rows.front().height, 1.0);
  EXPECT_LE(t.rows.back().y + 1.0, t.yh + 1e-9);
  EXPECT_GT(t.rows.back().y + 2.0, t.yh);
}

TEST(Transform, TerminalsOnBottomTierBoundary) {
  const BookshelfDesign t = transform_2d_to_3d(grid_design(4, 100, 100), {4, 0.1});
  const std::size_t pad = t.netlist.num_cells() - 1;
  const Point3 p = t.center[pad];
  const bool on_edge = p.x == t.xl || p.x == t.xh || p.y == t.yl || p.y == t.yh;
  EXPECT_TRUE(on_edge);
  EXPECT_EQ(p.z, 0.0);
  // Scaled location (15, 22.5)*0.527 is closest to the left edge.
  EXPECT_EQ(p.x, t.xl);
  EXPECT_NEAR(p.y, 45.0 * std::sqrt(1.0 / 3.6), 1e-9);
}

TEST(Transform, IdentityForOneTierNoWhitespace) {
  const BookshelfDesign d = grid_design(5, 80, 40);
  const BookshelfDesign t = transform_2d_to_3d(d, {1, 0.0});
  EXPECT_EQ(t.width(), d.width());
  EXPECT_EQ(t.height(), d.height());
  for (std::size_t i = 0; i < d.center.size(); ++i) EXPECT_EQ(t.center[i].x, d.center[i].x);
}

TEST(Transform, OversizedMacroIsInfeasible) {
  const BookshelfDesign d = grid_design(6, 100, 100, 90.0);
  try {
    transform_2d_to_3d(d, {4, 0.10});
    FAIL() << "expected InfeasibleTransform";
  } catch (const InfeasibleTransform& e) {
    EXPECT_EQ(e.macro(), "m0");
    // Raising whitespace to the reported value makes it fit.
    EXPECT_GT(e.required_whitespace(), 0.10);
    EXPECT_NO_THROW(transform_2d_to_3d(d, {4, e.required_whitespace() + 1e-6}));
  }
}

TEST(Transform, RejectsBadSpec) {
  const BookshelfDesign d = grid_design(7, 10, 10);
  EXPECT_THROW(transform_2d_to_3d(d, {4, 1.5}), InvalidInput);
  EXPECT_THROW(transform_2d_to_3d(d, {0, 0.1}), InvalidInput);
}

TEST(Transform, ThreeDBundleRoundTrip) {
  TempDir tmp("bundle3d");
  const BookshelfDesign t = transform_2d_to_3d(grid_design(8, 64, 32), {4, 0.1});
  const BookshelfDesign back = parse_bookshelf(write_bookshelf(t, tmp.path, "t"));
  EXPECT_EQ(back.tiers, 4);
  EXPECT_EQ(back.xh, t.xh);
  EXPECT_EQ(back.yh, t.yh);
  EXPECT_EQ(back.rows.size(), t.rows.size());
}

TEST(ToInstance, NormalizesAndSetsViWeight) {
  const BookshelfDesign t = transform_2d_to_3d(grid_design(9, 100, 100), {4, 0.1});
  const Instance inst = to_instance(t, 0.9);
  EXPECT_EQ(inst.region.tiers, 4);
  EXPECT_EQ(inst.region.rho_t, 0.9);
  EXPECT_NEAR(inst.region.beta.z, compute_vi_weight(4, static_cast<int>(t.rows.size())), 1e-15);
  EXPECT_NEAR(inst.netlist.cells[0].width * inst.region.scale.sx, t.netlist.cells[0].width, 1e-12);
  EXPECT_NEAR(inst.region.rows.height * inst.region.scale.sy, 1.0, 1e-12);
}

TEST(PlacementFile, RoundTrip) {
  TempDir tmp("pl");
  const BookshelfDesign t = transform_2d_to_3d(grid_design(10, 100, 100), {4, 0.1});
  Instance inst = to_instance(t);
  Placement pl = inst.placement;
  pl.tier.assign(pl.size(), 0);
  for (std::size_t i = 0; i < pl.size(); ++i) {
    pl.tier[i] = static_cast<int>(i % 4);
    pl.pos[i].z = inst.region.tier_center(pl.tier[i]);
    pl.pos[i].x = 0.1 + 0.8 * std::fmod(i * 0.137, 1.0);
  }
  write_placement_3d(tmp.path / "a.pl", inst, pl);
  const Placement back = read_placement_3d(tmp.path / "a.pl", inst, inst.placement);
  for (std::size_t i = 0; i < pl.size(); ++i) {
    EXPECT_NEAR(back.pos[i].x, pl.pos[i].x, 1e-12);
    EXPECT_NEAR(back.pos[i].y, pl.pos[i].y, 1e-12);
    EXPECT_EQ(back.pos[i].z, pl.pos[i].z);
    EXPECT_EQ(back.tier[i], pl.tier[i]);
  }
}

TEST(PlacementFile, TierOutOfRangeIsFormatError) {
  TempDir tmp("badtier");
  const Instance inst = to_instance(transform_2d_to_3d(grid_design(11, 50, 50), {4, 0.1}));
  put(tmp.path / "b.pl", "UCLA pl 1.0\nc0 1 1 5 : N\n");
  EXPECT_THROW(read_placement_3d(tmp.path / "b.pl", inst, inst.placement), FormatError);
  put(tmp.path / "c.pl", "UCLA pl 1.0\nc0 1 1 : N\n");
  EXPECT_THROW(read_placement_3d(tmp.path / "c.pl", inst, inst.placement), FormatError);
  put(tmp.path / "d.pl", "UCLA pl 1.0\nzz 1 1 0 : N\n");
  EXPECT_THROW(read_placement_3d(tmp.path / "d.pl", inst, inst.placement), FormatError);
}

TEST(PlacementFile, LegacyThreeColumnSingleTier) {
  TempDir tmp("legacy");
  const Instance inst = to_instance(grid_design(12, 50, 50));
  put(tmp.path / "l.pl", "UCLA pl 1.0\nc0 10 20 : N\n");
  const Placement p = read_placement_3d(tmp.path / "l.pl", inst, inst.placement);
  EXPECT_EQ(p.tier[0], 0);
  EXPECT_NEAR(p.pos[0].x * 50, 10 + 0.5 * inst.netlist.cells[0].width * 50, 1e-12);
  EXPECT_EQ(p.pos[0].z, 0.5);
}
