#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "eplace3d/bookshelf.hpp"

namespace ep3d {

struct SyntheticSpec {
  std::size_t cells = 1000;
  int macros = 0;
  int pads = 32;
  double utilization = 0.7;     // movable area over core area in 2D
  double macro_fraction = 0.3;  // total macro area over std-cell area
  double radius_min = 1.5;  // lattice units
  double radius_tail = 1.3;  // Pareto exponent of the net radius, a Rent-like length spread
  std::uint64_t seed = 1;
};

// A random 2D circuit with spatial locality. Every object gets a hidden
// location on a lattice and each net gathers objects within a radius of its
// driver; radii follow a Pareto law so net lengths have a power-law tail.
// Row height and site width are 1; std cells are one row tall and 1 to 4
// sites wide.
inline BookshelfDesign make_synthetic(const SyntheticSpec& spec) {
  if (spec.cells < 2) throw InvalidInput("synthetic instance needs at least two cells");
  if (!(spec.utilization > 0.0 && spec.utilization < 1.0)) throw InvalidInput("utilization must be in (0,1)");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uint_in = [&](int lo, int hi) { return lo + static_cast<int>(std::floor(u(rng) * (hi - lo + 1))); };

  BookshelfDesign d;
  d.name = "synth";
  double std_area = 0.0;
  for (std::size_t i = 0; i < spec.cells; ++i) {
    const double w = uint_in(1, 4);
    d.netlist.add_cell({"o" + std::to_string(i), w, 1.0, CellKind::StdCell, true});
    std_area += w;
  }
  double macro_area = 0.0;
  if (spec.macros > 0) {
    const double each = spec.macro_fraction * std_area / spec.macros;
    for (int m = 0; m < spec.macros; ++m) {
      const double ar = std::exp((u(rng) - 0.5) * std::log(4.0));
      const double scale = each * (0.6 + 0.8 * u(rng));
      const double h = std::max(2.0, std::round(std::sqrt(scale / ar)));
      const double w = std::max(2.0, std::round(scale / h));
      d.netlist.add_cell({"m" + std::to_string(m), w, h, CellKind::Macro, true});
      macro_area += w * h;
    }
  }
  const double core = (std_area + macro_area) / spec.utilization;
  const int rows = std::max(4, static_cast<int>(std::ceil(std::sqrt(core))));
  const int sites = std::max(4, static_cast<int>(std::ceil(core / rows)));
  for (int r = 0; r < rows; ++r) d.rows.push_back({static_cast<double>(r), 1.0, 0.0, 1.0, 1.0, sites});
  d.xl = 0.0;
  d.yl = 0.0;
  d.xh = sites;
  d.yh = rows;

  const std::size_t movable = d.netlist.num_cells();
  for (int p = 0; p < spec.pads; ++p)
    d.netlist.add_cell({"p" + std::to_string(p), 0.0, 0.0, CellKind::IO, false});

  // Hidden layout: objects in random order on a jittered lattice.
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(movable))));
  std::vector<std::size_t> order(movable);
  for (std::size_t i = 0; i < movable; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> lattice(static_cast<std::size_t>(side) * side);
  std::vector<std::pair<int, int>> slot(movable);
  for (std::size_t k = 0; k < movable; ++k) {
    const int gx = static_cast<int>(k % side), gy = static_cast<int>(k / side);
    lattice[static_cast<std::size_t>(gy) * side + gx].push_back(order[k]);
    slot[order[k]] = {gx, gy};
  }
  auto pick_near = [&](int gx, int gy, double radius) -> std::size_t {
    for (int tries = 0; tries < 64; ++tries) {
      const double a = 2.0 * 3.14159265358979323846 * u(rng), r = radius * std::sqrt(u(rng));
      const int x = std::clamp(gx + static_cast<int>(std::lround(r * std::cos(a))), 0, side - 1);
      const int y = std::clamp(gy + static_cast<int>(std::lround(r * std::sin(a))), 0, side - 1);
      const auto& b = lattice[static_cast<std::size_t>(y) * side + x];
      if (!b.empty()) return b[static_cast<std::size_t>(u(rng) * b.size()) % b.size()];
    }
    return order[static_cast<std::size_t>(u(rng) * movable) % movable];
  };
  auto degree = [&] {
    const double v = u(rng);
    if (v < 0.55) return 2;
    if (v < 0.75) return 3;
    if (v < 0.92) return uint_in(4, 6);
    return uint_in(7, 14);
  };
  auto pin_offset = [&](std::size_t cell) {
    const Cell& c = d.netlist.cells[cell];
    return Pin{cell, (u(rng) - 0.5) * c.width * 0.8, (u(rng) - 0.5) * c.height * 0.8};
  };

  std::size_t net_id = 0;
  auto add_net = [&](std::vector<std::size_t> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.size() < 2) return;
    Net n{"n" + std::to_string(net_id++), 1.0, {}};
    for (std::size_t c : members) n.pins.push_back(pin_offset(c));
    d.netlist.add_net(std::move(n));
  };

  for (std::size_t i = 0; i < movable; ++i) {
    const auto [gx, gy] = slot[i];
    const double radius = std::min(spec.radius_min * std::pow(1.0 - u(rng), -1.0 / spec.radius_tail),
                                   static_cast<double>(side));
    const int deg = d.netlist.cells[i].is_macro() ? uint_in(8, 16) : degree();
    std::vector<std::size_t> m{i};
    for (int k = 1; k < deg; ++k) m.push_back(pick_near(gx, gy, radius));
    add_net(std::move(m));
  }
  // Extra nets give macros a pin count proportional to their perimeter.
  for (std::size_t i = 0; i < movable; ++i) {
    if (!d.netlist.cells[i].is_macro()) continue;
    const auto [gx, gy] = slot[i];
    const int extra = static_cast<int>((d.netlist.cells[i].width + d.netlist.cells[i].height) / 2);
    for (int k = 0; k < extra; ++k) add_net({i, pick_near(gx, gy, 3.0), pick_near(gx, gy, 3.0)});
  }

  d.center.assign(d.netlist.num_cells(), {});
  d.fixed.assign(d.netlist.num_cells(), false);
  for (std::size_t i = 0; i < movable; ++i) {
    const Cell& c = d.netlist.cells[i];
    d.center[i] = {0.5 * c.width + u(rng) * (d.xh - c.width), 0.5 * c.height + u(rng) * (d.yh - c.height), 0.0};
  }
  // Pads sit on the boundary next to the lattice cells they connect to.
  for (int p = 0; p < spec.pads; ++p) {
    const std::size_t id = movable + p;
    d.fixed[id] = true;
    const double t = (p + 0.5) / spec.pads * 4.0;
    const int edge = static_cast<int>(t);
    const double f = t - edge;
    int gx = 0, gy = 0;
    Point3 pos;
    switch (edge) {
      case 0: pos = {f * d.xh, 0.0, 0.0}; gx = static_cast<int>(f * (side - 1)); gy = 0; break;
      case 1: pos = {d.xh, f * d.yh, 0.0}; gx = side - 1; gy = static_cast<int>(f * (side - 1)); break;
      case 2: pos = {(1 - f) * d.xh, d.yh, 0.0}; gx = static_cast<int>((1 - f) * (side - 1)); gy = side - 1; break;
      default: pos = {0.0, (1 - f) * d.yh, 0.0}; gx = 0; gy = static_cast<int>((1 - f) * (side - 1)); break;
    }
    d.center[id] = pos;
    add_net({id, pick_near(gx, gy, 2.0), pick_near(gx, gy, 2.0)});
  }
  return d;
}

}  // namespace ep3d
