#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "eplace3d/bookshelf.hpp"
#include "eplace3d/density.hpp"
#include "eplace3d/model.hpp"
#include "eplace3d/wirelength.hpp"

namespace ep3d {

enum class ViolationKind { OutOfBounds, Overlap, OffRow, OffTier };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::OutOfBounds: return "out_of_bounds";
    case ViolationKind::Overlap: return "overlap";
    case ViolationKind::OffRow: return "off_row";
    case ViolationKind::OffTier: return "off_tier";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::size_t a = 0;
  std::size_t b = 0;     // second cell for overlaps
  double amount = 0.0;   // overlap volume, physical units
};

constexpr double kEvalTolerance = 1e-9;

// Objects that must be legal: movable std cells and macros.
inline bool is_checked_object(const Cell& c) { return c.movable && (c.kind == CellKind::StdCell || c.is_macro()); }

namespace detail {

// Native-unit box of a cell: left, right, bottom, top.
struct Box {
  double x0, x1, y0, y1;
};

inline Box native_box(const Region3D& r, const Cell& c, const Point3& p) {
  const double cx = p.x * r.scale.sx, cy = p.y * r.scale.sy;
  const double hw = 0.5 * c.width * r.scale.sx, hh = 0.5 * c.height * r.scale.sy;
  return {cx - hw, cx + hw, cy - hh, cy + hh};
}

inline bool on_grid(double v, double pitch, double tol) {
  const double k = std::round(v / pitch);
  return std::abs(v - k * pitch) <= tol;
}

}  // namespace detail

// Legality in native units: bounds, half-open pairwise overlap per tier by
// an x sweep, bottom edge on a row, and z on the center of the stated tier.
inline std::vector<Violation> check_legality(const Netlist& nl, const Region3D& r, const Placement& pl) {
  std::vector<Violation> out;
  const double W = r.dx * r.scale.sx, H = r.dy * r.scale.sy;
  const double rh = r.rows.height * r.scale.sy;
  const double tol = kEvalTolerance * std::max({W, H, 1.0});
  std::vector<std::vector<std::size_t>> by_tier(r.tiers);
  for (std::size_t i = 0; i < nl.num_cells(); ++i) {
    const Cell& c = nl.cells[i];
    if (!is_checked_object(c)) continue;
    const int t = pl.has_tiers() ? pl.tier[i] : 0;
    if (t < 0 || t >= r.tiers || std::abs(pl.pos[i].z - r.tier_center(t)) > kEvalTolerance) {
      out.push_back({ViolationKind::OffTier, i, i, 0.0});
      if (t < 0 || t >= r.tiers) continue;
    }
    const detail::Box b = detail::native_box(r, c, pl.pos[i]);
    if (b.x0 < -tol || b.x1 > W + tol || b.y0 < -tol || b.y1 > H + tol)
      out.push_back({ViolationKind::OutOfBounds, i, i, 0.0});
    if (r.rows.count > 0) {
      const double k = std::round(b.y0 / rh);
      const bool top_ok = b.y1 <= r.rows.count * rh + tol;
      if (!detail::on_grid(b.y0, rh, tol) || k < 0 || k >= r.rows.count || !top_ok)
        out.push_back({ViolationKind::OffRow, i, i, 0.0});
    }
    by_tier[t].push_back(i);
  }
  const double depth = r.tier_depth * r.scale.sz;
  for (int t = 0; t < r.tiers; ++t) {
    auto& ids = by_tier[t];
    std::vector<detail::Box> box(nl.num_cells());
    for (std::size_t i : ids) box[i] = detail::native_box(r, nl.cells[i], pl.pos[i]);
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      return box[a].x0 != box[b].x0 ? box[a].x0 < box[b].x0 : a < b;
    });
    std::vector<std::size_t> active;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i : ids) {
      const detail::Box& bi = box[i];
      active.erase(std::remove_if(active.begin(), active.end(),
                                  [&](std::size_t j) { return box[j].x1 <= bi.x0 + tol; }),
                   active.end());
      for (std::size_t j : active) {
        const detail::Box& bj = box[j];
        const double ox = std::min(bi.x1, bj.x1) - std::max(bi.x0, bj.x0);
        const double oy = std::min(bi.y1, bj.y1) - std::max(bi.y0, bj.y0);
        if (ox > tol && oy > tol) pairs.push_back({std::min(i, j), std::max(i, j)});
      }
      active.push_back(i);
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [a, b] : pairs) {
      const detail::Box& ba = box[a];
      const detail::Box& bb = box[b];
      const double ox = std::min(ba.x1, bb.x1) - std::max(ba.x0, bb.x0);
      const double oy = std::min(ba.y1, bb.y1) - std::max(ba.y0, bb.y0);
      out.push_back({ViolationKind::Overlap, a, b, ox * oy * depth});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Violation& x, const Violation& y) {
    return x.kind != y.kind ? x.kind < y.kind : (x.a != y.a ? x.a < y.a : x.b < y.b);
  });
  return out;
}

struct EvalReport {
  double hpwl = 0.0;    // beta-weighted planar, native units
  double hpwl_x = 0.0;  // raw spans in native units
  double hpwl_y = 0.0;
  std::int64_t vi = 0;
  double tau = 0.0;
  int grid = 0;  // per-tier planar bins per side used for tau
  bool legal = true;
  std::vector<Violation> violations;
  std::vector<double> tier_utilization;  // placed area over row area per tier
  std::size_t cells = 0;
  std::size_t nets = 0;
};

// Planar bin count per side for the overflow metric, from the tier area and
// average std-cell footprint.
inline int eval_grid_size(const Netlist& nl, const Region3D& r) {
  double a = 0.0;
  std::size_t n = 0;
  for (const Cell& c : nl.cells)
    if (c.kind == CellKind::StdCell) a += c.width * c.height, ++n;
  if (n == 0) return 8;
  return size_bin_grid_2d(r.dx * r.dy, a / n, r.rho_t);
}

inline EvalReport evaluate(const Netlist& nl, const Region3D& r, const Placement& pl, int grid = 0) {
  EvalReport rep;
  rep.cells = 0;
  for (const Cell& c : nl.cells)
    if (!c.is_filler()) ++rep.cells;
  rep.nets = nl.num_nets();
  const Spans s = hpwl_components(pl, nl);
  rep.hpwl_x = s.x * r.scale.sx;
  rep.hpwl_y = s.y * r.scale.sy;
  rep.hpwl = hpwl_native(pl, nl, r);
  rep.vi = pl.has_tiers() ? vi_count(pl, nl) : 0;
  rep.violations = check_legality(nl, r, pl);
  rep.legal = rep.violations.empty();

  std::vector<std::size_t> objs;
  for (std::size_t i = 0; i < nl.num_cells(); ++i)
    if (is_checked_object(nl.cells[i])) objs.push_back(i);
  rep.grid = grid > 0 ? grid : eval_grid_size(nl, r);
  if (!objs.empty()) {
    Placement snapped = pl;
    if (pl.has_tiers())
      for (std::size_t i : objs) snapped.pos[i].z = r.tier_center(std::clamp(pl.tier[i], 0, r.tiers - 1));
    DensityModel dm(r, DensityMode::PerTier2D, rep.grid, 1, make_charges(nl, r, objs));
    rep.tau = dm.overflow(snapped);
  }
  rep.tier_utilization.assign(r.tiers, 0.0);
  const double row_area = (r.rows.count > 0 ? r.rows.count * r.rows.height : r.dy) * r.dx;
  for (std::size_t i : objs) {
    const int t = pl.has_tiers() ? std::clamp(pl.tier[i], 0, r.tiers - 1) : 0;
    rep.tier_utilization[t] += nl.cells[i].width * nl.cells[i].height / row_area;
  }
  return rep;
}

inline void write_report_text(std::ostream& out, const EvalReport& rep) {
  out << "legal=" << (rep.legal ? 1 : 0) << "\n";
  out << "violations=" << rep.violations.size() << "\n";
  out << "cells=" << rep.cells << "\n";
  out << "nets=" << rep.nets << "\n";
  out << "hpwl=" << format_double(rep.hpwl) << "\n";
  out << "hpwl_x=" << format_double(rep.hpwl_x) << "\n";
  out << "hpwl_y=" << format_double(rep.hpwl_y) << "\n";
  out << "vi=" << rep.vi << "\n";
  out << "tau=" << format_double(rep.tau) << "\n";
  out << "tau_grid=" << rep.grid << "\n";
  out << "tiers=" << rep.tier_utilization.size() << "\n";
  for (std::size_t t = 0; t < rep.tier_utilization.size(); ++t)
    out << "tier" << t << "_utilization=" << format_double(rep.tier_utilization[t]) << "\n";
}

inline nlohmann::ordered_json report_json(const EvalReport& rep, const Netlist& nl) {
  nlohmann::ordered_json j;
  j["legal"] = rep.legal;
  j["cells"] = rep.cells;
  j["nets"] = rep.nets;
  j["hpwl"] = rep.hpwl;
  j["hpwl_x"] = rep.hpwl_x;
  j["hpwl_y"] = rep.hpwl_y;
  j["vi"] = rep.vi;
  j["tau"] = rep.tau;
  j["tau_grid"] = rep.grid;
  j["tier_utilization"] = rep.tier_utilization;
  auto& v = j["violations"] = nlohmann::ordered_json::array();
  for (const Violation& x : rep.violations) {
    nlohmann::ordered_json e;
    e["kind"] = to_string(x.kind);
    e["cell"] = nl.cells[x.a].name;
    if (x.kind == ViolationKind::Overlap) {
      e["other"] = nl.cells[x.b].name;
      e["volume"] = x.amount;
    }
    v.push_back(std::move(e));
  }
  return j;
}

}  // namespace ep3d
