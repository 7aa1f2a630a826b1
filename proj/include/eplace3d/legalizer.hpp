#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "eplace3d/error.hpp"
#include "eplace3d/model.hpp"
#include "eplace3d/wirelength.hpp"

namespace ep3d {

// Row geometry on the site lattice. Positions are integer site indices.
struct SiteGrid {
  int rows = 0;
  int sites = 0;
  double row_height = 0.0;
  double site_width = 0.0;

  static SiteGrid of(const Region3D& r) {
    if (r.rows.count <= 0 || !(r.rows.height > 0.0) || !(r.rows.site_width > 0.0))
      throw LegalizationFailure("region has no placement rows");
    SiteGrid g;
    g.rows = r.rows.count;
    g.row_height = r.rows.height;
    g.site_width = r.rows.site_width;
    g.sites = static_cast<int>(std::floor(r.dx / g.site_width + 1e-9));
    return g;
  }
  int width_sites(double w) const { return std::max(1, static_cast<int>(std::ceil(w / site_width - 1e-9))); }
  int height_rows(double h) const { return std::max(1, static_cast<int>(std::ceil(h / row_height - 1e-9))); }
  double x_of(double left_site, double w) const { return left_site * site_width + 0.5 * w; }
  double y_of(int row, double h) const { return row * row_height + 0.5 * h; }
};

struct LegalizeStats {
  int cells = 0;
  double displacement = 0.0;  // total |dx| + |dy| in normalized units
  double max_displacement = 0.0;
};

namespace detail {

struct Segment {
  int lo = 0, hi = 0;  // free sites [lo, hi)
  int used = 0;
};

// Free row segments on one tier after removing blocked intervals.
inline std::vector<std::vector<Segment>> row_segments(const SiteGrid& g, const std::vector<std::vector<std::pair<int, int>>>& blocked) {
  std::vector<std::vector<Segment>> out(g.rows);
  for (int r = 0; r < g.rows; ++r) {
    auto b = blocked[r];
    std::sort(b.begin(), b.end());
    int cur = 0;
    for (const auto& [lo, hi] : b) {
      if (lo > cur) out[r].push_back({cur, lo, 0});
      cur = std::max(cur, hi);
    }
    if (cur < g.sites) out[r].push_back({cur, g.sites, 0});
  }
  return out;
}

struct Cluster {
  double e = 0.0;  // total weight
  double q = 0.0;  // sum of weight * (target - offset)
  int w = 0;       // width in sites
  int x = 0;       // left site
  std::size_t first = 0;  // index of first member in the segment's cell list
};

struct SegmentState {
  std::vector<std::size_t> cells;
  std::vector<int> width;
  std::vector<double> target;
  std::vector<Cluster> clusters;
};

inline int place_cluster(const Cluster& c, int lo, int hi) {
  const double x = c.q / c.e;
  return std::clamp(static_cast<int>(std::lround(x)), lo, hi - c.w);
}

// Final left site of a cell appended to a segment, without committing.
inline int trial_position(const SegmentState& s, const Segment& seg, double target, int w) {
  Cluster c{1.0, target, w, 0, 0};
  c.x = place_cluster(c, seg.lo, seg.hi);
  int offset = 0;  // the new cell's offset inside the merged cluster
  for (std::size_t k = s.clusters.size(); k-- > 0;) {
    const Cluster& p = s.clusters[k];
    if (p.x + p.w <= c.x) break;
    c.q = p.q + c.q - c.e * p.w;
    c.e += p.e;
    offset += p.w;
    c.w += p.w;
    c.x = place_cluster(c, seg.lo, seg.hi);
  }
  return c.x + offset;
}

inline void commit_cell(SegmentState& s, const Segment& seg, std::size_t cell, double target, int w) {
  s.cells.push_back(cell);
  s.width.push_back(w);
  s.target.push_back(target);
  Cluster c{1.0, target, w, 0, s.cells.size() - 1};
  c.x = place_cluster(c, seg.lo, seg.hi);
  while (!s.clusters.empty()) {
    const Cluster& p = s.clusters.back();
    if (p.x + p.w <= c.x) break;
    c.q = p.q + c.q - c.e * p.w;
    c.e += p.e;
    c.w += p.w;
    c.first = p.first;
    s.clusters.pop_back();
    c.x = place_cluster(c, seg.lo, seg.hi);
  }
  s.clusters.push_back(c);
}

}  // namespace detail

inline bool is_std_object(const Cell& c) { return c.movable && c.kind == CellKind::StdCell; }

// Row-based legalization tier by tier from the bottom up. Cells are taken
// in x order and packed into row segments by cluster collapsing, each cell
// going to the row that minimizes its displacement. Macros on a tier block
// the rows they cover; tiers are never changed.
inline LegalizeStats legalize_stdcells(const Netlist& nl, const Region3D& r, Placement& pl) {
  if (!pl.has_tiers()) throw StateError("legalization needs tier assignment");
  const SiteGrid g = SiteGrid::of(r);
  const double ax = r.aspect();
  LegalizeStats st;
  for (int t = 0; t < r.tiers; ++t) {
    std::vector<std::vector<std::pair<int, int>>> blocked(g.rows);
    std::vector<std::size_t> cells;
    double need = 0.0;
    for (std::size_t i = 0; i < nl.num_cells(); ++i) {
      const Cell& c = nl.cells[i];
      if (pl.tier[i] != t) continue;
      if (c.is_macro() && c.movable) {
        const Point3& p = pl.pos[i];
        const double x0 = p.x - 0.5 * c.width, x1 = p.x + 0.5 * c.width;
        const double y0 = p.y - 0.5 * c.height, y1 = p.y + 0.5 * c.height;
        const int s0 = std::max(0, static_cast<int>(std::floor(x0 / g.site_width + 1e-9)));
        const int s1 = std::min(g.sites, static_cast<int>(std::ceil(x1 / g.site_width - 1e-9)));
        const int r0 = std::max(0, static_cast<int>(std::floor(y0 / g.row_height + 1e-9)));
        const int r1 = std::min(g.rows, static_cast<int>(std::ceil(y1 / g.row_height - 1e-9)));
        for (int row = r0; row < r1; ++row) blocked[row].push_back({s0, s1});
      } else if (is_std_object(c)) {
        cells.push_back(i);
        need += g.width_sites(c.width);
      }
    }
    auto segs = detail::row_segments(g, blocked);
    double capacity = 0.0;
    for (const auto& row : segs)
      for (const auto& s : row) capacity += s.hi - s.lo;
    if (need > capacity)
      throw LegalizationFailure("tier " + std::to_string(t) + ": cell width " + std::to_string(need) +
                                " sites exceeds row capacity " + std::to_string(capacity));

    std::vector<std::vector<detail::SegmentState>> state(g.rows);
    for (int row = 0; row < g.rows; ++row) state[row].resize(segs[row].size());
    std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
      const double la = pl.pos[a].x - 0.5 * nl.cells[a].width, lb = pl.pos[b].x - 0.5 * nl.cells[b].width;
      return la != lb ? la < lb : a < b;
    });
    for (std::size_t i : cells) {
      const Cell& c = nl.cells[i];
      const int w = g.width_sites(c.width);
      const double tx = (pl.pos[i].x - 0.5 * c.width) / g.site_width;
      const double ty = (pl.pos[i].y - 0.5 * c.height) / g.row_height;
      const int home = std::clamp(static_cast<int>(std::lround(ty)), 0, g.rows - 1);
      double best = std::numeric_limits<double>::infinity();
      int best_row = -1, best_seg = -1;
      for (int d = 0; d < g.rows; ++d) {
        const int r_lo = home - d, r_hi = home + d;
        double bound = std::numeric_limits<double>::infinity();
        if (r_lo >= 0) bound = std::abs(r_lo - ty) * g.row_height;
        if (r_hi < g.rows) bound = std::min(bound, std::abs(r_hi - ty) * g.row_height);
        if (!std::isfinite(bound) || bound >= best) break;
        for (int row : {r_lo, r_hi}) {
          if (row < 0 || row >= g.rows) continue;
          const double dy = std::abs(row - ty) * g.row_height;
          if (dy >= best) continue;
          for (std::size_t s = 0; s < segs[row].size(); ++s) {
            const detail::Segment& seg = segs[row][s];
            if (seg.hi - seg.lo - seg.used < w) continue;
            const int x = detail::trial_position(state[row][s], seg, tx, w);
            const double cost = std::abs(x - tx) * g.site_width * ax + dy;
            if (cost < best) best = cost, best_row = row, best_seg = static_cast<int>(s);
          }
          if (d == 0) break;
        }
      }
      if (best_row < 0)
        throw LegalizationFailure("tier " + std::to_string(t) + ": no row segment can hold " + c.name);
      detail::commit_cell(state[best_row][best_seg], segs[best_row][best_seg], i, tx, w);
      segs[best_row][best_seg].used += w;
      pl.pos[i].y = g.y_of(best_row, c.height);
    }
    for (int row = 0; row < g.rows; ++row)
      for (auto& s : state[row])
        for (const detail::Cluster& cl : s.clusters) {
          int x = cl.x;
          for (std::size_t k = cl.first; k < s.cells.size() && x < cl.x + cl.w; ++k) {
            const std::size_t i = s.cells[k];
            pl.pos[i].x = g.x_of(x, nl.cells[i].width);
            pl.pos[i].z = r.tier_center(t);
            x += s.width[k];
          }
        }
    st.cells += static_cast<int>(cells.size());
  }
  return st;
}

// Measures displacement of a legalization between two placements.
inline LegalizeStats displacement(const Netlist& nl, const Region3D& r, const Placement& a, const Placement& b) {
  LegalizeStats st;
  for (std::size_t i = 0; i < nl.num_cells(); ++i) {
    if (!is_std_object(nl.cells[i])) continue;
    const double d = std::abs(a.pos[i].x - b.pos[i].x) * r.aspect() + std::abs(a.pos[i].y - b.pos[i].y);
    ++st.cells;
    st.displacement += d;
    st.max_displacement = std::max(st.max_displacement, d);
  }
  return st;
}

struct DetailStats {
  int swaps = 0;
  int shifts = 0;
  double hpwl_before = 0.0;
  double hpwl_after = 0.0;
};

// One pass of local refinement per tier and row: swap adjacent cells of
// equal width, then move each cell to the point of its free interval closest
// to the optimal region of its nets. Moves are kept only when the planar
// HPWL of the incident nets strictly decreases.
inline DetailStats detail_place(const Netlist& nl, const Region3D& r, Placement& pl) {
  const SiteGrid g = SiteGrid::of(r);
  const Beta w{r.beta.x * r.scale.sx, r.beta.y * r.scale.sy, 0.0};
  const auto& inc = nl.cell_nets();
  DetailStats st;
  st.hpwl_before = hpwl(pl, nl, w);

  auto net_cost = [&](std::size_t e) {
    const Spans s = net_spans(pl, nl.nets[e]);
    return nl.nets[e].weight * (w.x * s.x + w.y * s.y);
  };
  std::vector<std::size_t> nets;
  auto local_cost = [&](std::size_t a, std::size_t b) {
    nets.clear();
    for (std::size_t e : inc[a]) nets.push_back(e);
    if (b != a)
      for (std::size_t e : inc[b]) nets.push_back(e);
    std::sort(nets.begin(), nets.end());
    nets.erase(std::unique(nets.begin(), nets.end()), nets.end());
    double s = 0.0;
    for (std::size_t e : nets) s += net_cost(e);
    return s;
  };

  // Rows of cells per tier, sorted by x; macros bound the free intervals.
  struct Item {
    int left, w;
    std::size_t cell;
    bool fixed;
  };
  for (int t = 0; t < r.tiers; ++t) {
    std::vector<std::vector<Item>> rows(g.rows);
    for (std::size_t i = 0; i < nl.num_cells(); ++i) {
      const Cell& c = nl.cells[i];
      if (pl.tier[i] != t || !c.movable || c.is_filler()) continue;
      if (!c.is_macro() && c.kind != CellKind::StdCell) continue;
      const int left = static_cast<int>(std::lround((pl.pos[i].x - 0.5 * c.width) / g.site_width));
      const int row0 = static_cast<int>(std::lround((pl.pos[i].y - 0.5 * c.height) / g.row_height));
      const int span = g.height_rows(c.height);
      for (int row = std::max(row0, 0); row < std::min(row0 + span, g.rows); ++row)
        rows[row].push_back({left, g.width_sites(c.width), i, c.is_macro()});
    }
    for (int row = 0; row < g.rows; ++row) {
      auto& rs = rows[row];
      std::sort(rs.begin(), rs.end(), [](const Item& a, const Item& b) { return a.left != b.left ? a.left < b.left : a.cell < b.cell; });
      for (std::size_t k = 0; k + 1 < rs.size(); ++k) {
        Item& a = rs[k];
        Item& b = rs[k + 1];
        if (a.fixed || b.fixed || a.w != b.w) continue;
        const double before = local_cost(a.cell, b.cell);
        const double xa = pl.pos[a.cell].x, xb = pl.pos[b.cell].x;
        pl.pos[a.cell].x = g.x_of(b.left, nl.cells[a.cell].width);
        pl.pos[b.cell].x = g.x_of(a.left, nl.cells[b.cell].width);
        if (local_cost(a.cell, b.cell) < before - 1e-12 * std::max(before, 1.0)) {
          std::swap(a.left, b.left);
          std::swap(a, b);
          ++st.swaps;
        } else {
          pl.pos[a.cell].x = xa;
          pl.pos[b.cell].x = xb;
        }
      }
      std::vector<double> lo, hi;
      for (std::size_t k = 0; k < rs.size(); ++k) {
        Item& it = rs[k];
        if (it.fixed) continue;
        const int free_lo = k == 0 ? 0 : rs[k - 1].left + rs[k - 1].w;
        const int free_hi = k + 1 == rs.size() ? g.sites : rs[k + 1].left;
        if (free_hi - free_lo <= it.w) continue;
        // Optimal region in x: median interval of the other pins' boxes.
        lo.clear();
        hi.clear();
        for (std::size_t e : inc[it.cell]) {
          double l = std::numeric_limits<double>::infinity(), h = -l, off = 0.0;
          bool other = false;
          for (const Pin& p : nl.nets[e].pins) {
            if (p.cell == it.cell) {
              off = p.dx;
              continue;
            }
            const double x = pl.pos[p.cell].x + p.dx;
            l = std::min(l, x);
            h = std::max(h, x);
            other = true;
          }
          if (!other) continue;
          lo.push_back(l - off);
          hi.push_back(h - off);
        }
        if (lo.empty()) continue;
        std::vector<double> ends = lo;
        ends.insert(ends.end(), hi.begin(), hi.end());
        std::sort(ends.begin(), ends.end());
        const double target_center = 0.5 * (ends[ends.size() / 2 - 1] + ends[ends.size() / 2]);
        const double cw = nl.cells[it.cell].width;
        const int want = std::clamp(static_cast<int>(std::lround((target_center - 0.5 * cw) / g.site_width)), free_lo,
                                    free_hi - it.w);
        if (want == it.left) continue;
        const double before = local_cost(it.cell, it.cell);
        const double x_old = pl.pos[it.cell].x;
        pl.pos[it.cell].x = g.x_of(want, cw);
        if (local_cost(it.cell, it.cell) < before - 1e-12 * std::max(before, 1.0)) {
          it.left = want;
          ++st.shifts;
        } else {
          pl.pos[it.cell].x = x_old;
        }
      }
    }
  }
  st.hpwl_after = hpwl(pl, nl, w);
  return st;
}

}  // namespace ep3d
