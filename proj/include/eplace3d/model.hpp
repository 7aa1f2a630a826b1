#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eplace3d/error.hpp"

namespace ep3d {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

enum class CellKind { StdCell, Macro, Filler, Fixed, IO };

inline const char* to_string(CellKind k) {
  switch (k) {
    case CellKind::StdCell: return "stdcell";
    case CellKind::Macro: return "macro";
    case CellKind::Filler: return "filler";
    case CellKind::Fixed: return "fixed";
    case CellKind::IO: return "io";
  }
  return "?";
}

struct Cell {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  CellKind kind = CellKind::StdCell;
  bool movable = true;

  bool is_filler() const { return kind == CellKind::Filler; }
  bool is_macro() const { return kind == CellKind::Macro; }
  // Terminals are anchors only; they never occupy placement volume.
  bool is_terminal() const { return kind == CellKind::IO || kind == CellKind::Fixed; }
};

// Pin offsets are measured from the owning cell's center.
struct Pin {
  std::size_t cell = 0;
  double dx = 0.0;
  double dy = 0.0;
};

struct Net {
  std::string name;
  double weight = 1.0;
  std::vector<Pin> pins;
};

class Netlist {
 public:
  std::vector<Cell> cells;
  std::vector<Net> nets;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_nets() const { return nets.size(); }

  std::size_t add_cell(Cell c) {
    cells.push_back(std::move(c));
    incidence_valid_ = false;
    return cells.size() - 1;
  }

  void add_net(Net n) {
    nets.push_back(std::move(n));
    incidence_valid_ = false;
  }

  // Nets incident to each cell (a net touching a cell through several pins is
  // listed once). Rebuilt lazily after structural edits.
  const std::vector<std::vector<std::size_t>>& cell_nets() const {
    if (!incidence_valid_) rebuild_incidence();
    return cell_nets_;
  }

  std::size_t degree(std::size_t cell) const { return cell_nets()[cell].size(); }

  void invalidate() { incidence_valid_ = false; }

 private:
  void rebuild_incidence() const {
    cell_nets_.assign(cells.size(), {});
    for (std::size_t e = 0; e < nets.size(); ++e) {
      for (const Pin& p : nets[e].pins) {
        auto& lst = cell_nets_[p.cell];
        if (lst.empty() || lst.back() != e) lst.push_back(e);
      }
    }
    incidence_valid_ = true;
  }

  mutable std::vector<std::vector<std::size_t>> cell_nets_;
  mutable bool incidence_valid_ = false;
};

struct Beta {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;
};

// Maps normalized coordinates back to the design's native units:
// physical = origin + normalized * extent. z maps to tier units.
struct Scale {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;
};

// Placement rows, identical on every tier, in normalized units. Row r spans
// y in [r*height, (r+1)*height) and x in [0, 1].
struct RowGrid {
  double height = 0.0;
  int count = 0;
  double site_width = 0.0;

  double row_y(int r) const { return r * height; }
};

struct Region3D {
  double dx = 1.0;
  double dy = 1.0;
  double dz = 1.0;
  int tiers = 1;
  double tier_depth = 1.0;
  Beta beta;
  double rho_t = 1.0;
  Scale scale;
  RowGrid rows;

  double tier_center(int t) const { return (t + 0.5) * tier_depth; }
  double volume() const { return dx * dy * dz; }
  double aspect() const { return scale.sx / scale.sy; }

  // Axis weights used during optimization in normalized space. Planar
  // weights carry the physical aspect so wirelength is measured in units
  // of the region height; z carries the vertical-interconnect weight.
  Beta axis_weights() const { return {beta.x * aspect(), beta.y, beta.z}; }
};

inline Region3D normalize_region(double width, double height, int tiers, double origin_x = 0.0,
                                 double origin_y = 0.0) {
  if (!(width > 0.0) || !(height > 0.0)) throw InvalidRegion("region extents must be positive");
  if (tiers < 1) throw InvalidRegion("tier count must be >= 1");
  Region3D r;
  r.tiers = tiers;
  r.tier_depth = r.dz / tiers;
  r.scale = {origin_x, origin_y, width, height, static_cast<double>(tiers)};
  return r;
}

inline Point3 denormalize(const Region3D& r, const Point3& p) {
  return {r.scale.origin_x + p.x * r.scale.sx, r.scale.origin_y + p.y * r.scale.sy,
          p.z * r.scale.sz};
}

inline Point3 normalize(const Region3D& r, const Point3& p) {
  return {(p.x - r.scale.origin_x) / r.scale.sx, (p.y - r.scale.origin_y) / r.scale.sy,
          p.z / r.scale.sz};
}

inline double cell_volume(const Cell& c, const Region3D& r) {
  if (c.is_terminal()) return 0.0;
  return c.width * c.height * r.tier_depth;
}

struct Placement {
  std::vector<Point3> pos;
  std::vector<int> tier;  // empty until tiers are assigned

  bool has_tiers() const { return !tier.empty(); }
  std::size_t size() const { return pos.size(); }
};

// Uniform bin decomposition of the box [x0,x0+lx] x [y0,y0+ly] x [z0,z0+lz].
struct BinGridSpec {
  int nx = 8;
  int ny = 8;
  int nz = 8;
  double x0 = 0.0, y0 = 0.0, z0 = 0.0;
  double lx = 1.0, ly = 1.0, lz = 1.0;

  double bx() const { return lx / nx; }
  double by() const { return ly / ny; }
  double bz() const { return lz / nz; }
  double bin_volume() const { return bx() * by() * bz(); }
  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * ny + iy) * nz + iz;
  }
};

inline int next_pow2(double v) {
  int m = 1;
  while (m < v - 1e-9) m <<= 1;
  return m;
}

// Grid sizing: |B| = V_R / (k * V_avg / rho_t), cube root rounded up to a
// power of two and clamped to [8, 256].
inline BinGridSpec size_bin_grid(const Region3D& region, double avg_std_cell_volume, double rho_t,
                                 double k = 1.0) {
  if (!(avg_std_cell_volume > 0.0)) throw InvalidInput("average cell volume must be positive");
  if (!(rho_t > 0.0) || rho_t > 1.0) throw InvalidInput("target density must be in (0,1]");
  const double bins = region.volume() / (k * avg_std_cell_volume / rho_t);
  const int m = std::clamp(next_pow2(std::cbrt(bins)), 8, 256);
  BinGridSpec g;
  g.nx = g.ny = g.nz = m;
  g.lx = region.dx;
  g.ly = region.dy;
  g.lz = region.dz;
  return g;
}

// The planar analogue for one tier: |B| = A_tier / (k * A_avg / rho_t).
inline int size_bin_grid_2d(double tier_area, double avg_std_cell_area, double rho_t,
                            double k = 1.0) {
  if (!(avg_std_cell_area > 0.0)) throw InvalidInput("average cell area must be positive");
  const double bins = tier_area / (k * avg_std_cell_area / rho_t);
  return std::clamp(next_pow2(std::sqrt(bins)), 8, 1024);
}

inline constexpr double kDefaultViCapacitance = 30e-15;   // 30 fF per vertical interconnect
inline constexpr double kDefaultRowCapacitance = 0.3e-15;  // 0.3 fF per row-height of wire

inline double compute_vi_weight(int tiers, int rows, double c_vi = kDefaultViCapacitance,
                                double c_row = kDefaultRowCapacitance) {
  if (rows <= 0) throw InvalidInput("row count must be positive");
  if (tiers <= 0 || !(c_vi > 0.0) || !(c_row > 0.0))
    throw InvalidInput("tiers and capacitances must be positive");
  return (tiers * c_vi) / (rows * c_row);
}

// A placement instance in normalized engine units.
struct Instance {
  Netlist netlist;
  Region3D region;
  Placement placement;
};

inline double average_stdcell_volume(const Instance& inst) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Cell& c : inst.netlist.cells) {
    if (c.kind == CellKind::StdCell) {
      sum += cell_volume(c, inst.region);
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

}  // namespace ep3d
