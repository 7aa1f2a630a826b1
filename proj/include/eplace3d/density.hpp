#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "eplace3d/model.hpp"
#include "eplace3d/spectral.hpp"

namespace ep3d {

// One charged cuboid taking part in the electrostatic system.
struct ChargeObject {
  std::size_t cell = 0;
  double w = 0.0, h = 0.0, d = 0.0;  // extents in normalized units
  double q = 0.0;                    // electric quantity
  bool fixed = false;                // fixed obstacle: charged, never moved
  bool filler = false;               // spreads but is excluded from overflow
  double volume() const { return w * h * d; }
};

// Per-axis (bin, overlap length) list for a box against a grid axis.
struct AxisCover {
  int first = 0;
  int count = 0;
  double len[64]{};
  double extent = 0.0;  // length of the (possibly inflated) box
  double scale = 1.0;   // extent ratio real/inflated, < 1 when inflated
};

namespace detail {

// For inflate == true a box thinner than one bin is widened to the bin size
// (its charge density scaled down accordingly) and slid back inside the grid.
// Boxes wider than 64 bins are not expected on the grids the engine sizes.
inline void axis_cover(double center, double width, double origin, double bin, int n, bool inflate,
                       AxisCover& out) {
  double ext = width;
  out.scale = 1.0;
  if (inflate && width < bin) {
    ext = bin;
    out.scale = width / bin;
  }
  double lo = center - 0.5 * ext;
  double hi = center + 0.5 * ext;
  const double glo = origin, ghi = origin + n * bin;
  if (inflate) {
    if (lo < glo) {
      hi += glo - lo;
      lo = glo;
    }
    if (hi > ghi) {
      lo -= hi - ghi;
      hi = ghi;
    }
    lo = std::max(lo, glo);
  }
  out.extent = hi - lo;
  const double clo = std::max(lo, glo), chi = std::min(hi, ghi);
  out.count = 0;
  if (!(chi > clo)) return;
  int b0 = static_cast<int>(std::floor((clo - origin) / bin));
  int b1 = static_cast<int>(std::ceil((chi - origin) / bin)) - 1;
  b0 = std::clamp(b0, 0, n - 1);
  b1 = std::clamp(b1, b0, n - 1);
  if (b1 - b0 + 1 > 64) b1 = b0 + 63;
  out.first = b0;
  for (int b = b0; b <= b1; ++b) {
    const double bl = origin + b * bin, bh = bl + bin;
    const double ov = std::min(chi, bh) - std::max(clo, bl);
    out.len[out.count++] = ov > 0.0 ? ov : 0.0;
  }
}

}  // namespace detail

// Density map of one spectral domain (the whole cuboid in 3D mode, one tier
// slab in planar mode) with its potential and field.
class DensityLayer {
 public:
  explicit DensityLayer(const BinGridSpec& g) : grid_(g), solver_(g), rho_(g.size(), 0.0) {}

  const BinGridSpec& grid() const { return grid_; }
  std::vector<double>& rho() { return rho_; }
  const std::vector<double>& rho() const { return rho_; }
  const SpectralPoissonSolver& field() const { return solver_; }

  void clear() { std::fill(rho_.begin(), rho_.end(), 0.0); }

  // Visits every bin overlapped by the box with its overlap volume divided by
  // the (inflated) box volume, so the weights of an in-grid box sum to 1.
  template <class F>
  void visit(const Point3& c, double w, double h, double d, bool inflate, F&& f) const {
    detail::axis_cover(c.x, w, grid_.x0, grid_.bx(), grid_.nx, inflate, cx_);
    detail::axis_cover(c.y, h, grid_.y0, grid_.by(), grid_.ny, inflate, cy_);
    detail::axis_cover(c.z, d, grid_.z0, grid_.bz(), grid_.nz, inflate, cz_);
    const double inv = 1.0 / (cx_.extent * cy_.extent * cz_.extent);
    for (int a = 0; a < cx_.count; ++a)
      for (int b = 0; b < cy_.count; ++b) {
        const double wab = cx_.len[a] * cy_.len[b] * inv;
        for (int e = 0; e < cz_.count; ++e)
          f(grid_.index(cx_.first + a, cy_.first + b, cz_.first + e), wab * cz_.len[e]);
      }
  }

  void deposit(const Point3& c, const ChargeObject& o) {
    const double per_volume = o.q / grid_.bin_volume();
    visit(c, o.w, o.h, o.d, true, [&](std::size_t idx, double wgt) { rho_[idx] += per_volume * wgt; });
  }

  void remove_mean() {
    double s = 0.0;
    for (double v : rho_) s += v;
    const double mean = s / rho_.size();
    for (double& v : rho_) v -= mean;
  }

  void solve() { solver_.solve(rho_); }

  Point3 sample_field(const Point3& c, const ChargeObject& o) const {
    Point3 e;
    const auto& ex = solver_.ex();
    const auto& ey = solver_.ey();
    const auto& ez = solver_.ez();
    visit(c, o.w, o.h, o.d, true, [&](std::size_t idx, double wgt) {
      e.x += wgt * ex[idx];
      e.y += wgt * ey[idx];
      e.z += wgt * ez[idx];
    });
    return e;
  }

  double sample_potential(const Point3& c, const ChargeObject& o) const {
    double p = 0.0;
    const auto& phi = solver_.phi();
    visit(c, o.w, o.h, o.d, true, [&](std::size_t idx, double wgt) { p += wgt * phi[idx]; });
    return p;
  }

 private:
  BinGridSpec grid_;
  SpectralPoissonSolver solver_;
  std::vector<double> rho_;
  mutable AxisCover cx_, cy_, cz_;
};

enum class DensityMode { Volume3D, PerTier2D };

// The electrostatic system over a set of charge objects. In Volume3D mode a
// single cubic grid spans the region; in PerTier2D mode each tier has its
// own planar grid and objects live on the layer of their tier.
class DensityModel {
 public:
  DensityModel(const Region3D& region, DensityMode mode, int m_xy, int m_z,
               std::vector<ChargeObject> objects)
      : region_(region), mode_(mode), objects_(std::move(objects)) {
    if (mode == DensityMode::Volume3D) {
      BinGridSpec g;
      g.nx = g.ny = m_xy;
      g.nz = m_z;
      g.lx = region.dx;
      g.ly = region.dy;
      g.lz = region.dz;
      layers_.push_back(std::make_unique<DensityLayer>(g));
    } else {
      for (int t = 0; t < region.tiers; ++t) {
        BinGridSpec g;
        g.nx = g.ny = m_xy;
        g.nz = 1;
        g.lx = region.dx;
        g.ly = region.dy;
        g.z0 = t * region.tier_depth;
        g.lz = region.tier_depth;
        layers_.push_back(std::make_unique<DensityLayer>(g));
      }
    }
  }

  const Region3D& region() const { return region_; }
  DensityMode mode() const { return mode_; }
  std::size_t num_layers() const { return layers_.size(); }
  const DensityLayer& layer(std::size_t i) const { return *layers_[i]; }
  DensityLayer& layer(std::size_t i) { return *layers_[i]; }
  const std::vector<ChargeObject>& objects() const { return objects_; }
  const BinGridSpec& grid() const { return layers_.front()->grid(); }

  std::size_t layer_of(const Point3& c) const {
    if (mode_ == DensityMode::Volume3D) return 0;
    const double r = c.z / region_.tier_depth;
    int t = static_cast<int>(std::ceil(r)) - 1;
    return static_cast<std::size_t>(std::clamp(t, 0, region_.tiers - 1));
  }

  void check_bounds(const Placement& pl) const {
    constexpr double eps = 1e-9;
    for (const ChargeObject& o : objects_) {
      const Point3& c = pl.pos[o.cell];
      const bool in = c.x >= 0.5 * o.w - eps && c.x <= region_.dx - 0.5 * o.w + eps &&
                      c.y >= 0.5 * o.h - eps && c.y <= region_.dy - 0.5 * o.h + eps &&
                      c.z >= 0.5 * o.d - eps && c.z <= region_.dz - 0.5 * o.d + eps;
      if (!in) throw StateError("object " + std::to_string(o.cell) + " lies outside the region");
    }
  }

  // Splat charges into bin densities without mean removal.
  void splat(const Placement& pl) {
    check_bounds(pl);
    for (auto& l : layers_) l->clear();
    for (const ChargeObject& o : objects_) {
      const Point3& c = pl.pos[o.cell];
      layers_[layer_of(c)]->deposit(c, o);
    }
  }

  // Splat, remove the mean, and solve for potential and field.
  void update(const Placement& pl) {
    splat(pl);
    for (auto& l : layers_) {
      l->remove_mean();
      l->solve();
    }
  }

  // U = sum_i q_i * Phi_i with Phi_i the overlap-weighted potential.
  double energy(const Placement& pl) const {
    double u = 0.0;
    for (const ChargeObject& o : objects_) {
      const Point3& c = pl.pos[o.cell];
      u += o.q * layers_[layer_of(c)]->sample_potential(c, o);
    }
    return u;
  }

  // q_i * E_i for every object, in object order.
  void density_force(const Placement& pl, std::span<Point3> out) const {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const ChargeObject& o = objects_[i];
      const Point3& c = pl.pos[o.cell];
      const Point3 e = layers_[layer_of(c)]->sample_field(c, o);
      out[i] = {o.q * e.x, o.q * e.y, o.q * e.z};
    }
  }

  // Overflow with exact object geometry: sum_b max(V_b^m - rho_t V_b^WS, 0) / V_m
  // over movable non-filler volume; fixed objects reduce bin whitespace.
  double overflow(const Placement& pl) const {
    double vm = 0.0;
    std::vector<std::vector<double>> mov(layers_.size()), fix(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      mov[l].assign(layers_[l]->grid().size(), 0.0);
      fix[l].assign(layers_[l]->grid().size(), 0.0);
    }
    for (const ChargeObject& o : objects_) {
      if (o.filler) continue;
      const Point3& c = pl.pos[o.cell];
      const std::size_t l = layer_of(c);
      const double vol = o.volume();
      auto& dst = o.fixed ? fix[l] : mov[l];
      if (!o.fixed) vm += vol;
      layers_[l]->visit(c, o.w, o.h, o.d, false,
                        [&](std::size_t idx, double wgt) { dst[idx] += vol * wgt; });
    }
    if (vm <= 0.0) return 0.0;
    double over = 0.0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const double vb = layers_[l]->grid().bin_volume();
      for (std::size_t b = 0; b < mov[l].size(); ++b) {
        const double ws = std::max(vb - fix[l][b], 0.0);
        over += std::max(mov[l][b] - region_.rho_t * ws, 0.0);
      }
    }
    return over / vm;
  }

 private:
  Region3D region_;
  DensityMode mode_;
  std::vector<ChargeObject> objects_;
  std::vector<std::unique_ptr<DensityLayer>> layers_;
};

// Charge objects for the given cells: movers carry their volume, fixed
// obstacles carry volume scaled by the target density.
inline std::vector<ChargeObject> make_charges(const Netlist& nl, const Region3D& region,
                                              std::span<const std::size_t> movers,
                                              std::span<const std::size_t> obstacles = {}) {
  std::vector<ChargeObject> out;
  out.reserve(movers.size() + obstacles.size());
  for (std::size_t i : movers) {
    const Cell& c = nl.cells[i];
    ChargeObject o{i, c.width, c.height, region.tier_depth, 0.0, false, c.is_filler()};
    o.q = o.volume();
    out.push_back(o);
  }
  for (std::size_t i : obstacles) {
    const Cell& c = nl.cells[i];
    ChargeObject o{i, c.width, c.height, region.tier_depth, 0.0, true, false};
    o.q = o.volume() * region.rho_t;
    out.push_back(o);
  }
  return out;
}

}  // namespace ep3d
