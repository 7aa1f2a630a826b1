#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eplace3d/density.hpp"
#include "eplace3d/optimizer.hpp"
#include "eplace3d/wirelength.hpp"

namespace ep3d {

// ---------------------------------------------------------------- fillers

inline std::size_t filler_count(double placeable_volume, double movable_volume, double rho_t,
                                double filler_volume) {
  if (!(filler_volume > 0.0)) return 0;
  const double room = rho_t * placeable_volume - movable_volume;
  if (!(room > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(room / filler_volume + 1e-9));
}

struct FillerShape {
  double width = 0.0;
  double height = 0.0;
};

// Average std-cell footprint; falls back to the average movable footprint.
inline FillerShape filler_shape(const Netlist& nl) {
  double w = 0, h = 0;
  std::size_t n = 0;
  for (const Cell& c : nl.cells)
    if (c.kind == CellKind::StdCell) w += c.width, h += c.height, ++n;
  if (n == 0)
    for (const Cell& c : nl.cells)
      if (c.movable && !c.is_filler()) w += c.width, h += c.height, ++n;
  return n ? FillerShape{w / n, h / n} : FillerShape{};
}

inline bool is_movable_object(const Cell& c) { return c.movable && !c.is_terminal(); }

inline double movable_volume(const Netlist& nl, const Region3D& r) {
  double v = 0.0;
  for (const Cell& c : nl.cells)
    if (is_movable_object(c) && !c.is_filler()) v += cell_volume(c, r);
  return v;
}

// Drops every filler; fillers always sit at the tail of the cell list.
inline void remove_fillers(Instance& inst) {
  std::size_t keep = inst.netlist.cells.size();
  while (keep > 0 && inst.netlist.cells[keep - 1].is_filler()) --keep;
  inst.netlist.cells.resize(keep);
  inst.placement.pos.resize(keep);
  if (inst.placement.has_tiers()) inst.placement.tier.resize(keep);
  inst.netlist.invalidate();
}

inline std::size_t append_filler(Instance& inst, const FillerShape& s, const Point3& p, int tier) {
  const std::size_t id = inst.netlist.add_cell(
      {"filler" + std::to_string(inst.netlist.cells.size()), s.width, s.height, CellKind::Filler, true});
  inst.placement.pos.push_back(p);
  if (inst.placement.has_tiers()) inst.placement.tier.push_back(tier);
  return id;
}

// Fills rho_t * (region volume - obstacle volume) - movable volume with
// pin-less fillers of the average std-cell size at uniform random positions.
inline std::size_t insert_fillers(Instance& inst, std::mt19937_64& rng, double obstacle_volume = 0.0) {
  remove_fillers(inst);
  const Region3D& r = inst.region;
  const FillerShape s = filler_shape(inst.netlist);
  const std::size_t n =
      filler_count(r.volume() - obstacle_volume, movable_volume(inst.netlist, r), r.rho_t, s.width * s.height * r.tier_depth);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const Point3 p{0.5 * s.width + u(rng) * (r.dx - s.width), 0.5 * s.height + u(rng) * (r.dy - s.height),
                   0.5 * r.tier_depth + u(rng) * (r.dz - r.tier_depth)};
    append_filler(inst, s, p, 0);
  }
  return n;
}

// ---------------------------------------------------------- tier assignment

inline int tier_of_z(double z, const Region3D& r) {
  return std::clamp(static_cast<int>(std::ceil(z / r.tier_depth)) - 1, 0, r.tiers - 1);
}

// Snaps every object to its closest tier (boundary ties go to the lower
// tier) and sets z to the tier center.
inline void assign_tiers(const Region3D& r, Placement& pl) {
  pl.tier.resize(pl.pos.size());
  for (std::size_t i = 0; i < pl.pos.size(); ++i) {
    pl.tier[i] = tier_of_z(pl.pos[i].z, r);
    pl.pos[i].z = r.tier_center(pl.tier[i]);
  }
}

inline std::vector<double> tier_cell_area(const Netlist& nl, const Placement& pl, int tiers) {
  std::vector<double> a(tiers, 0.0);
  for (std::size_t i = 0; i < nl.num_cells(); ++i) {
    const Cell& c = nl.cells[i];
    if (is_movable_object(c) && !c.is_filler()) a[pl.tier[i]] += c.width * c.height;
  }
  return a;
}

// Moves std cells off tiers whose cell area exceeds `capacity` (a fraction
// of the row area). An upward sweep pushes the highest cells of each full
// tier one tier up, then a downward sweep pushes the lowest ones down, so
// cells keep their order in the continuous z. Returns the number of moves.
inline std::size_t rebalance_tiers(const Netlist& nl, const Region3D& r, const std::vector<double>& z_before,
                                   Placement& pl, double capacity = 1.0) {
  if (r.tiers < 2) return 0;
  const double rows_area = r.rows.count > 0 ? r.rows.count * r.rows.height * r.dx : r.dx * r.dy;
  const double cap = capacity * rows_area * (1.0 + 1e-9);
  std::vector<double> area = tier_cell_area(nl, pl, r.tiers);
  std::size_t moved = 0;
  auto sweep = [&](int from, int to, int dir) {
    for (int t = from; t != to; t += dir) {
      if (area[t] <= cap) continue;
      std::vector<std::size_t> cand;
      for (std::size_t i = 0; i < nl.num_cells(); ++i)
        if (nl.cells[i].kind == CellKind::StdCell && pl.tier[i] == t) cand.push_back(i);
      // Highest first when pushing up, lowest first when pushing down.
      std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        if (z_before[a] != z_before[b]) return dir > 0 ? z_before[a] > z_before[b] : z_before[a] < z_before[b];
        return a < b;
      });
      for (std::size_t i : cand) {
        if (area[t] <= cap) break;
        const double a = nl.cells[i].width * nl.cells[i].height;
        pl.tier[i] = t + dir;
        pl.pos[i].z = r.tier_center(t + dir);
        area[t] -= a;
        area[t + dir] += a;
        ++moved;
      }
    }
  };
  sweep(0, r.tiers - 1, 1);
  sweep(r.tiers - 1, 0, -1);
  return moved;
}

// Tops up (or trims) fillers tier by tier so every tier is filled to rho_t
// of its whitespace. Existing fillers keep their positions.
inline void topup_fillers_per_tier(Instance& inst, std::mt19937_64& rng, std::span<const double> obstacle_area = {}) {
  const Region3D& r = inst.region;
  Placement& pl = inst.placement;
  const FillerShape s = filler_shape(inst.netlist);
  const double fa = s.width * s.height;
  std::vector<double> used = tier_cell_area(inst.netlist, pl, r.tiers);
  std::vector<std::size_t> want(r.tiers);
  for (int t = 0; t < r.tiers; ++t) {
    const double obst = obstacle_area.empty() ? 0.0 : obstacle_area[t];
    want[t] = filler_count(r.dx * r.dy - obst, used[t], r.rho_t, fa);
  }
  std::vector<std::pair<Point3, int>> kept;
  std::vector<std::size_t> have(r.tiers, 0);
  for (std::size_t i = 0; i < inst.netlist.num_cells(); ++i) {
    if (!inst.netlist.cells[i].is_filler()) continue;
    const int t = pl.tier[i];
    if (have[t] < want[t]) {
      kept.push_back({pl.pos[i], t});
      ++have[t];
    }
  }
  remove_fillers(inst);
  for (const auto& [p, t] : kept) append_filler(inst, s, p, t);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < r.tiers; ++t)
    for (std::size_t k = have[t]; k < want[t]; ++k)
      append_filler(inst, s,
                    {0.5 * s.width + u(rng) * (r.dx - s.width), 0.5 * s.height + u(rng) * (r.dy - s.height),
                     r.tier_center(t)},
                    t);
}

// ------------------------------------------------------- global placement

struct IterRecord {
  std::string stage;
  int iter = 0;
  double hpwl = 0.0;    // native units, planar
  double wa = 0.0;      // smooth wirelength in engine units
  double energy = 0.0;  // U at the reference solution
  double lambda = 0.0;
  double gamma = 0.0;   // gamma_x
  double tau = 0.0;
  double alpha = 0.0;
};

struct GPConfig {
  std::string stage = "gp";
  double tau_stop = 0.10;
  int max_iters = 2000;
  PrecondMode precond = PrecondMode::Volume3D;
  bool density_only = false;
  double hpwl_ref_fraction = 0.01;  // lambda ramp reference as a fraction of the current wirelength
  int max_restarts = 3;
  int stall_window = 100;  // stop when tau has not improved by 1% for this many iterations
  int threads = 1;
  std::function<void(const IterRecord&)> observer;
};

struct GPResult {
  int iterations = 0;
  int restarts = 0;
  bool stalled = false;
  double tau = 0.0;
  double energy_initial = 0.0;
  double energy_final = 0.0;
  std::vector<IterRecord> records;
};

// Runs preconditioned Nesterov on f = W + lambda * U over the given movers,
// with `obstacles` as fixed charges. In PerTier2D mode z is frozen.
inline GPResult global_place(const Instance& inst, Placement& pl, std::span<const std::size_t> movers,
                             std::span<const std::size_t> obstacles, DensityMode mode, int m_xy, int m_z,
                             const GPConfig& cfg) {
  const Netlist& nl = inst.netlist;
  const Region3D& r = inst.region;
  GPResult res;
  if (movers.empty()) return res;
  const bool planar = mode == DensityMode::PerTier2D;

  std::vector<ChargeObject> charges = make_charges(nl, r, movers, obstacles);
  DensityModel dm(r, mode, m_xy, m_z, charges);
  WAModel wa(nl, cfg.threads);
  Beta beta = r.axis_weights();
  if (planar) beta.z = 0.0;
  const std::size_t nm = movers.size();

  std::vector<double> q(nm);
  std::vector<std::size_t> deg(nm);
  Bounds bounds;
  bounds.lo.resize(nm);
  bounds.hi.resize(nm);
  for (std::size_t k = 0; k < nm; ++k) {
    const Cell& c = nl.cells[movers[k]];
    q[k] = charges[k].q;
    deg[k] = nl.degree(movers[k]);
    const Point3& p = pl.pos[movers[k]];
    const double hw = 0.5 * std::min(c.width, r.dx), hh = 0.5 * std::min(c.height, r.dy);
    bounds.lo[k] = {hw, hh, planar ? p.z : 0.5 * r.tier_depth};
    bounds.hi[k] = {r.dx - hw, r.dy - hh, planar ? p.z : r.dz - 0.5 * r.tier_depth};
  }

  Placement work = pl;
  std::vector<Point3> gw(nl.num_cells()), force(charges.size());
  double lambda = 1.0;
  SmoothingParams gamma{};
  double last_energy = 0.0, last_wa = 0.0;
  std::vector<double> divisor;
  auto refresh_divisor = [&] {
    const double l = cfg.density_only ? 1.0 : lambda;
    if (cfg.precond == PrecondMode::Volume3D || cfg.density_only)
      divisor = preconditioner_3d(q, l);
    else
      divisor = preconditioner_2d(q, deg, l);
  };

  auto load = [&](std::span<const Point3> x) {
    for (std::size_t k = 0; k < nm; ++k) work.pos[movers[k]] = x[k];
  };
  auto raw_gradients = [&](std::span<const Point3> x) {
    load(x);
    dm.update(work);
    dm.density_force(work, force);
    last_energy = dm.energy(work);
    if (!cfg.density_only) last_wa = wa.gradient(work, gamma, beta, gw);
  };
  auto grad_fn = [&](std::span<const Point3> x, std::span<Point3> g) {
    raw_gradients(x);
    const double l = cfg.density_only ? 1.0 : lambda;
    for (std::size_t k = 0; k < nm; ++k) {
      Point3 v{-l * force[k].x, -l * force[k].y, -l * force[k].z};
      if (!cfg.density_only) {
        const Point3& w = gw[movers[k]];
        v = {v.x + w.x, v.y + w.y, v.z + w.z};
      }
      if (planar) v.z = 0.0;
      g[k] = {v.x / divisor[k], v.y / divisor[k], v.z / divisor[k]};
    }
  };

  std::vector<Point3> x0(nm);
  for (std::size_t k = 0; k < nm; ++k) x0[k] = pl.pos[movers[k]];
  bounds.project(x0);
  load(x0);
  const BinGridSpec& grid = dm.grid();
  double tau = dm.overflow(work);
  gamma = gamma_schedule(tau, grid.bx(), grid.by(), r.tier_depth);

  // lambda_0 balances the wirelength and density gradients.
  raw_gradients(x0);
  res.energy_initial = last_energy;
  if (!cfg.density_only) {
    std::vector<Point3> gwm(nm), gd(nm);
    for (std::size_t k = 0; k < nm; ++k) {
      gwm[k] = gw[movers[k]];
      gd[k] = force[k];
      if (planar) gwm[k].z = gd[k].z = 0.0;
    }
    lambda = initial_lambda(gwm, gd);
  }
  refresh_divisor();

  auto record = [&](int it, double alpha) {
    IterRecord rec{cfg.stage, it, hpwl_native(work, nl, r), last_wa, last_energy, cfg.density_only ? 0.0 : lambda,
                   gamma.gamma_x, tau, alpha};
    res.records.push_back(rec);
    if (cfg.observer) cfg.observer(rec);
  };
  record(0, 0.0);
  res.tau = tau;
  if (tau <= cfg.tau_stop) {
    res.energy_final = last_energy;
    return res;
  }

  NesterovSolver solver(grad_fn, bounds);
  const double max_move = std::min(grid.bx(), grid.by());
  solver.reset(x0, 0.0, max_move);
  double prev_wl = weighted_hpwl(work, nl, beta);
  std::vector<Point3> last_good = x0;
  int it = 0;
  double best_tau = tau;
  int best_it = 0;
  while (it < cfg.max_iters) {
    try {
      solver.step();
    } catch (const DivergenceError& e) {
      if (++res.restarts > cfg.max_restarts)
        throw DivergenceError(cfg.stage + ": diverged after " + std::to_string(cfg.max_restarts) +
                              " restarts at iteration " + std::to_string(it) + " (" + e.what() + ")");
      const double a = solver.alpha() / 10.0;
      solver.reset(last_good, a);
      continue;
    }
    ++it;
    const auto& v = solver.solution();
    last_good = v;
    load(v);
    tau = dm.overflow(work);
    if (!cfg.density_only) {
      const double wl = weighted_hpwl(work, nl, beta);
      lambda = lambda_update(lambda, wl - prev_wl, cfg.hpwl_ref_fraction * std::max(wl, 1e-12));
      prev_wl = wl;
      gamma = gamma_schedule(tau, grid.bx(), grid.by(), r.tier_depth);
      refresh_divisor();
    }
    record(it, solver.alpha());
    if (tau <= cfg.tau_stop) break;
    if (tau < 0.99 * best_tau) best_tau = tau, best_it = it;
    if (cfg.stall_window > 0 && it - best_it >= cfg.stall_window) {
      res.stalled = true;
      break;
    }
  }
  for (std::size_t k = 0; k < nm; ++k) pl.pos[movers[k]] = solver.solution()[k];
  res.iterations = it;
  res.tau = tau;
  res.energy_final = last_energy;
  return res;
}

}  // namespace ep3d
