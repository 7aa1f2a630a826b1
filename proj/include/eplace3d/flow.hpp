#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "eplace3d/eval.hpp"
#include "eplace3d/legalizer.hpp"
#include "eplace3d/macro_legalizer.hpp"
#include "eplace3d/placer.hpp"
#include "eplace3d/quadratic.hpp"

namespace ep3d {

class StageFailure : public Error {
 public:
  StageFailure(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct FlowConfig {
  double tau_stop_3d = 0.10;
  double tau_stop_2d = 0.10;
  double bin_k = 1.0;
  double tier_capacity = 0.9;  // row utilization cap when resolving overfull tiers
  AnnealConfig anneal;
  std::uint64_t seed = 1;
  int max_iters = 2000;
  double hpwl_ref_fraction = 0.01;
  PrecondMode precond = PrecondMode::Volume3D;
  bool density_only = false;  // the first global placement only, then stop
  int threads = 1;
  bool enable_mgp3d = true;
  bool enable_mgp2d = true;
  bool enable_cgp3d = true;
  bool enable_cgp2d = true;
  bool enable_detail = true;
  std::function<void(const IterRecord&)> on_iteration;
  // Called after each stage with the stage name and the current instance.
  std::function<void(const std::string&, const Instance&)> on_stage;

  void validate() const {
    if (!(tau_stop_3d > 0.0 && tau_stop_3d < 1.0) || !(tau_stop_2d > 0.0 && tau_stop_2d < 1.0))
      throw InvalidInput("overflow thresholds must be in (0,1)");
    if (!(anneal.cooling > 0.0 && anneal.cooling < 1.0)) throw InvalidInput("cooling ratio must be in (0,1)");
    if (!(bin_k > 0.0)) throw InvalidInput("bin constant must be positive");
    if (threads < 1) throw InvalidInput("thread count must be >= 1");
  }
};

struct StageReport {
  std::string name;
  double hpwl = 0.0;  // native, beta-weighted planar
  std::int64_t vi = -1;  // -1 before tiers exist
  double tau = 0.0;
  double om = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

struct FlowResult {
  std::vector<StageReport> stages;
  std::vector<IterRecord> iterations;
  EvalReport final_report;
  bool completed = false;
};

inline std::vector<std::size_t> select_cells(const Netlist& nl, const std::function<bool(const Cell&)>& pred) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < nl.num_cells(); ++i)
    if (pred(nl.cells[i])) ids.push_back(i);
  return ids;
}

inline void assign_tiers(const Region3D& r, Placement& pl, std::span<const std::size_t> ids) {
  if (pl.tier.size() != pl.pos.size()) pl.tier.resize(pl.pos.size(), 0);
  for (std::size_t i : ids) {
    pl.tier[i] = tier_of_z(pl.pos[i].z, r);
    pl.pos[i].z = r.tier_center(pl.tier[i]);
  }
}

// Per-tier planar bin count, the same on every tier.
inline int planar_grid_size(const Instance& inst, double k) {
  const double avg = average_stdcell_volume(inst) / inst.region.tier_depth;
  return size_bin_grid_2d(inst.region.dx * inst.region.dy, avg, inst.region.rho_t, k);
}

// Runs the whole pipeline on `inst` in place. Fillers are removed before
// returning.
inline FlowResult run_flow(Instance& inst, const FlowConfig& cfg) {
  cfg.validate();
  FlowResult res;
  Region3D& r = inst.region;
  Netlist& nl = inst.netlist;
  Placement& pl = inst.placement;
  std::mt19937_64 rng(cfg.seed);
  const bool multi = r.tiers > 1;
  remove_fillers(inst);
  pl.tier.clear();

  auto now = [] { return std::chrono::steady_clock::now(); };
  auto stage = [&](const std::string& name, auto&& body) {
    const auto t0 = now();
    StageReport rep{name};
    try {
      body(rep);
    } catch (const StageFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw StageFailure(name, e.what());
    }
    rep.seconds = std::chrono::duration<double>(now() - t0).count();
    rep.hpwl = hpwl_native(pl, nl, r);
    if (pl.has_tiers()) rep.vi = vi_count(pl, nl);
    res.stages.push_back(rep);
    if (cfg.on_stage) cfg.on_stage(name, inst);
  };
  auto gp_config = [&](const std::string& name, double tau_stop) {
    GPConfig g;
    g.stage = name;
    g.tau_stop = tau_stop;
    g.max_iters = cfg.max_iters;
    g.precond = cfg.precond;
    g.density_only = cfg.density_only;
    g.hpwl_ref_fraction = cfg.hpwl_ref_fraction;
    g.threads = cfg.threads;
    g.observer = [&](const IterRecord& rec) {
      res.iterations.push_back(rec);
      if (cfg.on_iteration) cfg.on_iteration(rec);
    };
    return g;
  };
  auto is_placeable = [](const Cell& c) { return is_movable_object(c); };
  auto is_std_or_filler = [](const Cell& c) { return c.movable && (c.kind == CellKind::StdCell || c.is_filler()); };

  // At most the target density, and never below the mean utilization.
  const double tier_cap = [&] {
    double a = 0.0;
    for (const Cell& c : nl.cells)
      if (is_movable_object(c) && !c.is_filler()) a += c.width * c.height;
    const double rows = r.rows.count > 0 ? r.rows.count * r.rows.height * r.dx : r.dx * r.dy;
    return std::max(std::min(cfg.tier_capacity, r.rho_t), a / (r.tiers * rows) * 1.02);
  }();
  const BinGridSpec g3 = size_bin_grid(r, average_stdcell_volume(inst), r.rho_t, cfg.bin_k);
  const int m2 = planar_grid_size(inst, cfg.bin_k);

  stage("initial_placement", [&](StageReport&) {
    QuadraticConfig q;
    q.seed = cfg.seed;
    quadratic_placement(nl, r, pl, q);
    insert_fillers(inst, rng);
  });

  if (multi && cfg.enable_mgp3d) {
    stage("mgp3d", [&](StageReport& rep) {
      const auto movers = select_cells(nl, is_placeable);
      GPResult g = global_place(inst, pl, movers, {}, DensityMode::Volume3D, g3.nx, g3.nz,
                                gp_config("mgp3d", cfg.tau_stop_3d));
      rep.tau = g.tau;
      rep.iterations = g.iterations;
    });
  }
  if (cfg.density_only) {
    if (!multi) {
      stage("mgp2d", [&](StageReport& rep) {
        pl.tier.assign(pl.pos.size(), 0);
        const auto movers = select_cells(nl, is_placeable);
        GPResult g = global_place(inst, pl, movers, {}, DensityMode::PerTier2D, m2, 1,
                                  gp_config("mgp2d", cfg.tau_stop_2d));
        rep.tau = g.tau;
        rep.iterations = g.iterations;
      });
    }
    remove_fillers(inst);
    res.completed = true;
    return res;
  }

  stage("tier_assignment", [&](StageReport&) {
    std::vector<double> z(pl.pos.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = pl.pos[i].z;
    assign_tiers(r, pl);
    rebalance_tiers(nl, r, z, pl, tier_cap);
    topup_fillers_per_tier(inst, rng);
  });

  if (cfg.enable_mgp2d) {
    stage("mgp2d", [&](StageReport& rep) {
      const auto movers = select_cells(nl, is_placeable);
      GPResult g = global_place(inst, pl, movers, {}, DensityMode::PerTier2D, m2, 1,
                                gp_config("mgp2d", cfg.tau_stop_2d));
      rep.tau = g.tau;
      rep.iterations = g.iterations;
    });
  }

  const auto macros = macro_indices(nl);
  stage("macro_legalization", [&](StageReport& rep) {
    AnnealConfig a = cfg.anneal;
    a.seed = cfg.seed;
    const AnnealResult ar = legalize_macros_sa(nl, r, pl, a);
    rep.om = ar.overlap_after;
  });

  auto obstacle_area = [&] {
    std::vector<double> area(r.tiers, 0.0);
    for (std::size_t m : macros) area[pl.tier[m]] += nl.cells[m].width * nl.cells[m].height;
    return area;
  };

  if (multi && cfg.enable_cgp3d) {
    stage("cgp3d", [&](StageReport& rep) {
      const auto movers = select_cells(nl, is_std_or_filler);
      GPResult g = global_place(inst, pl, movers, macros, DensityMode::Volume3D, g3.nx, g3.nz,
                                gp_config("cgp3d", cfg.tau_stop_3d));
      rep.tau = g.tau;
      rep.iterations = g.iterations;
    });
    stage("tier_reassignment", [&](StageReport&) {
      std::vector<double> z(pl.pos.size());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = pl.pos[i].z;
      const auto ids = select_cells(nl, is_std_or_filler);
      assign_tiers(r, pl, ids);
      rebalance_tiers(nl, r, z, pl, tier_cap);
      const auto area = obstacle_area();
      topup_fillers_per_tier(inst, rng, area);
    });
  } else if (!macros.empty()) {
    stage("filler_update", [&](StageReport&) {
      const auto area = obstacle_area();
      topup_fillers_per_tier(inst, rng, area);
    });
  }

  if (cfg.enable_cgp2d) {
    stage("cgp2d", [&](StageReport& rep) {
      const auto movers = select_cells(nl, is_std_or_filler);
      GPResult g = global_place(inst, pl, movers, macros, DensityMode::PerTier2D, m2, 1,
                                gp_config("cgp2d", cfg.tau_stop_2d));
      rep.tau = g.tau;
      rep.iterations = g.iterations;
    });
  }

  stage("legalization", [&](StageReport& rep) {
    remove_fillers(inst);
    const auto std_ids = select_cells(nl, [](const Cell& c) { return is_std_object(c); });
    assign_tiers(r, pl, std_ids);
    const std::int64_t vi = vi_count(pl, nl);
    legalize_stdcells(nl, r, pl);
    if (vi_count(pl, nl) != vi) throw LegalizationFailure("vertical interconnect count changed");
    rep.om = macro_overlap(nl, r, pl);
  });
  if (cfg.enable_detail) {
    stage("detailed_placement", [&](StageReport&) {
      const std::int64_t vi = vi_count(pl, nl);
      detail_place(nl, r, pl);
      if (vi_count(pl, nl) != vi) throw LegalizationFailure("vertical interconnect count changed");
    });
  }
  res.final_report = evaluate(nl, r, pl, m2);
  if (!res.stages.empty()) res.stages.back().tau = res.final_report.tau;
  res.completed = true;
  return res;
}

}  // namespace ep3d
