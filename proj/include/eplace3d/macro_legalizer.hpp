#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "eplace3d/error.hpp"
#include "eplace3d/model.hpp"
#include "eplace3d/wirelength.hpp"

namespace ep3d {

struct AnnealConfig {
  double accept_initial = 0.5;  // share of uphill moves accepted at T_init
  double cooling = 0.95;
  int moves_per_macro = 100;
  double final_ratio = 1e-4;
  int prologue_moves = 200;
  double penalty_scale = 10.0;
  int max_retries = 3;
  std::uint64_t seed = 1;
};

struct AnnealResult {
  double overlap_before = 0.0;  // physical volume
  double overlap_after = 0.0;
  double cost_before = 0.0;
  double cost_after = 0.0;
  int attempts = 0;
  long long moves = 0;
  long long accepted = 0;
};

namespace detail {

inline double interval_overlap(double a0, double a1, double b0, double b1) {
  const double d = std::min(a1, b1) - std::max(a0, b0);
  return d > 1e-12 ? d : 0.0;
}

// Box legal area for macros: the rows when present, else the region.
inline double macro_top(const Region3D& r) { return r.rows.count > 0 ? r.rows.count * r.rows.height : r.dy; }

class MacroAnnealer {
 public:
  MacroAnnealer(const Netlist& nl, const Region3D& r, Placement& pl, std::vector<std::size_t> macros)
      : nl_(nl), r_(r), pl_(pl), macros_(std::move(macros)), beta_(r.axis_weights()) {
    const auto& inc = nl.cell_nets();
    std::vector<char> seen(nl.num_nets(), 0);
    local_nets_.resize(macros_.size());
    for (std::size_t k = 0; k < macros_.size(); ++k)
      for (std::size_t e : inc[macros_[k]]) {
        local_nets_[k].push_back(e);
        if (!seen[e]) seen[e] = 1, nets_.push_back(e);
      }
    net_cost_.assign(nl.num_nets(), 0.0);
    for (std::size_t e : nets_) net_cost_[e] = net_wl(e);
    wl_ = 0.0;
    for (std::size_t e : nets_) wl_ += net_cost_[e];
  }

  std::size_t size() const { return macros_.size(); }

  // Snaps a macro to rows, sites and its tier center and clamps it inside.
  void snap(std::size_t k) {
    const Cell& c = nl_.cells[macros_[k]];
    Point3& p = pl_.pos[macros_[k]];
    double left = p.x - 0.5 * c.width, bottom = p.y - 0.5 * c.height;
    const double sw = r_.rows.site_width, rh = r_.rows.height;
    if (sw > 0.0) {
      const double max_left = std::floor((r_.dx - c.width) / sw + 1e-9) * sw;
      left = std::clamp(std::round(left / sw) * sw, 0.0, std::max(max_left, 0.0));
    } else {
      left = std::clamp(left, 0.0, std::max(r_.dx - c.width, 0.0));
    }
    if (rh > 0.0 && r_.rows.count > 0) {
      const int span = static_cast<int>(std::ceil(c.height / rh - 1e-9));
      const int top_row = std::max(r_.rows.count - span, 0);
      bottom = std::clamp(std::round(bottom / rh), 0.0, static_cast<double>(top_row)) * rh;
    } else {
      bottom = std::clamp(bottom, 0.0, std::max(r_.dy - c.height, 0.0));
    }
    p.x = left + 0.5 * c.width;
    p.y = bottom + 0.5 * c.height;
    p.z = r_.tier_center(pl_.tier[macros_[k]]);
  }

  double overlap_area(std::size_t a, std::size_t b) const {
    const std::size_t ia = macros_[a], ib = macros_[b];
    if (pl_.tier[ia] != pl_.tier[ib]) return 0.0;
    const Cell& ca = nl_.cells[ia];
    const Cell& cb = nl_.cells[ib];
    const Point3& pa = pl_.pos[ia];
    const Point3& pb = pl_.pos[ib];
    return interval_overlap(pa.x - 0.5 * ca.width, pa.x + 0.5 * ca.width, pb.x - 0.5 * cb.width,
                            pb.x + 0.5 * cb.width) *
           interval_overlap(pa.y - 0.5 * ca.height, pa.y + 0.5 * ca.height, pb.y - 0.5 * cb.height,
                            pb.y + 0.5 * cb.height);
  }

  double outside_area(std::size_t a) const {
    const Cell& c = nl_.cells[macros_[a]];
    const Point3& p = pl_.pos[macros_[a]];
    const double in = interval_overlap(p.x - 0.5 * c.width, p.x + 0.5 * c.width, 0.0, r_.dx) *
                      interval_overlap(p.y - 0.5 * c.height, p.y + 0.5 * c.height, 0.0, macro_top(r_));
    const double out = c.width * c.height - in;
    return out > 1e-12 * c.width * c.height ? out : 0.0;
  }

  // Overlap involving macro k: its out-of-bounds area plus its overlap with
  // every other macro; `skip` excludes a partner already counted.
  double overlap_of(std::size_t k, std::size_t skip = static_cast<std::size_t>(-1)) const {
    double s = outside_area(k);
    for (std::size_t j = 0; j < macros_.size(); ++j)
      if (j != k && j != skip) s += overlap_area(k, j);
    return s;
  }

  double total_overlap() const {
    double s = 0.0;
    for (std::size_t a = 0; a < macros_.size(); ++a) {
      s += outside_area(a);
      for (std::size_t b = a + 1; b < macros_.size(); ++b) s += overlap_area(a, b);
    }
    return s;
  }

  double wirelength() const { return wl_; }

  // Physical overlap volume: native area times one tier of depth.
  double physical(double area) const { return area * r_.scale.sx * r_.scale.sy * r_.tier_depth * r_.scale.sz; }

  double anneal(const AnnealConfig& cfg, double penalty, std::mt19937_64& rng, AnnealResult& res) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double om = total_overlap();

    struct Saved {
      std::size_t k;
      Point3 p;
      int tier;
    };
    std::vector<Saved> saved;
    std::vector<std::size_t> touched;
    double range_scale = 1.0;

    auto propose = [&](double& dwl, double& dom) {
      saved.clear();
      touched.clear();
      const std::size_t a = static_cast<std::size_t>(u(rng) * macros_.size()) % macros_.size();
      const double kind = u(rng);
      std::size_t b = a;
      if (kind < 0.15 && macros_.size() > 1) {
        b = static_cast<std::size_t>(u(rng) * macros_.size()) % macros_.size();
        if (b == a) b = (a + 1) % macros_.size();
        touched = {a, b};
      } else {
        touched = {a};
      }
      double om_old = 0.0;
      for (std::size_t i = 0; i < touched.size(); ++i)
        om_old += overlap_of(touched[i], i == 1 ? touched[0] : static_cast<std::size_t>(-1));
      for (std::size_t k : touched) saved.push_back({k, pl_.pos[macros_[k]], pl_.tier[macros_[k]]});
      if (touched.size() == 2) {
        std::swap(pl_.pos[macros_[a]], pl_.pos[macros_[b]]);
        std::swap(pl_.tier[macros_[a]], pl_.tier[macros_[b]]);
      } else if (kind < 0.3 && r_.tiers > 1) {
        int& t = pl_.tier[macros_[a]];
        t = t == 0 ? 1 : (t == r_.tiers - 1 ? t - 1 : t + (u(rng) < 0.5 ? -1 : 1));
      } else {
        Point3& p = pl_.pos[macros_[a]];
        const double rx = std::max(range_scale * r_.dx, 2.0 * std::max(r_.rows.site_width, 1e-3));
        const double ry = std::max(range_scale * r_.dy, 1.0 * std::max(r_.rows.height, 1e-3));
        p.x += (2.0 * u(rng) - 1.0) * rx;
        p.y += (2.0 * u(rng) - 1.0) * ry;
      }
      for (std::size_t k : touched) snap(k);
      double om_new = 0.0;
      for (std::size_t i = 0; i < touched.size(); ++i)
        om_new += overlap_of(touched[i], i == 1 ? touched[0] : static_cast<std::size_t>(-1));
      dom = om_new - om_old;
      dwl = 0.0;
      changed_.clear();
      for (std::size_t k : touched)
        for (std::size_t e : local_nets_[k]) changed_.push_back(e);
      std::sort(changed_.begin(), changed_.end());
      changed_.erase(std::unique(changed_.begin(), changed_.end()), changed_.end());
      new_cost_.resize(changed_.size());
      for (std::size_t i = 0; i < changed_.size(); ++i) {
        new_cost_[i] = net_wl(changed_[i]);
        dwl += new_cost_[i] - net_cost_[changed_[i]];
      }
    };
    auto commit = [&] {
      for (std::size_t i = 0; i < changed_.size(); ++i) net_cost_[changed_[i]] = new_cost_[i];
    };
    auto undo = [&] {
      for (auto it = saved.rbegin(); it != saved.rend(); ++it) {
        pl_.pos[macros_[it->k]] = it->p;
        pl_.tier[macros_[it->k]] = it->tier;
      }
    };

    // Prologue: sample uphill moves to calibrate the start temperature.
    double uphill = 0.0;
    int n_up = 0;
    for (int i = 0; i < cfg.prologue_moves; ++i) {
      double dwl, dom;
      propose(dwl, dom);
      const double d = dwl + penalty * dom;
      if (d > 0.0) uphill += d, ++n_up;
      undo();
    }
    const double t_init = n_up > 0 ? -(uphill / n_up) / std::log(cfg.accept_initial) : 1e-12;
    const double t_final = cfg.final_ratio * t_init;
    const long long per_temp = static_cast<long long>(cfg.moves_per_macro) * static_cast<long long>(macros_.size());
    for (double temp = t_init; temp > t_final; temp *= cfg.cooling) {
      range_scale = std::max(temp / t_init, 0.0);
      for (long long m = 0; m < per_temp; ++m) {
        double dwl, dom;
        propose(dwl, dom);
        ++res.moves;
        const double d = dwl + penalty * dom;
        if (d <= 0.0 || u(rng) < std::exp(-d / temp)) {
          commit();
          wl_ += dwl;
          om += dom;
          ++res.accepted;
        } else {
          undo();
        }
      }
    }
    // Greedy zero-temperature sweep to settle residual overlap.
    om = total_overlap();
    range_scale = 0.0;
    for (long long m = 0; m < per_temp * 4 && om > 0.0; ++m) {
      double dwl, dom;
      propose(dwl, dom);
      const double d = dwl + penalty * dom;
      if (dom < 0.0 || (dom <= 0.0 && d < 0.0)) {
        commit();
        wl_ += dwl;
        om += dom;
      } else {
        undo();
      }
    }
    return total_overlap();
  }

  double mean_area() const {
    double s = 0.0;
    for (std::size_t k : macros_) s += nl_.cells[k].width * nl_.cells[k].height;
    return macros_.empty() ? 0.0 : s / macros_.size();
  }

 private:
  double net_wl(std::size_t e) const {
    const Spans s = net_spans(pl_, nl_.nets[e]);
    return nl_.nets[e].weight * (beta_.x * s.x + beta_.y * s.y + beta_.z * s.z);
  }

  const Netlist& nl_;
  const Region3D& r_;
  Placement& pl_;
  std::vector<std::size_t> macros_;
  Beta beta_;
  std::vector<std::vector<std::size_t>> local_nets_;
  std::vector<std::size_t> nets_;
  std::vector<double> net_cost_;
  std::vector<std::size_t> changed_;
  std::vector<double> new_cost_;
  double wl_ = 0.0;
};

}  // namespace detail

inline std::vector<std::size_t> macro_indices(const Netlist& nl) {
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < nl.num_cells(); ++i)
    if (nl.cells[i].is_macro() && nl.cells[i].movable) m.push_back(i);
  return m;
}

// Total macro overlap Om in physical volume: pairwise same-tier overlap plus
// area outside the row region, times the tier depth.
inline double macro_overlap(const Netlist& nl, const Region3D& r, const Placement& pl) {
  Placement copy = pl;
  detail::MacroAnnealer a(nl, r, copy, macro_indices(nl));
  return a.physical(a.total_overlap());
}

// Removes macro overlap by simulated annealing over translate, retier and
// swap moves. Macros end snapped to rows, sites and tier centers; standard
// cells are not touched. When snapping alone leaves no overlap the snapped
// input is returned, so aligned overlap-free input comes back unchanged.
inline AnnealResult legalize_macros_sa(const Netlist& nl, const Region3D& r, Placement& pl,
                                       const AnnealConfig& cfg = {}) {
  AnnealResult res;
  const std::vector<std::size_t> macros = macro_indices(nl);
  if (macros.empty()) return res;
  if (!pl.has_tiers()) throw StateError("macro legalization needs tier assignment");
  detail::MacroAnnealer probe(nl, r, pl, macros);
  res.overlap_before = probe.physical(probe.total_overlap());
  res.cost_before = probe.wirelength();
  Placement snapped = pl;
  {
    detail::MacroAnnealer s(nl, r, snapped, macros);
    for (std::size_t k = 0; k < s.size(); ++k) s.snap(k);
    if (s.total_overlap() <= 0.0) {
      pl = std::move(snapped);
      detail::MacroAnnealer done(nl, r, pl, macros);
      res.cost_after = done.wirelength();
      return res;
    }
  }
  std::mt19937_64 rng(cfg.seed);
  const Placement start = pl;
  const double mean_wl = probe.wirelength() / static_cast<double>(macros.size());
  const double area = probe.mean_area();
  double penalty = cfg.penalty_scale * std::max(mean_wl, 1e-12) / std::max(area, 1e-300);
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    pl = start;
    for (std::size_t k = 0; k < probe.size(); ++k) probe.snap(k);
    detail::MacroAnnealer run(nl, r, pl, macros);
    const double om = run.anneal(cfg, penalty, rng, res);
    res.attempts = attempt + 1;
    res.overlap_after = run.physical(om);
    res.cost_after = run.wirelength();
    if (om <= 0.0) return res;
    penalty *= 2.0;
  }
  throw LegalizationFailure("macro legalization left overlap volume " + std::to_string(res.overlap_after) +
                            " after " + std::to_string(res.attempts) + " attempts");
}

}  // namespace ep3d
