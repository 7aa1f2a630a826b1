#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "eplace3d/model.hpp"

namespace ep3d {

struct SmoothingParams {
  double gamma_x = 1.0;
  double gamma_y = 1.0;
  double gamma_z = 1.0;
};

inline Point3 pin_position(const Placement& pl, const Pin& p) {
  const Point3& c = pl.pos[p.cell];
  return {c.x + p.dx, c.y + p.dy, c.z};
}

struct Spans {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Spans net_spans(const Placement& pl, const Net& net) {
  if (net.pins.empty()) return {};
  double lx = std::numeric_limits<double>::infinity(), hx = -lx;
  double ly = lx, hy = -lx, lz = lx, hz = -lx;
  for (const Pin& p : net.pins) {
    const Point3 q = pin_position(pl, p);
    lx = std::min(lx, q.x);
    hx = std::max(hx, q.x);
    ly = std::min(ly, q.y);
    hy = std::max(hy, q.y);
    lz = std::min(lz, q.z);
    hz = std::max(hz, q.z);
  }
  return {hx - lx, hy - ly, hz - lz};
}

// Net-weighted raw spans summed per dimension.
inline Spans hpwl_components(const Placement& pl, const Netlist& nl) {
  Spans s;
  for (const Net& net : nl.nets) {
    const Spans e = net_spans(pl, net);
    s.x += net.weight * e.x;
    s.y += net.weight * e.y;
    s.z += net.weight * e.z;
  }
  return s;
}

// Planar half-perimeter wirelength; z is reported separately as #VI.
inline double hpwl(const Placement& pl, const Netlist& nl, const Beta& beta) {
  double total = 0.0;
  for (const Net& net : nl.nets) {
    const Spans e = net_spans(pl, net);
    total += net.weight * (beta.x * e.x + beta.y * e.y);
  }
  return total;
}

// Planar HPWL in the design's native units.
inline double hpwl_native(const Placement& pl, const Netlist& nl, const Region3D& r) {
  return hpwl(pl, nl, {r.beta.x * r.scale.sx, r.beta.y * r.scale.sy, 0.0});
}

// HPWL under arbitrary axis weights, z included.
inline double weighted_hpwl(const Placement& pl, const Netlist& nl, const Beta& w) {
  const Spans s = hpwl_components(pl, nl);
  return w.x * s.x + w.y * s.y + w.z * s.z;
}

inline std::int64_t vi_count(const Placement& pl, const Netlist& nl) {
  if (!pl.has_tiers()) throw StateError("vi_count requires tier assignment");
  std::int64_t total = 0;
  for (const Net& net : nl.nets) {
    if (net.pins.empty()) continue;
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (const Pin& p : net.pins) {
      lo = std::min(lo, pl.tier[p.cell]);
      hi = std::max(hi, pl.tier[p.cell]);
    }
    total += hi - lo;
  }
  return total;
}

namespace detail {

// Weighted-average estimate of max(c) - min(c) along one axis, with
// exponentials shifted by the extreme values so nothing overflows.
// When grad is non-null, writes dW/dc_i.
inline double wa_axis(std::span<const double> c, double gamma, double* grad) {
  const std::size_t n = c.size();
  if (n < 2) {
    if (grad)
      for (std::size_t i = 0; i < n; ++i) grad[i] = 0.0;
    return 0.0;
  }
  const auto [mn_it, mx_it] = std::minmax_element(c.begin(), c.end());
  const double mn = *mn_it, mx = *mx_it;
  double sp = 0.0, xp = 0.0, sm = 0.0, xm = 0.0;
  for (double v : c) {
    const double ep = std::exp((v - mx) / gamma);
    const double em = std::exp((mn - v) / gamma);
    sp += ep;
    xp += v * ep;
    sm += em;
    xm += v * em;
  }
  const double mean_p = xp / sp;
  const double mean_m = xm / sm;
  if (grad) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ep = std::exp((c[i] - mx) / gamma);
      const double em = std::exp((mn - c[i]) / gamma);
      grad[i] = ep / sp * (1.0 + (c[i] - mean_p) / gamma) -
                em / sm * (1.0 - (c[i] - mean_m) / gamma);
    }
  }
  return mean_p - mean_m;
}

}  // namespace detail

// Weighted-average smooth wirelength and its gradient. A dimension whose
// beta weight is zero is skipped entirely (used when z is frozen).
//
// Evaluation is split per net into a per-pin buffer and then reduced per
// cell in net order, so results are bit-identical for any thread count.
class WAModel {
 public:
  WAModel(const Netlist& nl, int threads = 1) : nl_(&nl), threads_(std::max(1, threads)) {
    offsets_.reserve(nl.nets.size() + 1);
    offsets_.push_back(0);
    for (const Net& n : nl.nets) offsets_.push_back(offsets_.back() + n.pins.size());
    pin_grad_.resize(offsets_.back());
    net_value_.resize(nl.nets.size());
  }

  double value(const Placement& pl, const SmoothingParams& g, const Beta& beta) {
    run(pl, g, beta, false);
    double total = 0.0;
    for (double v : net_value_) total += v;
    return total;
  }

  // grad must have one entry per cell; it is overwritten.
  double gradient(const Placement& pl, const SmoothingParams& g, const Beta& beta,
                  std::span<Point3> grad) {
    run(pl, g, beta, true);
    std::fill(grad.begin(), grad.end(), Point3{});
    double total = 0.0;
    for (std::size_t e = 0; e < nl_->nets.size(); ++e) {
      total += net_value_[e];
      const Net& net = nl_->nets[e];
      for (std::size_t k = 0; k < net.pins.size(); ++k) {
        const Point3& pg = pin_grad_[offsets_[e] + k];
        Point3& cg = grad[net.pins[k].cell];
        cg.x += pg.x;
        cg.y += pg.y;
        cg.z += pg.z;
      }
    }
    return total;
  }

 private:
  void run(const Placement& pl, const SmoothingParams& g, const Beta& beta, bool want_grad) {
    const std::size_t ne = nl_->nets.size();
    auto work = [&](std::size_t lo, std::size_t hi) {
      std::vector<double> cx, gx;
      for (std::size_t e = lo; e < hi; ++e) eval_net(e, pl, g, beta, want_grad, cx, gx);
    };
    if (threads_ == 1 || ne < 2048) {
      work(0, ne);
      return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (ne + threads_ - 1) / threads_;
    for (int t = 0; t < threads_; ++t) {
      const std::size_t lo = std::min(ne, t * chunk), hi = std::min(ne, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  void eval_net(std::size_t e, const Placement& pl, const SmoothingParams& g, const Beta& beta,
                bool want_grad, std::vector<double>& c, std::vector<double>& gr) const {
    const Net& net = nl_->nets[e];
    const std::size_t n = net.pins.size();
    c.resize(n);
    gr.resize(n);
    Point3* out = want_grad ? &pin_grad_[offsets_[e]] : nullptr;
    double total = 0.0;
    auto axis = [&](double w, double gamma, auto coord, double Point3::*field) {
      if (w == 0.0) {
        if (out)
          for (std::size_t k = 0; k < n; ++k) out[k].*field = 0.0;
        return;
      }
      for (std::size_t k = 0; k < n; ++k) c[k] = coord(net.pins[k]);
      total += w * detail::wa_axis(c, gamma, out ? gr.data() : nullptr);
      if (out)
        for (std::size_t k = 0; k < n; ++k) out[k].*field = net.weight * w * gr[k];
    };
    axis(beta.x, g.gamma_x, [&](const Pin& p) { return pl.pos[p.cell].x + p.dx; }, &Point3::x);
    axis(beta.y, g.gamma_y, [&](const Pin& p) { return pl.pos[p.cell].y + p.dy; }, &Point3::y);
    axis(beta.z, g.gamma_z, [&](const Pin& p) { return pl.pos[p.cell].z; }, &Point3::z);
    net_value_[e] = net.weight * total;
  }

  const Netlist* nl_;
  int threads_;
  std::vector<std::size_t> offsets_;
  mutable std::vector<Point3> pin_grad_;
  mutable std::vector<double> net_value_;
};

inline double wa_wirelength(const Placement& pl, const Netlist& nl, const SmoothingParams& g,
                            const Beta& beta) {
  WAModel m(nl);
  return m.value(pl, g, beta);
}

inline std::vector<Point3> wa_gradient(const Placement& pl, const Netlist& nl,
                                       const SmoothingParams& g, const Beta& beta) {
  WAModel m(nl);
  std::vector<Point3> grad(nl.num_cells());
  m.gradient(pl, g, beta, grad);
  return grad;
}

}  // namespace ep3d
