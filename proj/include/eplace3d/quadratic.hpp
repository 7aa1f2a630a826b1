#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <random>
#include <vector>

#include "eplace3d/model.hpp"

namespace ep3d {

struct QuadraticConfig {
  double tolerance = 1e-8;
  int max_iterations = 2000;
  double regularization = 1e-6;  // relative to the mean diagonal, pulls toward the region center
  double jitter = 1e-3;          // fraction of the region extent when nothing is anchored
  std::uint64_t seed = 1;
};

// Clamps every movable cell center so the cell lies inside the region.
inline void clamp_to_region(const Netlist& nl, const Region3D& r, Placement& pl) {
  for (std::size_t i = 0; i < nl.num_cells(); ++i) {
    const Cell& c = nl.cells[i];
    if (!c.movable) continue;
    Point3& p = pl.pos[i];
    p.x = std::clamp(p.x, 0.5 * std::min(c.width, r.dx), r.dx - 0.5 * std::min(c.width, r.dx));
    p.y = std::clamp(p.y, 0.5 * std::min(c.height, r.dy), r.dy - 0.5 * std::min(c.height, r.dy));
    p.z = std::clamp(p.z, 0.5 * r.tier_depth, r.dz - 0.5 * r.tier_depth);
  }
}

// Minimizes quadratic wirelength in x, y and z independently. Nets of up to
// three pins use a clique with weight 1/(k-1) per pair; larger nets use a
// star with weight k/(k-1) per spoke. Fixed cells anchor the system; fillers
// are ignored.
inline void quadratic_placement(const Netlist& nl, const Region3D& region, Placement& pl,
                                const QuadraticConfig& cfg = {}) {
  const std::size_t n = nl.num_cells();
  std::vector<int> var(n, -1);
  int nv = 0;
  bool anchored = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Cell& c = nl.cells[i];
    if (c.movable && !c.is_filler()) var[i] = nv++;
  }
  for (const Net& net : nl.nets)
    for (const Pin& p : net.pins)
      if (!nl.cells[p.cell].movable) anchored = true;
  if (nv == 0) return;

  if (!anchored) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (var[i] < 0) continue;
      pl.pos[i] = {0.5 * region.dx + cfg.jitter * region.dx * u(rng), 0.5 * region.dy + cfg.jitter * region.dy * u(rng),
                   0.5 * region.dz + cfg.jitter * region.dz * u(rng)};
    }
    clamp_to_region(nl, region, pl);
    return;
  }

  int stars = 0;
  for (const Net& net : nl.nets)
    if (net.pins.size() > 3) ++stars;
  const int dim = nv + stars;

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trip;
  Eigen::VectorXd bx = Eigen::VectorXd::Zero(dim), by = bx, bz = bx;
  struct End {
    int v;        // variable or -1 for a fixed pin
    double ox, oy;  // pin offsets
    Point3 fixed;   // absolute pin position when v < 0
  };
  auto add_edge = [&](const End& a, const End& b, double w) {
    if (a.v < 0 && b.v < 0) return;
    const double rx = a.ox - b.ox, ry = a.oy - b.oy;
    if (a.v >= 0 && b.v >= 0) {
      trip.emplace_back(a.v, a.v, w);
      trip.emplace_back(b.v, b.v, w);
      trip.emplace_back(a.v, b.v, -w);
      trip.emplace_back(b.v, a.v, -w);
      bx[a.v] -= w * rx;
      bx[b.v] += w * rx;
      by[a.v] -= w * ry;
      by[b.v] += w * ry;
      return;
    }
    const End& m = a.v >= 0 ? a : b;
    const End& f = a.v >= 0 ? b : a;
    trip.emplace_back(m.v, m.v, w);
    bx[m.v] += w * (f.fixed.x + f.ox - m.ox);
    by[m.v] += w * (f.fixed.y + f.oy - m.oy);
    bz[m.v] += w * f.fixed.z;
  };

  int star = nv;
  std::vector<End> ends;
  for (const Net& net : nl.nets) {
    const std::size_t k = net.pins.size();
    if (k < 2 || net.weight <= 0.0) {
      if (k > 3) ++star;
      continue;
    }
    ends.clear();
    for (const Pin& p : net.pins) {
      const int v = var[p.cell];
      if (v < 0 && nl.cells[p.cell].movable) continue;  // a filler pin is not expected
      ends.push_back({v, p.dx, p.dy, v < 0 ? pl.pos[p.cell] : Point3{}});
    }
    if (ends.size() < 2) {
      if (k > 3) ++star;
      continue;
    }
    if (k <= 3) {
      const double w = net.weight / (ends.size() - 1.0);
      for (std::size_t a = 0; a < ends.size(); ++a)
        for (std::size_t b = a + 1; b < ends.size(); ++b) add_edge(ends[a], ends[b], w);
    } else {
      const double w = net.weight * ends.size() / (ends.size() - 1.0);
      const End hub{star, 0.0, 0.0, {}};
      for (const End& e : ends) add_edge(e, hub, w);
      ++star;
    }
  }

  double mean_diag = 0.0;
  for (const Triplet& t : trip)
    if (t.row() == t.col()) mean_diag += t.value();
  mean_diag = mean_diag > 0.0 ? mean_diag / dim : 1.0;
  const double eps = cfg.regularization * mean_diag;
  for (int i = 0; i < dim; ++i) {
    trip.emplace_back(i, i, eps);
    bx[i] += eps * 0.5 * region.dx;
    by[i] += eps * 0.5 * region.dy;
    bz[i] += eps * 0.5 * region.dz;
  }
  Eigen::SparseMatrix<double> A(dim, dim);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(cfg.tolerance);
  cg.setMaxIterations(cfg.max_iterations);
  cg.compute(A);
  auto solve_axis = [&](const Eigen::VectorXd& b, double Point3::*field) {
    Eigen::VectorXd guess(dim);
    for (std::size_t i = 0; i < n; ++i)
      if (var[i] >= 0) guess[var[i]] = pl.pos[i].*field;
    for (int s = nv; s < dim; ++s) guess[s] = 0.5;
    const Eigen::VectorXd x = cg.solveWithGuess(b, guess);
    for (std::size_t i = 0; i < n; ++i)
      if (var[i] >= 0) pl.pos[i].*field = x[var[i]];
  };
  solve_axis(bx, &Point3::x);
  solve_axis(by, &Point3::y);
  solve_axis(bz, &Point3::z);
  clamp_to_region(nl, region, pl);
}

}  // namespace ep3d
