#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eplace3d/bookshelf.hpp"
#include "eplace3d/density.hpp"
#include "eplace3d/model.hpp"

namespace ep3d {

// Density and field magnitude on a bin grid, indexed as BinGridSpec::index.
// Density is occupied volume over bin volume before mean removal.
struct Heatmap {
  BinGridSpec grid;
  std::vector<double> density;
  std::vector<double> field;

  double density_at(int x, int y, int z) const { return density[grid.index(x, y, z)]; }
  double field_at(int x, int y, int z) const { return field[grid.index(x, y, z)]; }
};

// Solves the field of an explicit bin density. The mean is removed before
// solving; the stored density is the input as given.
inline Heatmap heatmap_from_density(const BinGridSpec& g, std::vector<double> rho) {
  if (rho.size() != g.size()) throw InvalidInput("density size does not match the grid");
  Heatmap h;
  h.grid = g;
  h.density = rho;
  DensityLayer layer(g);
  layer.rho() = std::move(rho);
  layer.remove_mean();
  layer.solve();
  const auto& ex = layer.field().ex();
  const auto& ey = layer.field().ey();
  const auto& ez = layer.field().ez();
  h.field.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) h.field[i] = std::sqrt(ex[i] * ex[i] + ey[i] * ey[i] + ez[i] * ez[i]);
  return h;
}

// Heatmap of a placement on an m x m x m_z grid over the whole region. Every
// non-terminal cell counts with its volume.
inline Heatmap heatmap_of(const Netlist& nl, const Region3D& r, const Placement& pl, int m, int m_z) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < nl.num_cells(); ++i)
    if (!nl.cells[i].is_terminal()) ids.push_back(i);
  DensityModel dm(r, DensityMode::Volume3D, m, m_z, make_charges(nl, r, ids));
  dm.splat(pl);
  return heatmap_from_density(dm.grid(), dm.layer(0).rho());
}

namespace detail {

inline std::vector<double> slice(const BinGridSpec& g, const std::vector<double>& v, int z) {
  std::vector<double> s(static_cast<std::size_t>(g.nx) * g.ny);
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x) s[static_cast<std::size_t>(y) * g.nx + x] = v[g.index(x, y, z)];
  return s;
}

}  // namespace detail

// One row per y from the top of the die down, one column per x.
inline void write_matrix(std::ostream& out, const BinGridSpec& g, const std::vector<double>& v, int z) {
  const auto s = detail::slice(g, v, z);
  for (int y = g.ny - 1; y >= 0; --y) {
    for (int x = 0; x < g.nx; ++x) out << (x ? " " : "") << format_double(s[static_cast<std::size_t>(y) * g.nx + x]);
    out << "\n";
  }
}

// Binary PGM, white for the largest value in the slice and black for zero.
inline void write_pgm(std::ostream& out, const BinGridSpec& g, const std::vector<double>& v, int z) {
  const auto s = detail::slice(g, v, z);
  const double hi = std::max(*std::max_element(s.begin(), s.end()), 0.0);
  out << "P5\n" << g.nx << " " << g.ny << "\n255\n";
  for (int y = g.ny - 1; y >= 0; --y)
    for (int x = 0; x < g.nx; ++x) {
      const double t = hi > 0.0 ? std::clamp(s[static_cast<std::size_t>(y) * g.nx + x] / hi, 0.0, 1.0) : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
}

// Writes <prefix>density_z<k>.{txt,pgm} and <prefix>field_z<k>.{txt,pgm}
// for every slice. Returns the files written.
inline std::vector<std::filesystem::path> write_heatmaps(const Heatmap& h, const std::filesystem::path& dir,
                                                         const std::string& prefix = "") {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  auto emit = [&](const std::string& what, const std::vector<double>& v, int z) {
    const std::string stem = prefix + what + "_z" + std::to_string(z);
    const auto txt = dir / (stem + ".txt"), pgm = dir / (stem + ".pgm");
    std::ofstream t(txt), p(pgm, std::ios::binary);
    if (!t || !p) throw IoError("cannot write heatmap in " + dir.string());
    write_matrix(t, h.grid, v, z);
    write_pgm(p, h.grid, v, z);
    files.push_back(txt);
    files.push_back(pgm);
  };
  for (int z = 0; z < h.grid.nz; ++z) {
    emit("density", h.density, z);
    emit("field", h.field, z);
  }
  return files;
}

}  // namespace ep3d
