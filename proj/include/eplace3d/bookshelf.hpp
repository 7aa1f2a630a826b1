#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "eplace3d/model.hpp"

namespace ep3d {

// Shortest text form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct BookshelfRow {
  double y = 0.0;
  double height = 0.0;
  double x0 = 0.0;
  double site_width = 1.0;
  double site_spacing = 1.0;
  int num_sites = 0;

  double x_end() const { return x0 + num_sites * site_spacing; }
};

// A Bookshelf circuit in the file's native units. center holds cell centers;
// z carries the tier index for 3D bundles.
struct BookshelfDesign {
  std::string name = "design";
  Netlist netlist;
  std::vector<Point3> center;
  std::vector<bool> fixed;
  std::vector<BookshelfRow> rows;
  int tiers = 1;
  bool has_tier_column = false;
  double xl = 0.0, yl = 0.0, xh = 0.0, yh = 0.0;

  double width() const { return xh - xl; }
  double height() const { return yh - yl; }
  double row_height() const { return rows.empty() ? 0.0 : rows.front().height; }
};

namespace detail {

struct LineReader {
  std::ifstream in;
  std::string file;
  std::size_t line_no = 0;

  explicit LineReader(const std::filesystem::path& p) : in(p), file(p.string()) {
    if (!in) throw IoError("cannot open " + file);
  }

  // Next non-empty, non-comment line split into tokens; ':' is its own token.
  bool next(std::vector<std::string>& tok, std::string* comment = nullptr) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) {
        if (comment) *comment += line.substr(hash + 1) + "\n";
        line.erase(hash);
      }
      tok.clear();
      std::string cur;
      for (char ch : line) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
          if (!cur.empty()) tok.push_back(std::move(cur)), cur.clear();
        } else if (ch == ':') {
          if (!cur.empty()) tok.push_back(std::move(cur)), cur.clear();
          tok.emplace_back(":");
        } else {
          cur += ch;
        }
      }
      if (!cur.empty()) tok.push_back(std::move(cur));
      if (!tok.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(file, line_no, msg); }

  double number(const std::string& s) const {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("expected a number, got '" + s + "'");
    return v;
  }
};

inline bool is_header(const std::vector<std::string>& t) { return !t.empty() && t[0] == "UCLA"; }

// Reads a "Key : value" line if the first token is key.
inline bool keyed(const std::vector<std::string>& t, const std::string& key) {
  return t.size() >= 3 && t[0] == key && t[1] == ":";
}

// Values from a "# key : a b c" header comment.
inline std::vector<std::string> comment_field(const std::string& comments, const std::string& key) {
  std::istringstream in(comments);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string k, colon;
    if (!(ls >> k >> colon) || k != key || colon != ":") continue;
    std::vector<std::string> out;
    for (std::string v; ls >> v;) out.push_back(v);
    return out;
  }
  return {};
}

}  // namespace detail

struct BookshelfFiles {
  std::filesystem::path nodes, nets, wts, pl, scl;
};

inline BookshelfFiles read_aux(const std::filesystem::path& aux) {
  detail::LineReader r(aux);
  std::vector<std::string> t;
  BookshelfFiles f;
  const auto dir = aux.parent_path();
  while (r.next(t)) {
    for (const std::string& s : t) {
      const auto ext = std::filesystem::path(s).extension().string();
      if (ext == ".nodes") f.nodes = dir / s;
      else if (ext == ".nets") f.nets = dir / s;
      else if (ext == ".wts") f.wts = dir / s;
      else if (ext == ".pl") f.pl = dir / s;
      else if (ext == ".scl") f.scl = dir / s;
    }
  }
  if (f.nodes.empty() || f.nets.empty() || f.pl.empty() || f.scl.empty())
    throw ParseError(aux.string(), r.line_no, "aux file must list .nodes, .nets, .pl and .scl");
  return f;
}

inline BookshelfDesign parse_bookshelf(const std::filesystem::path& aux) {
  const BookshelfFiles files = read_aux(aux);
  BookshelfDesign d;
  d.name = aux.stem().string();
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> t;

  {
    detail::LineReader r(files.scl);
    std::string comments;
    while (r.next(t, &comments)) {
      if (detail::is_header(t) || detail::keyed(t, "NumRows") || detail::keyed(t, "Numrows")) continue;
      if (t[0] != "CoreRow") r.fail("expected CoreRow, got '" + t[0] + "'");
      BookshelfRow row;
      while (r.next(t, &comments) && t[0] != "End") {
        if (detail::keyed(t, "Coordinate")) row.y = r.number(t[2]);
        else if (detail::keyed(t, "Height")) row.height = r.number(t[2]);
        else if (detail::keyed(t, "Sitewidth")) row.site_width = r.number(t[2]);
        else if (detail::keyed(t, "Sitespacing")) row.site_spacing = r.number(t[2]);
        else if (detail::keyed(t, "SubrowOrigin")) {
          row.x0 = r.number(t[2]);
          if (t.size() >= 6 && t[3] == "NumSites") row.num_sites = static_cast<int>(r.number(t[5]));
        }
      }
      if (!(row.height > 0.0)) r.fail("row with nonpositive height");
      d.rows.push_back(row);
    }
    if (d.rows.empty()) r.fail("no rows");
    std::sort(d.rows.begin(), d.rows.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
    d.xl = d.rows.front().x0;
    d.xh = d.rows.front().x_end();
    for (const auto& row : d.rows) {
      d.xl = std::min(d.xl, row.x0);
      d.xh = std::max(d.xh, row.x_end());
    }
    d.yl = d.rows.front().y;
    d.yh = d.rows.back().y + d.rows.back().height;
    if (const auto v = detail::comment_field(comments, "tiers"); !v.empty()) d.tiers = std::stoi(v[0]);
    if (const auto v = detail::comment_field(comments, "tier_region"); v.size() == 4) {
      d.xl = r.number(v[0]);
      d.yl = r.number(v[1]);
      d.xh = r.number(v[2]);
      d.yh = r.number(v[3]);
    }
    if (d.tiers < 1) r.fail("tier count must be >= 1");
  }

  {
    detail::LineReader r(files.nodes);
    while (r.next(t)) {
      if (detail::is_header(t) || detail::keyed(t, "NumNodes") || detail::keyed(t, "NumTerminals")) continue;
      if (t.size() < 3) r.fail("node line needs name, width and height");
      Cell c;
      c.name = t[0];
      c.width = r.number(t[1]);
      c.height = r.number(t[2]);
      const bool term = t.size() >= 4 && (t[3] == "terminal" || t[3] == "terminal_NI");
      if (c.width < 0.0 || c.height < 0.0) r.fail("node '" + c.name + "' has negative size");
      if (!term && !(c.width > 0.0 && c.height > 0.0)) r.fail("movable node '" + c.name + "' has zero size");
      if (index.count(c.name)) r.fail("duplicate node '" + c.name + "'");
      if (term) {
        c.movable = false;
        c.kind = (t[3] == "terminal_NI" || c.width * c.height == 0.0) ? CellKind::IO : CellKind::Fixed;
      } else {
        c.kind = c.height > d.row_height() * (1.0 + 1e-9) ? CellKind::Macro : CellKind::StdCell;
      }
      const std::string key = c.name;
      index[key] = d.netlist.add_cell(std::move(c));
    }
  }

  {
    detail::LineReader r(files.nets);
    Net cur;
    std::size_t remaining = 0;
    auto flush = [&] {
      if (remaining != 0) r.fail("net '" + cur.name + "' has fewer pins than declared");
      if (!cur.pins.empty() || !cur.name.empty()) d.netlist.add_net(std::move(cur));
      cur = Net{};
    };
    bool open = false;
    while (r.next(t)) {
      if (detail::is_header(t) || detail::keyed(t, "NumNets") || detail::keyed(t, "NumPins")) continue;
      if (detail::keyed(t, "NetDegree")) {
        if (open) flush();
        open = true;
        remaining = static_cast<std::size_t>(r.number(t[2]));
        cur.name = t.size() >= 4 ? t[3] : "net" + std::to_string(d.netlist.nets.size());
        continue;
      }
      if (!open) r.fail("pin outside a NetDegree block");
      if (remaining == 0) r.fail("net '" + cur.name + "' has more pins than declared");
      const auto it = index.find(t[0]);
      if (it == index.end()) r.fail("pin references undeclared node '" + t[0] + "'");
      Pin p{it->second, 0.0, 0.0};
      const auto colon = std::find(t.begin(), t.end(), std::string(":"));
      if (colon != t.end() && std::distance(colon, t.end()) >= 3) {
        p.dx = r.number(*(colon + 1));
        p.dy = r.number(*(colon + 2));
      }
      cur.pins.push_back(p);
      --remaining;
    }
    if (open) flush();
  }

  if (!files.wts.empty() && std::filesystem::exists(files.wts)) {
    std::unordered_map<std::string, std::size_t> net_index;
    for (std::size_t e = 0; e < d.netlist.nets.size(); ++e) net_index[d.netlist.nets[e].name] = e;
    detail::LineReader r(files.wts);
    while (r.next(t)) {
      if (detail::is_header(t) || t.size() < 2) continue;
      const auto it = net_index.find(t[0]);
      if (it == net_index.end()) continue;
      const double w = r.number(t[1]);
      if (w < 0.0) r.fail("negative net weight");
      d.netlist.nets[it->second].weight = w;
    }
  }

  d.center.assign(d.netlist.num_cells(), {});
  d.fixed.assign(d.netlist.num_cells(), false);
  {
    detail::LineReader r(files.pl);
    std::vector<bool> seen(d.netlist.num_cells(), false);
    while (r.next(t)) {
      if (detail::is_header(t)) continue;
      const auto colon = std::find(t.begin(), t.end(), std::string(":"));
      const auto ncols = static_cast<std::size_t>(std::distance(t.begin(), colon));
      if (ncols != 3 && ncols != 4) r.fail("placement line needs 3 or 4 columns before ':'");
      const auto it = index.find(t[0]);
      if (it == index.end()) r.fail("placement for undeclared node '" + t[0] + "'");
      const Cell& c = d.netlist.cells[it->second];
      double tier = 0.0;
      if (ncols == 4) {
        tier = r.number(t[3]);
        d.has_tier_column = true;
        if (tier < 0 || tier >= d.tiers || tier != std::floor(tier)) r.fail("tier index out of range");
      }
      d.center[it->second] = {r.number(t[1]) + 0.5 * c.width, r.number(t[2]) + 0.5 * c.height, tier};
      for (auto k = colon; k != t.end(); ++k)
        if (*k == "/FIXED" || *k == "/FIXED_NI") d.fixed[it->second] = true;
      seen[it->second] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!d.netlist.cells[i].movable) d.fixed[i] = true;
    }
  }
  return d;
}

struct Transform3DSpec {
  int tiers = 4;
  double whitespace = 0.10;
};

// 2D to 3D benchmark transformation: every tier gets area A / (T (1 - ws))
// with the original aspect ratio, rows are regenerated with the original row
// height, terminals move to the nearest point on the bottom-tier boundary,
// and cell sizes are unchanged.
inline BookshelfDesign transform_2d_to_3d(const BookshelfDesign& in, const Transform3DSpec& spec) {
  if (spec.tiers < 1) throw InvalidInput("tier count must be >= 1");
  if (!(spec.whitespace >= 0.0 && spec.whitespace < 1.0)) throw InvalidInput("whitespace must be in [0, 1)");
  BookshelfDesign out = in;
  out.tiers = spec.tiers;
  out.has_tier_column = true;
  if (spec.tiers == 1 && spec.whitespace == 0.0) return out;

  const double w = in.width(), h = in.height();
  const double area = w * h / (spec.tiers * (1.0 - spec.whitespace));
  const double aspect = w / h;
  const double nw = std::sqrt(area * aspect), nh = area / nw;
  const double rh = in.row_height();
  const int nrows = static_cast<int>(std::floor(nh / rh + 1e-9));

  for (std::size_t i = 0; i < in.netlist.num_cells(); ++i) {
    const Cell& c = in.netlist.cells[i];
    if (!c.movable) continue;
    const double need_h = std::ceil(c.height / rh - 1e-9) * rh;
    if (c.width > nw * (1.0 + 1e-12) || need_h > nrows * rh * (1.0 + 1e-12)) {
      const double req_area = std::max(c.width * c.width / aspect, need_h * need_h * aspect);
      const double req_ws = 1.0 - w * h / (spec.tiers * req_area);
      throw InfeasibleTransform(c.name, req_ws);
    }
  }

  out.xh = in.xl + nw;
  out.yh = in.yl + nh;
  out.rows.clear();
  const BookshelfRow proto = in.rows.front();
  for (int r = 0; r < nrows; ++r) {
    BookshelfRow row = proto;
    row.y = in.yl + r * rh;
    row.x0 = in.xl;
    row.num_sites = static_cast<int>(std::floor(nw / proto.site_spacing + 1e-9));
    out.rows.push_back(row);
  }
  const double fx = nw / w, fy = nh / h;
  for (std::size_t i = 0; i < in.netlist.num_cells(); ++i) {
    const Cell& c = in.netlist.cells[i];
    Point3 p{in.xl + (in.center[i].x - in.xl) * fx, in.yl + (in.center[i].y - in.yl) * fy, 0.0};
    if (c.movable) {
      p.x = std::clamp(p.x, out.xl + 0.5 * c.width, out.xh - 0.5 * c.width);
      p.y = std::clamp(p.y, out.yl + 0.5 * c.height, out.yh - 0.5 * c.height);
    } else {
      p.x = std::clamp(p.x, out.xl, out.xh);
      p.y = std::clamp(p.y, out.yl, out.yh);
      const double dl = p.x - out.xl, dr = out.xh - p.x, db = p.y - out.yl, dt = out.yh - p.y;
      const double m = std::min({dl, dr, db, dt});
      if (m == dl) p.x = out.xl;
      else if (m == dr) p.x = out.xh;
      else if (m == db) p.y = out.yl;
      else p.y = out.yh;
    }
    out.center[i] = p;
  }
  return out;
}

// Engine instance in normalized units. Row geometry assumes contiguous rows
// spanning the full region width starting at yl.
inline Instance to_instance(const BookshelfDesign& d, double rho_t = 1.0) {
  Instance inst;
  inst.region = normalize_region(d.width(), d.height(), d.tiers, d.xl, d.yl);
  Region3D& r = inst.region;
  r.rho_t = rho_t;
  r.rows.height = d.row_height() / d.height();
  r.rows.count = static_cast<int>(d.rows.size());
  r.rows.site_width = d.rows.empty() ? 0.0 : d.rows.front().site_spacing / d.width();
  if (!d.rows.empty()) r.beta.z = compute_vi_weight(d.tiers, r.rows.count);
  inst.netlist = d.netlist;
  for (Cell& c : inst.netlist.cells) {
    c.width /= d.width();
    c.height /= d.height();
  }
  for (Net& n : inst.netlist.nets)
    for (Pin& p : n.pins) {
      p.dx /= d.width();
      p.dy /= d.height();
    }
  inst.netlist.invalidate();
  inst.placement.pos.resize(d.netlist.num_cells());
  for (std::size_t i = 0; i < d.netlist.num_cells(); ++i) {
    const Point3 n = normalize(r, {d.center[i].x, d.center[i].y, 0.0});
    const int tier = std::clamp(static_cast<int>(d.center[i].z), 0, d.tiers - 1);
    inst.placement.pos[i] = {n.x, n.y, r.tier_center(tier)};
  }
  return inst;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

inline void write_pl_header(std::ostream& out, const Region3D& r) {
  out << "UCLA pl 1.0\n";
  out << "# tiers : " << r.tiers << "\n";
  out << "# scale : " << format_double(r.scale.origin_x) << " " << format_double(r.scale.origin_y) << " "
      << format_double(r.scale.sx) << " " << format_double(r.scale.sy) << "\n\n";
}

}  // namespace detail

// Writes a complete bundle <dir>/<name>.{aux,nodes,nets,wts,pl,scl}.
// Bundles with more than one tier carry the tier count and exact tier region
// as header comments in the .scl and a tier column in the .pl.
inline std::filesystem::path write_bookshelf(const BookshelfDesign& d, const std::filesystem::path& dir,
                                             const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto base = dir / name;
  {
    auto out = detail::open_out(base.string() + ".aux");
    out << "RowBasedPlacement : " << name << ".nodes " << name << ".nets " << name << ".wts " << name << ".pl "
        << name << ".scl\n";
  }
  {
    auto out = detail::open_out(base.string() + ".nodes");
    std::size_t terms = 0, nodes = 0;
    for (const Cell& c : d.netlist.cells) {
      terms += !c.movable;
      nodes += !c.is_filler();
    }
    out << "UCLA nodes 1.0\n\nNumNodes : " << nodes << "\nNumTerminals : " << terms << "\n";
    for (const Cell& c : d.netlist.cells) {
      if (c.is_filler()) continue;
      out << c.name << " " << format_double(c.width) << " " << format_double(c.height);
      if (!c.movable) out << (c.kind == CellKind::IO && c.width * c.height > 0 ? " terminal_NI" : " terminal");
      out << "\n";
    }
  }
  {
    auto out = detail::open_out(base.string() + ".nets");
    std::size_t pins = 0;
    for (const Net& n : d.netlist.nets) pins += n.pins.size();
    out << "UCLA nets 1.0\n\nNumNets : " << d.netlist.num_nets() << "\nNumPins : " << pins << "\n";
    for (const Net& n : d.netlist.nets) {
      out << "NetDegree : " << n.pins.size() << " " << n.name << "\n";
      for (const Pin& p : n.pins)
        out << "  " << d.netlist.cells[p.cell].name << " B : " << format_double(p.dx) << " " << format_double(p.dy)
            << "\n";
    }
  }
  {
    auto out = detail::open_out(base.string() + ".wts");
    out << "UCLA wts 1.0\n\n";
    for (const Net& n : d.netlist.nets) out << n.name << " " << format_double(n.weight) << "\n";
  }
  {
    auto out = detail::open_out(base.string() + ".pl");
    out << "UCLA pl 1.0\n";
    if (d.tiers > 1 || d.has_tier_column) out << "# tiers : " << d.tiers << "\n";
    out << "\n";
    for (std::size_t i = 0; i < d.netlist.num_cells(); ++i) {
      const Cell& c = d.netlist.cells[i];
      if (c.is_filler()) continue;
      out << c.name << " " << format_double(d.center[i].x - 0.5 * c.width) << " "
          << format_double(d.center[i].y - 0.5 * c.height);
      if (d.tiers > 1 || d.has_tier_column) out << " " << static_cast<int>(d.center[i].z);
      out << " : N";
      if (d.fixed[i]) out << " /FIXED";
      out << "\n";
    }
  }
  {
    auto out = detail::open_out(base.string() + ".scl");
    out << "UCLA scl 1.0\n";
    if (d.tiers > 1 || d.has_tier_column) {
      out << "# tiers : " << d.tiers << "\n";
      out << "# tier_region : " << format_double(d.xl) << " " << format_double(d.yl) << " " << format_double(d.xh)
          << " " << format_double(d.yh) << "\n";
    }
    out << "\nNumRows : " << d.rows.size() << "\n\n";
    for (const BookshelfRow& r : d.rows) {
      out << "CoreRow Horizontal\n  Coordinate : " << format_double(r.y) << "\n  Height : " << format_double(r.height)
          << "\n  Sitewidth : " << format_double(r.site_width) << "\n  Sitespacing : " << format_double(r.site_spacing)
          << "\n  Siteorient : 1\n  Sitesymmetry : 1\n  SubrowOrigin : " << format_double(r.x0)
          << " NumSites : " << r.num_sites << "\nEnd\n";
    }
  }
  return base.string() + ".aux";
}

// Writes a placement in native units: "name x y tier : N" with lower-left
// corners. Fillers are omitted.
inline void write_placement_3d(const std::filesystem::path& path, const Instance& inst, const Placement& pl) {
  const Region3D& r = inst.region;
  auto out = detail::open_out(path);
  detail::write_pl_header(out, r);
  for (std::size_t i = 0; i < inst.netlist.num_cells(); ++i) {
    const Cell& c = inst.netlist.cells[i];
    if (c.is_filler()) continue;
    const Point3 p = denormalize(r, pl.pos[i]);
    const int tier = pl.has_tiers() ? pl.tier[i]
                                    : std::clamp(static_cast<int>(std::ceil(pl.pos[i].z / r.tier_depth)) - 1, 0,
                                                 r.tiers - 1);
    out << c.name << " " << format_double(p.x - 0.5 * c.width * r.scale.sx) << " "
        << format_double(p.y - 0.5 * c.height * r.scale.sy) << " " << tier << " : N";
    if (!c.movable) out << " /FIXED";
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// Reads a placement written by write_placement_3d (or a legacy 3-column .pl
// when the instance has one tier). Cells absent from the file keep the
// positions in `base`.
inline Placement read_placement_3d(const std::filesystem::path& path, const Instance& inst,
                                   const Placement& base) {
  const Region3D& r = inst.region;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < inst.netlist.num_cells(); ++i) index[inst.netlist.cells[i].name] = i;
  Placement pl = base;
  pl.pos.resize(inst.netlist.num_cells());
  pl.tier.assign(inst.netlist.num_cells(), 0);
  for (std::size_t i = 0; i < pl.pos.size(); ++i)
    pl.tier[i] = std::clamp(static_cast<int>(std::ceil(pl.pos[i].z / r.tier_depth)) - 1, 0, r.tiers - 1);
  detail::LineReader rd(path);
  std::vector<std::string> t;
  std::string comments;
  bool header_checked = false;
  while (rd.next(t, &comments)) {
    if (detail::is_header(t)) continue;
    if (!header_checked) {
      header_checked = true;
      if (const auto v = detail::comment_field(comments, "tiers"); !v.empty() && std::stoi(v[0]) != r.tiers)
        throw FormatError(path.string() + ": file declares " + v[0] + " tiers, instance has " +
                          std::to_string(r.tiers));
    }
    const auto colon = std::find(t.begin(), t.end(), std::string(":"));
    const auto ncols = static_cast<std::size_t>(std::distance(t.begin(), colon));
    const std::string where = path.string() + ":" + std::to_string(rd.line_no) + ": ";
    if (ncols != 3 && ncols != 4) throw FormatError(where + "expected 3 or 4 columns before ':'");
    const auto it = index.find(t[0]);
    if (it == index.end()) throw FormatError(where + "unknown cell '" + t[0] + "'");
    int tier = 0;
    if (ncols == 4) {
      double tv = 0.0;
      try {
        tv = rd.number(t[3]);
      } catch (const ParseError& e) {
        throw FormatError(e.what());
      }
      if (tv != std::floor(tv) || tv < 0 || tv >= r.tiers)
        throw FormatError(where + "tier " + t[3] + " out of range for " + std::to_string(r.tiers) + " tiers");
      tier = static_cast<int>(tv);
    } else if (r.tiers != 1) {
      throw FormatError(where + "3-column placement requires a single-tier instance");
    }
    double x = 0.0, y = 0.0;
    try {
      x = rd.number(t[1]);
      y = rd.number(t[2]);
    } catch (const ParseError& e) {
      throw FormatError(e.what());
    }
    const Cell& c = inst.netlist.cells[it->second];
    const Point3 n = normalize(r, {x + 0.5 * c.width * r.scale.sx, y + 0.5 * c.height * r.scale.sy, 0.0});
    pl.pos[it->second] = {n.x, n.y, r.tier_center(tier)};
    pl.tier[it->second] = tier;
  }
  return pl;
}

}  // namespace ep3d
