#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eplace3d/bookshelf.hpp"
#include "eplace3d/eval.hpp"
#include "eplace3d/flow.hpp"
#include "eplace3d/heatmap.hpp"
#include "eplace3d/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ep3d;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kIllegal = 1, kStageFailed = 2, kBadInput = 3 };

struct PlaceOptions {
  std::string input;
  std::string out;
  int tiers = 0;  // 0 keeps the input's tier count
  double whitespace = 0.10;
  double target_density = 1.0;
  std::optional<double> vi_weight;
  double bin_k = 1.0;
  std::uint64_t seed = 1;
  double tau_stop = 0.10;
  int max_iters = 2000;
  bool snapshots = false;
  int snapshot_grid = 32;
  bool density_only = false;
  std::string precond = "3d";
  int threads = 1;
};

json to_json(const PlaceOptions& o) {
  json j;
  j["input"] = o.input;
  j["tiers"] = o.tiers;
  j["whitespace"] = o.whitespace;
  j["target_density"] = o.target_density;
  j["vi_weight"] = o.vi_weight ? json(*o.vi_weight) : json(nullptr);
  j["bin_k"] = o.bin_k;
  j["seed"] = o.seed;
  j["tau_stop"] = o.tau_stop;
  j["max_iters"] = o.max_iters;
  j["snapshots"] = o.snapshots;
  j["snapshot_grid"] = o.snapshot_grid;
  j["density_only"] = o.density_only;
  j["precond"] = o.precond;
  j["threads"] = o.threads;
  return j;
}

PlaceOptions from_json(const json& j) {
  PlaceOptions o;
  o.input = j.at("input").get<std::string>();
  o.tiers = j.at("tiers").get<int>();
  o.whitespace = j.at("whitespace").get<double>();
  o.target_density = j.at("target_density").get<double>();
  if (!j.at("vi_weight").is_null()) o.vi_weight = j.at("vi_weight").get<double>();
  o.bin_k = j.at("bin_k").get<double>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.tau_stop = j.at("tau_stop").get<double>();
  o.max_iters = j.at("max_iters").get<int>();
  o.snapshots = j.at("snapshots").get<bool>();
  o.snapshot_grid = j.at("snapshot_grid").get<int>();
  o.density_only = j.at("density_only").get<bool>();
  o.precond = j.at("precond").get<std::string>();
  o.threads = j.at("threads").get<int>();
  return o;
}

std::ofstream open_file(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(p, mode);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const json& j) { open_file(p) << j.dump(2) << "\n"; }

// Loads a bundle and optionally spreads it over `tiers` tiers.
BookshelfDesign load_design(const std::string& aux, int tiers, double whitespace) {
  BookshelfDesign d = parse_bookshelf(aux);
  if (tiers > 0 && tiers != d.tiers) {
    if (d.tiers != 1) throw InvalidInput("input already has " + std::to_string(d.tiers) + " tiers");
    d = transform_2d_to_3d(d, {tiers, whitespace});
  }
  return d;
}

void write_iteration(std::ostream& out, const IterRecord& r) {
  out << r.stage << " " << r.iter << " hpwl=" << format_double(r.hpwl) << " wa=" << format_double(r.wa)
      << " energy=" << format_double(r.energy) << " lambda=" << format_double(r.lambda)
      << " gamma=" << format_double(r.gamma) << " tau=" << format_double(r.tau) << " alpha=" << format_double(r.alpha)
      << "\n";
}

json stage_json(const StageReport& s, bool with_time) {
  json j;
  j["name"] = s.name;
  j["hpwl"] = s.hpwl;
  j["vi"] = s.vi;
  j["tau"] = s.tau;
  j["om"] = s.om;
  j["iterations"] = s.iterations;
  if (with_time) j["seconds"] = s.seconds;
  return j;
}

int cmd_place(PlaceOptions o) {
  const fs::path out = o.out;
  fs::create_directories(out);
  if (o.precond != "3d" && o.precond != "2d") throw InvalidInput("--precond must be 3d or 2d");
  Instance inst = to_instance(load_design(o.input, o.tiers, o.whitespace), o.target_density);
  if (o.vi_weight) inst.region.beta.z = *o.vi_weight;

  FlowConfig cfg;
  cfg.tau_stop_3d = cfg.tau_stop_2d = o.tau_stop;
  cfg.bin_k = o.bin_k;
  cfg.seed = o.seed;
  cfg.max_iters = o.max_iters;
  cfg.density_only = o.density_only;
  cfg.precond = o.precond == "2d" ? PrecondMode::Degree2D : PrecondMode::Volume3D;
  cfg.threads = o.threads;

  auto log = open_file(out / "iterations.log");
  cfg.on_iteration = [&](const IterRecord& r) { write_iteration(log, r); };
  int snap = 0;
  if (o.snapshots) {
    cfg.on_stage = [&](const std::string& name, const Instance& cur) {
      const fs::path dir = out / "snapshots";
      const std::string prefix = (snap < 10 ? "0" : "") + std::to_string(snap) + "_" + name;
      ++snap;
      fs::create_directories(dir);
      write_placement_3d(dir / (prefix + ".pl"), cur, cur.placement);
      const Heatmap h = heatmap_of(cur.netlist, cur.region, cur.placement, o.snapshot_grid, cur.region.tiers);
      write_heatmaps(h, dir, prefix + "_");
    };
  }

  json manifest;
  manifest["tool"] = "eplace3d";
  manifest["version"] = kVersion;
  manifest["command"] = "place";
  manifest["output"] = fs::absolute(out).string();
  manifest["options"] = to_json(o);

  FlowResult res;
  int code = kOk;
  std::string failure;
  try {
    res = run_flow(inst, cfg);
  } catch (const StageFailure& e) {
    failure = e.what();
    manifest["failed_stage"] = e.stage();
    code = kStageFailed;
  }
  log.close();

  json stages = json::array(), timed = json::array();
  for (const StageReport& s : res.stages) {
    stages.push_back(stage_json(s, false));
    timed.push_back(stage_json(s, true));
  }
  manifest["stages"] = timed;
  if (code == kStageFailed) {
    manifest["error"] = failure;
    write_json(out / "manifest.json", manifest);
    std::cerr << "eplace3d: stage failed: " << failure << "\n";
    return code;
  }

  Placement final_pl = inst.placement;
  if (!final_pl.has_tiers()) assign_tiers(inst.region, final_pl);
  EvalReport rep = o.density_only ? evaluate(inst.netlist, inst.region, final_pl) : res.final_report;
  write_placement_3d(out / "placement.pl", inst, inst.placement);
  {
    auto t = open_file(out / "report.txt");
    write_report_text(t, rep);
    t << "completed=" << (res.completed ? 1 : 0) << "\n";
  }
  json rj = report_json(rep, inst.netlist);
  rj["completed"] = res.completed;
  rj["stages"] = stages;
  write_json(out / "report.json", rj);
  write_json(out / "manifest.json", manifest);
  std::cout << "hpwl=" << format_double(rep.hpwl) << " vi=" << rep.vi << " tau=" << format_double(rep.tau)
            << " legal=" << (rep.legal ? 1 : 0) << "\n";
  if (!res.completed) return kStageFailed;
  // Density-only runs stop before legalization, so legality is not asked of them.
  return rep.legal || o.density_only ? kOk : kIllegal;
}

int cmd_eval(const std::string& aux, const std::string& pl_path, double rho, int grid, const std::string& out) {
  Instance inst = to_instance(parse_bookshelf(aux), rho);
  const Placement pl = read_placement_3d(pl_path, inst, inst.placement);
  const EvalReport rep = evaluate(inst.netlist, inst.region, pl, grid);
  if (out.empty()) {
    write_report_text(std::cout, rep);
  } else {
    fs::create_directories(out);
    auto t = open_file(fs::path(out) / "report.txt");
    write_report_text(t, rep);
    write_json(fs::path(out) / "report.json", report_json(rep, inst.netlist));
  }
  return rep.legal ? kOk : kIllegal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D-IC electrostatic placement"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // transform
  std::string t_in, t_out, t_name;
  int t_tiers = 4;
  double t_ws = 0.10;
  auto* transform = app.add_subcommand("transform", "Spread a 2D Bookshelf bundle over several tiers");
  transform->add_option("input", t_in, "input .aux file")->required()->check(CLI::ExistingFile);
  transform->add_option("--tiers", t_tiers, "tier count")->check(CLI::PositiveNumber);
  transform->add_option("--whitespace", t_ws, "per-tier whitespace fraction")->check(CLI::Range(0.0, 0.999999));
  transform->add_option("--out", t_out, "output directory")->required();
  transform->add_option("--name", t_name, "bundle name (defaults to the input's)");

  // place
  PlaceOptions po;
  std::string replay;
  double vi_weight = 0.0;
  auto* place = app.add_subcommand("place", "Run the full placement flow");
  place->add_option("input", po.input, "input .aux file")->check(CLI::ExistingFile);
  place->add_option("--out", po.out, "output directory")->envname("EPLACE3D_OUT");
  place->add_option("--tiers", po.tiers, "spread a 2D input over this many tiers")->envname("EPLACE3D_TIERS");
  place->add_option("--whitespace", po.whitespace, "whitespace used with --tiers")
      ->check(CLI::Range(0.0, 0.999999))
      ->envname("EPLACE3D_WHITESPACE");
  place->add_option("--target-density", po.target_density, "target density in (0,1]")
      ->check(CLI::Range(1e-6, 1.0))
      ->envname("EPLACE3D_TARGET_DENSITY");
  auto* viw = place->add_option("--vi-weight", vi_weight, "vertical interconnect weight, replaces the derived one")
                  ->check(CLI::NonNegativeNumber)
                  ->envname("EPLACE3D_VI_WEIGHT");
  place->add_option("--bin-k", po.bin_k, "bin grid constant")->check(CLI::PositiveNumber)->envname("EPLACE3D_BIN_K");
  place->add_option("--seed", po.seed, "random seed")->envname("EPLACE3D_SEED");
  place->add_option("--tau-stop", po.tau_stop, "overflow stopping threshold")
      ->check(CLI::Range(1e-9, 0.999999))
      ->envname("EPLACE3D_TAU_STOP");
  place->add_option("--max-iters", po.max_iters, "iteration cap per global placement")
      ->check(CLI::PositiveNumber)
      ->envname("EPLACE3D_MAX_ITERS");
  place->add_flag("--snapshots", po.snapshots, "write placement and heatmaps after every stage")
      ->envname("EPLACE3D_SNAPSHOTS");
  place->add_option("--snapshot-grid", po.snapshot_grid, "planar heatmap resolution of snapshots")
      ->check(CLI::PositiveNumber);
  place->add_flag("--density-only", po.density_only, "first global placement without wirelength, then stop")
      ->envname("EPLACE3D_DENSITY_ONLY");
  place->add_option("--precond", po.precond, "preconditioner")
      ->check(CLI::IsMember({"3d", "2d"}))
      ->envname("EPLACE3D_PRECOND");
  place->add_option("--threads", po.threads, "worker threads")->check(CLI::PositiveNumber)->envname("EPLACE3D_THREADS");
  place->add_option("--replay", replay, "rerun from a manifest.json")->check(CLI::ExistingFile);

  // eval
  std::string e_aux, e_pl, e_out;
  double e_rho = 1.0;
  int e_grid = 0;
  auto* eval = app.add_subcommand("eval", "Check legality and report metrics of a placement");
  eval->add_option("input", e_aux, "instance .aux file")->required()->check(CLI::ExistingFile);
  eval->add_option("placement", e_pl, "placement .pl file")->required()->check(CLI::ExistingFile);
  eval->add_option("--target-density", e_rho, "target density used for overflow")->check(CLI::Range(1e-6, 1.0));
  eval->add_option("--grid", e_grid, "planar bins per side for overflow (0 = derived)")->check(CLI::NonNegativeNumber);
  eval->add_option("--out", e_out, "write report.txt and report.json here instead of stdout");

  // heatmap
  std::string h_aux, h_pl, h_out;
  int h_grid = 32, h_slices = 0;
  auto* heat = app.add_subcommand("heatmap", "Dump density and field slices of a placement");
  heat->add_option("input", h_aux, "instance .aux file")->required()->check(CLI::ExistingFile);
  heat->add_option("--pl", h_pl, "placement .pl file (defaults to the bundle's)")->check(CLI::ExistingFile);
  heat->add_option("--grid", h_grid, "planar bins per side")->check(CLI::PositiveNumber);
  heat->add_option("--slices", h_slices, "z slices (0 = one per tier)")->check(CLI::NonNegativeNumber);
  heat->add_option("--out", h_out, "output directory")->required();

  // generate
  SyntheticSpec gs;
  std::string g_out, g_name = "synthetic";
  auto* gen = app.add_subcommand("generate", "Write a random 2D synthetic Bookshelf bundle");
  gen->add_option("--cells", gs.cells, "standard cell count")->check(CLI::Range(2, 10000000));
  gen->add_option("--macros", gs.macros, "macro count")->check(CLI::NonNegativeNumber);
  gen->add_option("--pads", gs.pads, "I/O pad count")->check(CLI::NonNegativeNumber);
  gen->add_option("--utilization", gs.utilization, "movable area over core area")->check(CLI::Range(0.01, 0.99));
  gen->add_option("--seed", gs.seed, "random seed");
  gen->add_option("--out", g_out, "output directory")->required();
  gen->add_option("--name", g_name, "bundle name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*transform) {
      const BookshelfDesign in = parse_bookshelf(t_in);
      const BookshelfDesign d = transform_2d_to_3d(in, {t_tiers, t_ws});
      const std::string name = t_name.empty() ? fs::path(t_in).stem().string() : t_name;
      std::cout << write_bookshelf(d, t_out, name).string() << "\n";
      return kOk;
    }
    if (*place) {
      if (!replay.empty()) {
        std::ifstream in(replay);
        const json m = json::parse(in);
        PlaceOptions r = from_json(m.at("options"));
        r.out = po.out.empty() ? m.at("output").get<std::string>() : po.out;
        return cmd_place(r);
      }
      if (po.input.empty()) throw InvalidInput("place needs an input .aux file or --replay");
      if (po.out.empty()) throw InvalidInput("place needs --out");
      po.input = fs::absolute(po.input).string();
      if (viw->count() > 0 || std::getenv("EPLACE3D_VI_WEIGHT")) po.vi_weight = vi_weight;
      return cmd_place(po);
    }
    if (*eval) return cmd_eval(e_aux, e_pl, e_rho, e_grid, e_out);
    if (*heat) {
      Instance inst = to_instance(parse_bookshelf(h_aux));
      const Placement pl = h_pl.empty() ? inst.placement : read_placement_3d(h_pl, inst, inst.placement);
      const Heatmap h = heatmap_of(inst.netlist, inst.region, pl, h_grid, h_slices > 0 ? h_slices : inst.region.tiers);
      for (const fs::path& f : write_heatmaps(h, h_out)) std::cout << f.string() << "\n";
      return kOk;
    }
    if (*gen) {
      std::cout << write_bookshelf(make_synthetic(gs), g_out, g_name).string() << "\n";
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "eplace3d: " << e.what() << "\n";
    return kBadInput;
  }
  return kOk;
}
