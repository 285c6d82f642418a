// apsynth: command-line front end for layouts, simulation, reconstruction,
// metrics and dataset construction.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "apsynth/aperture.hpp"
#include "apsynth/dataset.hpp"
#include "apsynth/forward.hpp"
#include "apsynth/metrics.hpp"
#include "apsynth/parallel.hpp"
#include "apsynth/raster_io.hpp"
#include "apsynth/retrieval.hpp"

namespace fs = std::filesystem;
using namespace apsynth;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  bool json = false;
};

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

void emit(const Globals& g, const Json& doc, const std::string& text) {
  if (g.json) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

void require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw InvalidArgument(std::string(what) + " needs --out");
}

// --- layout ------------------------------------------------------------------

struct LayoutArgs {
  std::string strategy = "1";
  int k = 6;
  int base = 4;
  int size = 512;
  int diameter = 128;
  int count = 100;
  double overlap = 0.61;
};

int run_layout(const Globals& g, const LayoutArgs& a) {
  SnapshotSchedule schedule;
  if (a.strategy == "fp") {
    schedule = single_snapshot(build_fp_grid(a.size, a.diameter, a.count, a.overlap));
  } else if (a.strategy == "schedule") {
    if (a.k < 1) throw InvalidArgument("--k must be at least 1");
    schedule = build_snapshot_schedule(build_strategy(a.base, a.size, g.seed), a.k, g.seed);
  } else {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(a.strategy, &used);
      if (used != a.strategy.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("--strategy must be 1..10, fp or schedule");
    }
    schedule = single_snapshot(build_strategy(id, a.size, g.seed));
  }
  if (!g.out.empty()) {
    const fs::path dir(g.out);
    fs::create_directories(dir);
    save_schedule(schedule, dir / "layout.json");
    save_png(render_coverage(schedule), dir / "coverage.png", 8);
  }
  const auto curve = coverage_curve(schedule);
  const std::size_t per_snapshot = schedule.base.apertures.size();
  const std::int64_t pixels = measured_pixels(schedule);

  Json doc;
  doc["layout"] = layout_label(schedule.base);
  doc["field_size"] = schedule.base.field_size;
  doc["apertures"] = per_snapshot;
  doc["snapshots"] = schedule.k();
  doc["measured_pixels"] = pixels;
  doc["coverage"] = curve.back();
  doc["coverage_curve"] = curve;
  std::ostringstream os;
  os << "layout: " << layout_label(schedule.base) << "\n";
  os << "apertures: " << per_snapshot << "\n";
  os << "snapshots: " << schedule.k() << "\n";
  os << "measured pixels: " << pixels << "\n";
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    os << "coverage after " << i + 1 << " snapshot" << (i ? "s" : "") << ": " << percent(curve[i])
       << "\n";
  }
  os << "coverage: " << percent(curve.back()) << "\n";
  emit(g, doc, os.str());
  return 0;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string layout;
  std::string object;
  std::optional<double> photons;
  std::string budget = "per";
  std::string object_id;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  require_out(g, "simulate");
  const SnapshotSchedule schedule = load_schedule(a.layout);
  const IntensityImage object = load_png(a.object);
  std::optional<PhotonModel> photons;
  if (a.photons) photons = PhotonModel{*a.photons, parse_budget(a.budget), g.seed};
  const std::string id = a.object_id.empty() ? fs::path(a.object).stem().string() : a.object_id;
  const MeasurementStack stack = simulate(object, schedule, photons, {id, resolve_threads(g.threads)});
  save_stack(stack, g.out);
  Json doc{{"stack", g.out},
           {"entries", stack.entries.size()},
           {"photon_scale", stack.photon_scale},
           {"noise_free", !photons.has_value()}};
  std::ostringstream os;
  os << "wrote " << stack.entries.size() << " measurements to " << g.out << "\n";
  os << (photons ? "photon scale: " + format_number(stack.photon_scale) : std::string("noise-free"))
     << "\n";
  emit(g, doc, os.str());
  return 0;
}

// --- reconstruct -------------------------------------------------------------

struct ReconstructArgs {
  std::string stack;
  std::string init;
  std::string init_mode = "brightfield_upsample";
  std::string order = "by_diameter_desc";
  std::string truth;
  int sweeps = 200;
  double tol = 1e-6;
  bool no_clamp = false;
  bool spectrum = false;
};

int run_reconstruct(const Globals& g, const ReconstructArgs& a) {
  require_out(g, "reconstruct");
  const MeasurementStack stack = load_stack(a.stack);
  APConfig cfg;
  cfg.max_sweeps = a.sweeps;
  cfg.tol = a.tol;
  cfg.sweep_order = parse_sweep_order(a.order);
  cfg.init = parse_init_mode(a.init_mode);
  cfg.clamp_nonnegative_object = !a.no_clamp;
  cfg.seed = g.seed;
  std::optional<IntensityImage> init;
  if (!a.init.empty()) init = load_png(a.init);
  std::optional<IntensityImage> truth;
  if (!a.truth.empty()) truth = load_png(a.truth);

  const ReconResult r = ap_reconstruct(stack, cfg, init);
  save_recon(r, g.out, a.spectrum);

  Json doc{{"out", g.out},
           {"sweeps_run", r.sweeps_run},
           {"converged", r.converged},
           {"final_misfit", r.residual_log.back()}};
  std::ostringstream os;
  os << "sweeps: " << r.sweeps_run << (r.converged ? " (converged)" : "") << "\n";
  os << "final misfit: " << format_number(r.residual_log.back()) << "\n";
  if (truth) {
    const MetricsReport m = compare(r.estimate.pixels, truth->pixels, "estimate");
    doc["metrics"] = m.to_json();
    os << "psnr: " << format_psnr(m.psnr) << " dB\n";
    os << "ssim: " << format_number(m.ssim) << "\n";
  }
  emit(g, doc, os.str());
  return 0;
}

// --- metrics -----------------------------------------------------------------

struct MetricsArgs {
  std::string a;
  std::string b;
  std::string report = "json";
};

int run_metrics(const Globals& g, const MetricsArgs& m) {
  if (m.report != "json" && m.report != "csv") throw InvalidArgument("--report must be json or csv");
  std::vector<MetricsReport> rows;
  if (fs::is_directory(m.a) || fs::is_directory(m.b)) {
    if (!fs::is_directory(m.a) || !fs::is_directory(m.b)) {
      throw InvalidArgument("batch mode needs --a and --b to both be directories");
    }
    for (const auto& pa : list_png_sources({fs::path(m.a)})) {
      const fs::path pb = fs::path(m.b) / pa.filename();
      if (!fs::exists(pb)) throw IoError("no counterpart for " + pa.filename().string() + " in " + m.b);
      rows.push_back(compare(load_png(pa).pixels, load_png(pb).pixels, pa.stem().string()));
    }
  } else {
    rows.push_back(compare(load_png(m.a).pixels, load_png(m.b).pixels, fs::path(m.a).stem().string()));
  }

  std::string text;
  if (m.report == "csv") {
    text = MetricsReport::csv_header() + "\n";
    for (const auto& r : rows) text += r.csv_row() + "\n";
  } else {
    Json doc;
    if (rows.size() == 1) {
      doc = rows.front().to_json();
    } else {
      doc = Json::array();
      for (const auto& r : rows) doc.push_back(r.to_json());
    }
    text = doc.dump(2) + "\n";
  }
  if (!g.out.empty()) {
    std::ofstream out(g.out, std::ios::trunc);
    if (!out) throw IoError("cannot write " + g.out);
    out << text;
  }
  std::cout << text;
  return 0;
}

// --- dataset -----------------------------------------------------------------

struct DatasetArgs {
  std::vector<std::string> sources;
  std::string preset = "desk";
  std::string counts;
  std::string layout;
  std::optional<double> photons;
  std::string budget = "per";
  std::string regenerate;
  std::optional<int> patch_size;
};

int run_dataset(const Globals& g, const DatasetArgs& a) {
  require_out(g, "dataset");
  Json manifest;
  if (!a.regenerate.empty()) {
    manifest = regenerate_dataset(a.regenerate, g.out, g.threads);
  } else {
    DatasetConfig cfg = DatasetConfig::preset_defaults(parse_preset(a.preset));
    cfg.seed = g.seed;
    cfg.source_dirs = a.sources;
    if (!a.counts.empty()) cfg.counts = parse_counts(a.counts);
    if (a.patch_size) cfg.patch_size = *a.patch_size;
    if (!a.layout.empty()) {
      cfg.layout = load_schedule(a.layout);
    } else if (cfg.preset != DatasetPreset::slm && a.patch_size) {
      cfg.layout = single_snapshot(build_strategy(4, cfg.patch_size, 0));
    }
    if (a.photons) cfg.photons = PhotonModel{*a.photons, parse_budget(a.budget), g.seed};
    for (const auto& s : cfg.source_dirs) {
      if (!fs::is_directory(s)) throw IoError("source directory not found: " + s);
    }
    manifest = build_dataset(cfg, g.out, g.threads);
  }
  const Json& c = manifest.at("counts");
  Json doc{{"out", g.out}, {"preset", manifest.at("preset")}, {"counts", c}};
  std::ostringstream os;
  os << "dataset " << manifest.at("name").get<std::string>() << " ("
     << manifest.at("preset").get<std::string>() << ") -> " << g.out << "\n";
  os << "train " << c.at("train") << ", val " << c.at("val") << ", test " << c.at("test") << "\n";
  emit(g, doc, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aperture-synthesis simulation and phase-retrieval toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads,
                 "Worker threads (default: APSYNTH_THREADS, else all cores)");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--json", g.json, "Print machine-readable JSON");

  LayoutArgs la;
  auto* layout = app.add_subcommand("layout", "Build an aperture layout and report coverage");
  layout->add_option("--strategy", la.strategy, "1..10, fp or schedule")->capture_default_str();
  layout->add_option("--k", la.k, "Snapshots for --strategy schedule")->capture_default_str();
  layout->add_option("--base", la.base, "Base strategy for --strategy schedule")
      ->check(CLI::Range(1, 10))->capture_default_str();
  layout->add_option("--size", la.size, "Field size N")->capture_default_str();
  layout->add_option("--diameter", la.diameter, "FP grid aperture diameter")->capture_default_str();
  layout->add_option("--count", la.count, "FP grid aperture count")->capture_default_str();
  layout->add_option("--overlap", la.overlap, "FP grid area overlap")->capture_default_str();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate a measurement stack");
  sim->add_option("--layout", sa.layout, "Layout JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--object", sa.object, "Object PNG")->required()->check(CLI::ExistingFile);
  sim->add_option("--photons", sa.photons, "Expected bright-field photons per pixel (omit: noise-free)");
  sim->add_option("--budget", sa.budget, "per or shared")->capture_default_str();
  sim->add_option("--object-id", sa.object_id, "Identifier stored in the manifest");

  ReconstructArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "Alternating-projection reconstruction");
  rec->add_option("--stack", ra.stack, "Stack directory")->required();
  rec->add_option("--init", ra.init, "Initial object PNG (e.g. a network prediction)")
      ->check(CLI::ExistingFile);
  rec->add_option("--init-mode", ra.init_mode, "brightfield_upsample, flat or external_image")
      ->capture_default_str();
  rec->add_option("--order", ra.order, "raster, by_diameter_desc or seeded_random")
      ->capture_default_str();
  rec->add_option("--sweeps", ra.sweeps, "Maximum sweeps")->capture_default_str();
  rec->add_option("--tol", ra.tol, "Relative spectrum change for convergence")->capture_default_str();
  rec->add_option("--truth", ra.truth, "Ground-truth PNG for PSNR/SSIM")->check(CLI::ExistingFile);
  rec->add_flag("--no-clamp", ra.no_clamp, "Disable the real nonnegative object projection");
  rec->add_flag("--spectrum", ra.spectrum, "Also write spectrum.cafp");

  MetricsArgs ma;
  auto* met = app.add_subcommand("metrics", "Compare images (or two directories of PNGs)");
  met->add_option("--a", ma.a, "Estimate PNG or directory")->required()->check(CLI::ExistingPath);
  met->add_option("--b", ma.b, "Reference PNG or directory")->required()->check(CLI::ExistingPath);
  met->add_option("--report", ma.report, "json or csv")->capture_default_str();

  DatasetArgs da;
  auto* ds = app.add_subcommand("dataset", "Build a training dataset");
  ds->add_option("--sources", da.sources, "Directories of source PNGs");
  ds->add_option("--preset", da.preset, "desk, sim512 or slm")->capture_default_str();
  ds->add_option("--counts", da.counts, "TRAIN,VAL,TEST");
  ds->add_option("--layout", da.layout, "Layout JSON")->check(CLI::ExistingFile);
  ds->add_option("--patch-size", da.patch_size, "Patch size (overrides the preset)");
  ds->add_option("--photons", da.photons, "Photon count for noisy stacks");
  ds->add_option("--budget", da.budget, "per or shared")->capture_default_str();
  ds->add_option("--regenerate", da.regenerate, "Rebuild from an existing manifest.json")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*layout) return run_layout(g, la);
    if (*sim) return run_simulate(g, sa);
    if (*rec) return run_reconstruct(g, ra);
    if (*met) return run_metrics(g, ma);
    if (*ds) return run_dataset(g, da);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
