// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "apsynth/aperture.hpp"
#include "apsynth/dataset.hpp"
#include "apsynth/forward.hpp"
#include "apsynth/metrics.hpp"
#include "apsynth/raster_io.hpp"
#include "apsynth/retrieval.hpp"

using namespace apsynth;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sum(const RealGrid& g) {
  double s = 0.0;
  for (double v : g) s += v;
  return s;
}

std::vector<IntensityImage> natural_images() {
  std::vector<IntensityImage> out;
  for (const auto& p : list_png_sources({fs::path(APSYNTH_TEST_DATA) / "natural"})) out.push_back(load_png(p));
  return out;
}

std::map<std::string, std::vector<char>> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::vector<char>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return out;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("apsynth_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 1. Forward-model equivalence.
Outcome ac1() {
  const auto t0 = Clock::now();
  const int n = 128;
  const std::vector<ApertureSpec> positions{
      {0, 0, 32}, {20, -15, 32}, {-33, 10, 32}, {25, 30, 32}, {-10, -40, 32}};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  const auto cfg = SpatialOracleConfig::for_field(n);
  for (int obj = 0; obj < 10; ++obj) {
    ComplexField f(n, n);
    for (auto& z : f) z = {g(rng), g(rng)};
    for (const auto& ap : positions) {
      const auto a = measure_spatial(f, ap, cfg).pixels;
      const auto b = measure_fullres(f, ap).pixels;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
        den += b.data()[i] * b.data()[i];
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && secs < 60.0,
          fmt("forward-model equivalence: max rel err %.2e over 50 cases, %.1f s", worst, secs)};
}

// 2. Energy conservation.
Outcome ac2() {
  const int n = 512;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ComplexField obj(n, n);
  for (auto& z : obj) z = u(rng);
  double worst = 0.0;
  const auto layout = build_strategy(4, n, 0);
  for (const auto& ap : layout.apertures) {
    const double a = sum(measure_decimated(obj, ap).pixels);
    const double b = sum(measure_fullres(obj, ap).pixels);
    worst = std::max(worst, std::abs(a - b) / b);
  }
  return {worst <= 1e-10, fmt("energy conservation: max rel diff %.2e over %zu strategy-4 apertures", worst,
                              layout.apertures.size())};
}

// 3. Measured-pixel accounting.
Outcome ac3() {
  const std::map<int, std::int64_t> expect{{1, 147456}, {2, 147456}, {3, 147456}, {4, 147456},
                                           {5, 147456}, {6, 147456}, {7, 118784}, {8, 148480},
                                           {9, 145408}, {10, 147456}};
  bool ok = true;
  std::string got;
  for (const auto& [id, px] : expect) {
    const auto m = measured_pixels(build_strategy(id, 512, 0));
    ok = ok && m == px;
    got += fmt(" S%d=%lld", id, static_cast<long long>(m));
  }
  const double deficit = 1.0 - 118784.0 / 147456.0;
  return {ok, "measured pixels:" + got + fmt(" (S7 %.1f%% below 147456)", 100.0 * deficit)};
}

// 4. Coverage.
Outcome ac4() {
  bool ok = true;
  std::string detail = "coverage:";
  for (int id : {2, 3, 4}) {
    const double c = coverage(build_strategy(id, 512, 0));
    ok = ok && c >= 0.438 && c <= 0.446;
    detail += fmt(" S%d=%.2f%%", id, 100.0 * c);
  }
  const auto sched = build_snapshot_schedule(build_strategy(4, 512, 0), 6, 0);
  const auto curve = coverage_curve(sched);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i] >= curve[i - 1];
  ok = ok && monotone && curve.back() == 1.0;
  detail += "; 6-snapshot curve";
  for (double c : curve) detail += fmt(" %.2f", 100.0 * c);
  detail += monotone ? " (monotone)" : " (NOT monotone)";
  return {ok, detail};
}

// 5. AP benchmark on the FP grid.
Outcome ac5(const std::vector<IntensityImage>& images) {
  const auto t0 = Clock::now();
  const auto grid = single_snapshot(build_fp_grid(256, 64, 100, 0.61));
  std::vector<double> p, s;
  int max_sweeps = 0;
  for (const auto& img : images) {
    const auto stack = simulate(img, grid, std::nullopt);
    const auto r = ap_reconstruct(stack, APConfig{});
    p.push_back(psnr(r.estimate.pixels, img.pixels));
    s.push_back(ssim(r.estimate.pixels, img.pixels));
    max_sweeps = std::max(max_sweeps, r.sweeps_run);
  }
  const double secs = seconds_since(t0);
  const double mp = median(p), ms = median(s);
  return {images.size() == 10 && mp >= 40.0 && ms >= 0.97 && max_sweeps <= 200 && secs < 600.0,
          fmt("FP benchmark (61%% overlap, 100 apertures, 256x256, %zu images): median PSNR %.2f dB, "
              "median SSIM %.4f, max sweeps %d, %.1f s",
              images.size(), mp, ms, max_sweeps, secs)};
}

// 6. Multi-snapshot trend.
Outcome ac6(const std::vector<IntensityImage>& images) {
  const auto base = build_strategy(4, 256, 0);
  const auto two = build_snapshot_schedule(base, 2, 0);
  const auto six = build_snapshot_schedule(base, 6, 0);
  int wins = 0;
  std::vector<double> p2, p6;
  for (const auto& img : images) {
    const auto r2 = ap_reconstruct(simulate(img, two, std::nullopt), APConfig{});
    const auto r6 = ap_reconstruct(simulate(img, six, std::nullopt), APConfig{});
    p2.push_back(psnr(r2.estimate.pixels, img.pixels));
    p6.push_back(psnr(r6.estimate.pixels, img.pixels));
    wins += p6.back() > p2.back();
  }
  return {wins >= 9, fmt("multi-snapshot trend: 6 snapshots beat 2 on %d/%zu images "
                         "(median PSNR %.2f vs %.2f dB)",
                         wins, images.size(), median(p6), median(p2))};
}

// 7. Poisson statistics and the noise-free limit.
Outcome ac7() {
  const int n = 64;
  IntensityImage obj(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) obj(r, c) = 0.5 + 0.35 * std::sin(0.3 * r) * std::cos(0.2 * c);
  const auto sched = single_snapshot(build_strategy(2, n, 0));
  const auto clean = simulate(obj, sched, std::nullopt);

  const int draws = 10000;
  std::vector<double> mean, m2;
  for (int k = 0; k < draws; ++k) {
    const auto st = simulate(obj, sched, PhotonModel{1e3, BudgetMode::per_snapshot, std::uint64_t(k)});
    std::size_t idx = 0;
    if (mean.empty()) {
      std::size_t total = 0;
      for (const auto& e : st.entries) total += e.image.pixels.size();
      mean.assign(total, 0.0);
      m2.assign(total, 0.0);
    }
    for (const auto& e : st.entries)
      for (double v : e.image.pixels) {
        const double d = v - mean[idx];
        mean[idx] += d / (k + 1);
        m2[idx] += d * (v - mean[idx]);
        ++idx;
      }
  }
  double lo = 1e9, hi = 0.0;
  std::size_t tested = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (mean[i] < 10.0) continue;
    const double ratio = m2[i] / (draws - 1) / mean[i];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ++tested;
  }

  const auto big = simulate(obj, sched, PhotonModel{1e9, BudgetMode::per_snapshot, 1});
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < big.entries.size(); ++e)
    for (std::size_t i = 0; i < big.entries[e].image.pixels.size(); ++i) {
      const double est = big.entries[e].image.pixels.data()[i] / big.photon_scale;
      const double ref = clean.entries[e].image.pixels.data()[i];
      num += (est - ref) * (est - ref);
      den += ref * ref;
    }
  const double limit = std::sqrt(num / den);
  return {tested > 0 && lo >= 0.9 && hi <= 1.1 && limit < 1e-3,
          fmt("Poisson model: var/mean in [%.3f, %.3f] over %zu pixels (mean >= 10, %d draws, n=1e3); "
              "n=1e9 rel err %.2e",
              lo, hi, tested, draws, limit)};
}

// 8. Determinism of seeded pipelines.
Outcome ac8() {
  const auto dir = scratch("determinism");
  std::vector<std::string> failed;
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("run" + std::to_string(run));
    fs::create_directories(out / "layouts");
    for (int id = 1; id <= 10; ++id)
      save_schedule(single_snapshot(build_strategy(id, 512, 77)), out / "layouts" / ("s" + std::to_string(id) + ".json"));
    save_schedule(build_snapshot_schedule(build_strategy(4, 512, 77), 6, 77), out / "layouts" / "schedule.json");
    save_schedule(single_snapshot(build_fp_grid()), out / "layouts" / "fp.json");

    const auto obj = load_png(fs::path(APSYNTH_TEST_DATA) / "natural" / "chelsea.png");
    const auto sched = build_snapshot_schedule(build_strategy(5, 256, 5), 3, 5);
    SimulateOptions opts{"chelsea", run == 0 ? 1 : 4};
    save_stack(simulate(obj, sched, PhotonModel{1e3, BudgetMode::total_shared, 5}, opts), out / "stack_noisy");
    save_stack(simulate(obj, sched, std::nullopt, opts), out / "stack_clean");

    DatasetConfig cfg = DatasetConfig::preset_defaults(DatasetPreset::desk);
    cfg.source_dirs = {(fs::path(APSYNTH_TEST_DATA) / "natural").string()};
    cfg.patch_size = 64;
    cfg.counts = {6, 2, 2};
    cfg.seed = 77;
    cfg.layout = build_snapshot_schedule(build_strategy(4, 64, 77), 2, 77);
    cfg.photons = PhotonModel{1e3, BudgetMode::per_snapshot, 77};
    build_dataset(cfg, out / "dataset", run == 0 ? 1 : 3);

    DatasetConfig slm = DatasetConfig::preset_defaults(DatasetPreset::slm);
    slm.patterns.width = 96;
    slm.patterns.height = 72;
    slm.patterns.pad_width = 100;
    slm.patterns.pad_height = 75;
    slm.lowres_width = 15;
    slm.lowres_height = 11;
    slm.counts = {4, 1, 1};
    slm.pattern_sources = 2;
    slm.seed = 77;
    build_dataset(slm, out / "slm", run == 0 ? 1 : 3);
  }
  const auto a = tree_bytes(dir / "run0");
  const auto b = tree_bytes(dir / "run1");
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) failed.push_back(name);
  }
  const bool ok = failed.empty() && a.size() == b.size() && !a.empty();
  return {ok, fmt("determinism: %zu files compared across two runs (layouts, stacks, datasets), %zu differ",
                  a.size(), failed.size() + (a.size() != b.size()))};
}

}  // namespace

int main() {
  const auto images = natural_images();
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, ac1}, {2, ac2}, {3, ac3}, {4, ac4}, {5, [&] { return ac5(images); }},
      {6, [&] { return ac6(images); }}, {7, ac7}, {8, ac8}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("AC%d %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
