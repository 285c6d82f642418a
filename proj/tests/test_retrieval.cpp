#include <doctest.h>

#include <cmath>
#include <limits>

#include "apsynth/metrics.hpp"
#include "apsynth/raster_io.hpp"
#include "apsynth/retrieval.hpp"
#include "test_util.hpp"

using namespace apsynth;

namespace {

IntensityImage natural(const std::string& name) {
  return load_png(testutil::data_dir() / "natural" / (name + ".png"));
}

IntensityImage crop(const IntensityImage& img, int n) {
  return IntensityImage(crop_centered(img.pixels, n, n));
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("single full-field aperture recovers a band-limited object in one sweep") {
  const int n = 32;
  IntensityImage obj(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      obj(r, c) = 0.5 + 0.2 * std::cos(2 * M_PI * 3 * c / n) + 0.15 * std::sin(2 * M_PI * (2 * r + c) / n);
  StrategyLayout l{LayoutKind::custom, 0, {{0, 0, n}}, 0, n};
  const auto stack = simulate(obj, single_snapshot(l), std::nullopt);
  APConfig cfg;
  cfg.max_sweeps = 1;
  const auto r = ap_reconstruct(stack, cfg);
  CHECK(r.sweeps_run == 1);
  double err = 0.0;
  for (std::size_t i = 0; i < obj.pixels.size(); ++i)
    err = std::max(err, std::abs(r.estimate.pixels.storage()[i] - obj.pixels.storage()[i]));
  CHECK(err < 1e-10);
  CHECK(r.residual_log.front() < 1e-12);
}

TEST_CASE("data misfit") {
  const auto obj = crop(natural("camera"), 128);
  const auto stack = simulate(obj, single_snapshot(build_fp_grid(128, 32, 100, 0.61)), std::nullopt);
  const auto truth = centered_spectrum(to_complex(obj.pixels));
  CHECK(data_misfit(stack, truth) < 1e-12);
  CHECK(data_misfit(stack, ComplexField(128, 128)) > 0.0);

  APConfig cfg;
  cfg.max_sweeps = 5;
  cfg.tol = 1e-300;
  const auto r = ap_reconstruct(stack, cfg);
  REQUIRE(r.residual_log.size() == 5);
  const double initial = data_misfit(stack, initial_spectrum(stack, cfg.init, std::nullopt));
  CHECK(r.residual_log[0] < initial);
  for (std::size_t i = 1; i < 5; ++i) CHECK(r.residual_log[i] < r.residual_log[i - 1]);
  for (double v : r.residual_log) CHECK(v >= 0.0);
}

TEST_CASE("projection properties") {
  const auto obj = crop(natural("coins"), 64);
  const auto stack = simulate(obj, build_snapshot_schedule(build_strategy(2, 64, 2), 2, 2), std::nullopt);
  const auto truth = centered_spectrum(to_complex(obj.pixels));

  SUBCASE("the true spectrum is a fixed point") {
    ComplexField s = truth;
    for (const auto& e : stack.entries) project_entry(s, e.aperture, target_modulus(e, 1.0));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s.storage()[i] - truth.storage()[i]) < 1e-10);
  }
  SUBCASE("each projection does not increase its own modulus distance") {
    ComplexField s = initial_spectrum(stack, InitMode::flat, std::nullopt);
    for (int sweep = 0; sweep < 3; ++sweep)
      for (const auto& e : stack.entries) {
        const auto t = target_modulus(e, 1.0);
        const double before = modulus_distance(s, e.aperture, t);
        project_entry(s, e.aperture, t);
        CHECK(modulus_distance(s, e.aperture, t) <= before * (1 + 1e-12) + 1e-20);
      }
  }
}

TEST_CASE("unmeasured frequencies keep their initial values") {
  const auto obj = crop(natural("moon"), 64);
  const auto stack = simulate(obj, single_snapshot(build_strategy(7, 64, 1)), std::nullopt);
  std::vector<ApertureSpec> aps;
  for (const auto& e : stack.entries) aps.push_back(e.aperture);
  const Mask covered = pupil_union(aps, 64);
  for (bool clamp : {true, false}) {
    APConfig cfg;
    cfg.max_sweeps = 10;
    cfg.clamp_nonnegative_object = clamp;
    const auto init = initial_spectrum(stack, cfg.init, std::nullopt);
    const auto r = ap_reconstruct(stack, cfg);
    std::size_t outside = 0;
    for (std::size_t i = 0; i < init.size(); ++i) {
      if (covered.storage()[i]) continue;
      ++outside;
      CHECK(r.spectrum.storage()[i] == init.storage()[i]);
    }
    CHECK(outside > 0);
  }
}

TEST_CASE("determinism, orders and init modes") {
  const auto obj = crop(natural("rocket"), 64);
  const auto stack = simulate(obj, build_snapshot_schedule(build_strategy(5, 64, 3), 2, 3),
                              PhotonModel{1e4, BudgetMode::per_snapshot, 1});
  for (auto order : {SweepOrder::raster, SweepOrder::by_diameter_desc, SweepOrder::seeded_random}) {
    APConfig cfg;
    cfg.max_sweeps = 8;
    cfg.sweep_order = order;
    cfg.seed = 17;
    const auto a = ap_reconstruct(stack, cfg);
    const auto b = ap_reconstruct(stack, cfg);
    CHECK(a.spectrum == b.spectrum);
    CHECK(a.residual_log == b.residual_log);
    CHECK(a.residual_log.size() == std::size_t(a.sweeps_run));
    for (double v : a.estimate.pixels) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  APConfig flat;
  flat.init = InitMode::flat;
  const auto s = initial_spectrum(stack, InitMode::flat, std::nullopt);
  const auto psi = field_from_centered(s);
  double mean = 0.0;
  for (double v : obj.pixels) mean += v * v;
  CHECK(std::abs(psi(5, 7)) == doctest::Approx(std::sqrt(mean / obj.pixels.size())).epsilon(0.05));

  // Bright-field init approximates the object's low-pass amplitude.
  const auto bf = magnitude(field_from_centered(initial_spectrum(stack, InitMode::brightfield_upsample, std::nullopt)));
  CHECK(psnr(bf, obj.pixels) > 15.0);

  // External init uses the given image.
  const auto ext = field_from_centered(initial_spectrum(stack, InitMode::flat, obj));
  CHECK(std::abs(ext(10, 20).real() - obj(10, 20)) < 1e-12);
  APConfig e;
  e.init = InitMode::external_image;
  CHECK_THROWS_AS(ap_reconstruct(stack, e), InvalidArgument);
  CHECK_THROWS_AS(ap_reconstruct(stack, e, IntensityImage(32, 32)), InvalidArgument);
}

TEST_CASE("input validation") {
  APConfig cfg;
  MeasurementStack empty;
  empty.field_size = 64;
  CHECK_THROWS_AS(ap_reconstruct(empty, cfg), InvalidArgument);

  const auto obj = crop(natural("brick"), 64);
  auto stack = simulate(obj, single_snapshot(build_strategy(2, 64, 0)), std::nullopt);
  auto bad = stack;
  bad.entries[1].image = IntensityImage(RealGrid(4, 4), ValueScale::photon_counts);
  CHECK_THROWS_AS(ap_reconstruct(bad, cfg), InvalidArgument);
  bad = stack;
  bad.entries[2].image(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ap_reconstruct(bad, cfg), InvalidArgument);
  bad = stack;
  bad.entries[0].resampled = true;
  CHECK_THROWS_AS(ap_reconstruct(bad, cfg), InvalidArgument);
  APConfig zero;
  zero.max_sweeps = 0;
  CHECK_THROWS_AS(ap_reconstruct(stack, zero), InvalidArgument);
  APConfig tol;
  tol.tol = 0.0;
  CHECK_THROWS_AS(ap_reconstruct(stack, tol), InvalidArgument);
}

TEST_CASE("noise-free FP benchmark on a natural patch") {
  const auto obj = natural("camera");
  const auto stack = simulate(obj, single_snapshot(build_fp_grid(256, 64, 100, 0.61)), std::nullopt);
  const auto r = ap_reconstruct(stack, APConfig{});
  CHECK(r.sweeps_run <= 200);
  CHECK(psnr(r.estimate.pixels, obj.pixels) >= 40.0);
}

TEST_CASE("six snapshots beat one, with a monotone convergence phase") {
  const auto obj = natural("astronaut");
  const auto base = build_strategy(4, 256, 0);
  const auto six = simulate(obj, build_snapshot_schedule(base, 6, 0), std::nullopt);
  const auto one = simulate(obj, single_snapshot(base), std::nullopt);
  REQUIRE(six.entries.size() == 54);
  const auto r6 = ap_reconstruct(six, APConfig{});
  const auto r1 = ap_reconstruct(one, APConfig{});
  for (std::size_t i = 2; i < std::min<std::size_t>(60, r6.residual_log.size()); ++i)
    CHECK(r6.residual_log[i] <= r6.residual_log[i - 1] + 1e-9);
  CHECK(psnr(r6.estimate.pixels, obj.pixels) > psnr(r1.estimate.pixels, obj.pixels));
}

TEST_CASE("result export") {
  const auto dir = testutil::scratch("recon");
  const auto obj = crop(natural("gravel"), 64);
  const auto stack = simulate(obj, single_snapshot(build_strategy(1, 64, 0)), std::nullopt);
  APConfig cfg;
  cfg.max_sweeps = 3;
  const auto r = ap_reconstruct(stack, cfg);
  save_recon(r, dir, true);
  CHECK(load_png(dir / "estimate.png").width() == 64);
  CHECK(read_tensor(dir / "spectrum.cafp").dtype == DType::c64);
  CHECK(std::filesystem::exists(dir / "recon.json"));
}

}  // TEST_SUITE
