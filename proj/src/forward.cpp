#include "apsynth/forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "apsynth/parallel.hpp"
#include "apsynth/raster_io.hpp"

namespace apsynth {

namespace {

void require_square(const ComplexField& object) {
  if (object.width() != object.height() || object.width() < 2) {
    throw InvalidArgument("object field must be square (N×N, N >= 2)");
  }
}

void require_center_in_field(const ApertureSpec& spec, int n) {
  if (!center_in_field(spec, n)) throw InvalidArgument("aperture center lies outside the field");
}

}  // namespace

SpatialOracleConfig SpatialOracleConfig::for_field(int field_size) {
  return SpatialOracleConfig{2.0 * std::numbers::pi / field_size, field_size, false};
}

std::string StackEntry::file_name() const {
  return "s" + std::to_string(snapshot) + "_a" + std::to_string(aperture_index) + ".cafp";
}

// --- single-aperture measurements --------------------------------------------

ComplexField pupil_subspectrum(const ComplexField& centered, const ApertureSpec& spec) {
  if (!spec.integer_center()) {
    throw InvalidArgument("decimated measurements need an integer aperture center");
  }
  const int n = centered.width();
  require_center_in_field(spec, n);
  const int d = spec.diameter;
  const Mask pupil = pupil_window(d);
  const int row0 = static_cast<int>(spec.center_v) - d / 2 + n / 2;
  const int col0 = static_cast<int>(spec.center_u) - d / 2 + n / 2;
  ComplexField window(d, d);
  for (int i = 0; i < d; ++i) {
    const int row = row0 + i;
    if (row < 0 || row >= n) continue;
    for (int j = 0; j < d; ++j) {
      const int col = col0 + j;
      if (col < 0 || col >= n || !pupil(i, j)) continue;
      window(i, j) = centered(row, col);
    }
  }
  return window;
}

RealGrid decimated_from_spectrum(const ComplexField& centered, const ApertureSpec& spec) {
  return abs_squared(ifft2(ifftshift(pupil_subspectrum(centered, spec))));
}

IntensityImage measure_fullres(const ComplexField& object, const ApertureSpec& spec) {
  require_square(object);
  const int n = object.width();
  require_center_in_field(spec, n);
  ComplexField spectrum = centered_spectrum(object);
  const Mask pupil = pupil_mask(spec, n);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (!pupil.storage()[i]) spectrum.storage()[i] = 0.0;
  }
  return IntensityImage(abs_squared(field_from_centered(spectrum)), ValueScale::photon_counts);
}

IntensityImage measure_decimated(const ComplexField& object, const ApertureSpec& spec) {
  require_square(object);
  if (spec.diameter > object.width()) {
    throw InvalidArgument("aperture diameter exceeds the field");
  }
  return IntensityImage(decimated_from_spectrum(centered_spectrum(object), spec),
                        ValueScale::photon_counts);
}

ComplexField pupil_psf(int diameter, int field_size) {
  if (diameter > field_size) throw InvalidArgument("pupil larger than the field");
  const int n = field_size;
  const Mask pupil = pupil_window(diameter);
  // Twiddles e^{i 2π m / N} for every residue m.
  std::vector<Complex> twiddle(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    twiddle[m] = std::polar(1.0, 2.0 * std::numbers::pi * m / n);
  }
  struct Freq {
    int ku;
    int kv;
  };
  std::vector<Freq> freqs;
  for (int i = 0; i < diameter; ++i) {
    for (int j = 0; j < diameter; ++j) {
      if (pupil(i, j)) freqs.push_back({j - diameter / 2, i - diameter / 2});
    }
  }
  const double norm = 1.0 / (static_cast<double>(n) * n);
  ComplexField h(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      Complex acc = 0.0;
      for (const auto& f : freqs) {
        const long long phase = static_cast<long long>(f.ku) * x + static_cast<long long>(f.kv) * y;
        acc += twiddle[static_cast<std::size_t>(((phase % n) + n) % n)];
      }
      h(y, x) = acc * norm;
    }
  }
  return h;
}

IntensityImage measure_spatial(const ComplexField& object, const ApertureSpec& spec,
                               const SpatialOracleConfig& cfg) {
  require_square(object);
  const int n = object.width();
  if (!spec.integer_center()) throw InvalidArgument("spatial path needs an integer center");
  if (!disk_in_field(spec, n)) throw InvalidArgument("aperture disk exceeds the field");
  if (cfg.psf_support < 1) throw InvalidArgument("psf support must be positive");

  // Tilt: the carrier that moves the aperture's band onto the DC-centered pupil.
  ComplexField tilted(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double phi = -cfg.tilt_scale * (spec.center_u * x + spec.center_v * y);
      tilted(y, x) = object(y, x) * std::polar(1.0, phi);
    }
  }
  const ComplexField h = pupil_psf(spec.diameter, n);

  ComplexField blurred(n, n);
  if (!cfg.direct_convolution && cfg.psf_support >= n) {
    const ComplexField ft = fft2(tilted);
    const ComplexField fh = fft2(h);
    ComplexField prod(n, n);
    for (std::size_t i = 0; i < prod.size(); ++i) {
      prod.storage()[i] = ft.storage()[i] * fh.storage()[i] * static_cast<double>(n);
    }
    blurred = ifft2(prod);
  } else {
    const int support = std::min(cfg.psf_support, n);
    const int s0 = -(support / 2);
    const int s1 = support - 1 - support / 2;
    auto wrap = [n](int i) { return ((i % n) + n) % n; };
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        Complex acc = 0.0;
        for (int sy = s0; sy <= s1; ++sy) {
          for (int sx = s0; sx <= s1; ++sx) {
            acc += tilted(wrap(y - sy), wrap(x - sx)) * h(wrap(sy), wrap(sx));
          }
        }
        blurred(y, x) = acc;
      }
    }
  }
  return IntensityImage(abs_squared(blurred), ValueScale::photon_counts);
}

// --- stacks -----------------------------------------------------------------

int most_central_entry(const std::vector<StackEntry>& entries) {
  int best = -1;
  double best_r2 = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& a = entries[i].aperture;
    const double r2 = a.center_u * a.center_u + a.center_v * a.center_v;
    if (best < 0 || r2 < best_r2) {
      best = static_cast<int>(i);
      best_r2 = r2;
    }
  }
  return best;
}

namespace {

// Full-resolution image summed over (N/d)² blocks: the camera sees the whole
// field of view with d×d pixels.
RealGrid bin_down(const RealGrid& full, int d) {
  const int n = full.width();
  if (n % d != 0) {
    throw InvalidArgument("fractional-center fallback needs the diameter to divide N");
  }
  const int f = n / d;
  RealGrid out(d, d, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out(r / f, c / f) += full(r, c);
  }
  return out;
}

}  // namespace

MeasurementStack simulate(const IntensityImage& object, const SnapshotSchedule& schedule,
                          const std::optional<PhotonModel>& photons,
                          const SimulateOptions& options) {
  const int n = schedule.base.field_size;
  if (object.width() != n || object.height() != n) {
    throw InvalidArgument("object size does not match the layout field size");
  }
  try {
    IntensityImage normalized(object.pixels, ValueScale::normalized01);
    normalized.validate();
  } catch (const InvalidArgument&) {
    throw InvalidArgument("object values must lie in [0, 1]");
  }
  if (schedule.base.apertures.empty()) throw InvalidArgument("layout has no apertures");
  if (photons && !(photons->photons > 0.0 && std::isfinite(photons->photons))) {
    throw InvalidArgument("photon count must be positive");
  }

  MeasurementStack stack;
  stack.object_id = options.object_id;
  stack.field_size = n;
  stack.layout = schedule;
  stack.photon_model = photons;

  for (int s = 0; s < schedule.k(); ++s) {
    const auto apertures = schedule.apertures_for(s);
    for (std::size_t a = 0; a < apertures.size(); ++a) {
      require_center_in_field(apertures[a], n);
      StackEntry e;
      e.aperture = apertures[a];
      e.snapshot = s;
      e.aperture_index = static_cast<int>(a);
      e.resampled = !apertures[a].integer_center();
      stack.entries.push_back(std::move(e));
    }
  }

  const ComplexField field = to_complex(object.pixels);
  const ComplexField spectrum = centered_spectrum(field);
  const int threads = resolve_threads(options.threads);
  parallel_for(stack.entries.size(), threads, [&](std::size_t i) {
    StackEntry& e = stack.entries[i];
    RealGrid img = e.resampled ? bin_down(measure_fullres(field, e.aperture).pixels,
                                          e.aperture.diameter)
                               : decimated_from_spectrum(spectrum, e.aperture);
    e.image = IntensityImage(std::move(img), ValueScale::photon_counts);
  });

  stack.brightfield_entry = most_central_entry(stack.entries);
  if (photons) {
    const auto& bf = stack.entries[static_cast<std::size_t>(stack.brightfield_entry)].image;
    double mean = 0.0;
    for (double v : bf.pixels) mean += v;
    mean /= static_cast<double>(bf.pixels.size());
    if (!(mean > 0.0)) {
      throw InvalidArgument("bright-field measurement is dark; cannot normalize photons");
    }
    double n_eff = photons->photons;
    if (photons->budget == BudgetMode::total_shared) n_eff /= schedule.k();
    stack.photon_scale = n_eff / mean;
    const double scale = stack.photon_scale;
    const std::uint64_t seed = photons->seed;
    parallel_for(stack.entries.size(), threads, [&](std::size_t i) {
      std::mt19937_64 rng(derive_seed(seed, i));
      for (double& v : stack.entries[i].image.pixels) {
        const double lambda = v * scale;
        if (lambda <= 0.0) {
          v = 0.0;
          continue;
        }
        std::poisson_distribution<long long> draw(lambda);
        v = static_cast<double>(draw(rng));
      }
    });
  }
  return stack;
}

void MeasurementStack::validate() const {
  if (entries.empty()) throw InvalidArgument("measurement stack is empty");
  if (field_size < 2) throw InvalidArgument("measurement stack has no field size");
  if (!(photon_scale > 0.0) || !std::isfinite(photon_scale)) {
    throw InvalidArgument("photon scale must be positive");
  }
  for (const auto& e : entries) {
    const int d = e.aperture.diameter;
    if (e.image.width() != d || e.image.height() != d) {
      throw InvalidArgument("measurement " + e.file_name() + " is not diameter×diameter");
    }
    if (!all_finite(e.image.pixels)) {
      throw InvalidArgument("measurement " + e.file_name() + " has non-finite values");
    }
    if (!center_in_field(e.aperture, field_size)) {
      throw InvalidArgument("measurement " + e.file_name() + " aperture outside the field");
    }
  }
  if (brightfield_entry < 0 || brightfield_entry >= static_cast<int>(entries.size())) {
    throw InvalidArgument("bright-field entry index out of range");
  }
}

std::string budget_name(BudgetMode mode) {
  return mode == BudgetMode::total_shared ? "total_shared" : "per_snapshot";
}

BudgetMode parse_budget(const std::string& name) {
  if (name == "total_shared" || name == "shared") return BudgetMode::total_shared;
  if (name == "per_snapshot" || name == "per") return BudgetMode::per_snapshot;
  throw InvalidArgument("unknown photon budget mode '" + name + "'");
}

Json MeasurementStack::manifest() const {
  Json doc;
  doc["format"] = "apsynth.measurement_stack";
  doc["version"] = 1;
  doc["object_id"] = object_id;
  doc["field_size"] = field_size;
  doc["layout"] = to_json(layout);
  if (photon_model) {
    doc["photon_model"] = Json{{"photons", photon_model->photons},
                               {"budget", budget_name(photon_model->budget)},
                               {"seed", photon_model->seed}};
  } else {
    doc["photon_model"] = nullptr;
  }
  doc["photon_scale"] = photon_scale;
  doc["brightfield_entry"] = brightfield_entry;
  doc["value_scale"] = "photon_counts";
  Json list = Json::array();
  for (const auto& e : entries) {
    Json item;
    item["file"] = e.file_name();
    item["snapshot"] = e.snapshot;
    item["aperture"] = e.aperture_index;
    item["u"] = e.aperture.center_u;
    item["v"] = e.aperture.center_v;
    item["d"] = e.aperture.diameter;
    item["resampled"] = e.resampled;
    list.push_back(std::move(item));
  }
  doc["entries"] = std::move(list);
  return doc;
}

void save_stack(const MeasurementStack& stack, const std::filesystem::path& dir) {
  stack.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& e : stack.entries) {
    write_tensor(RasterTensor::from_real(e.image.pixels, DType::f32), dir / e.file_name());
  }
  // Manifest last: its presence marks a complete stack.
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << stack.manifest().dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (dir / "manifest.json").string());
}

MeasurementStack load_stack(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("no stack manifest at " + manifest_path.string());
  MeasurementStack stack;
  try {
    Json doc;
    in >> doc;
    if (doc.value("format", std::string{}) != "apsynth.measurement_stack") {
      throw IoError(manifest_path.string() + " is not a measurement stack manifest");
    }
    stack.object_id = doc.value("object_id", std::string{});
    stack.field_size = doc.at("field_size").get<int>();
    stack.layout = schedule_from_json(doc.at("layout"));
    if (!doc.at("photon_model").is_null()) {
      const Json& pm = doc.at("photon_model");
      stack.photon_model = PhotonModel{pm.at("photons").get<double>(),
                                       parse_budget(pm.at("budget").get<std::string>()),
                                       pm.at("seed").get<std::uint64_t>()};
    }
    stack.photon_scale = doc.at("photon_scale").get<double>();
    stack.brightfield_entry = doc.at("brightfield_entry").get<int>();
    for (const auto& item : doc.at("entries")) {
      StackEntry e;
      e.aperture = ApertureSpec{item.at("u").get<double>(), item.at("v").get<double>(),
                                item.at("d").get<int>()};
      e.snapshot = item.at("snapshot").get<int>();
      e.aperture_index = item.at("aperture").get<int>();
      e.resampled = item.value("resampled", false);
      const auto file = item.at("file").get<std::string>();
      e.image = IntensityImage(read_tensor(dir / file).to_real_grid(), ValueScale::photon_counts);
      stack.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  stack.validate();
  return stack;
}

}  // namespace apsynth
