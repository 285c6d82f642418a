#include "apsynth/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "apsynth/raster_io.hpp"

namespace apsynth {

void APConfig::validate() const {
  if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
}

namespace {

void check_stack(const MeasurementStack& stack) {
  stack.validate();
  for (const auto& e : stack.entries) {
    if (e.resampled || !e.aperture.integer_center()) {
      throw InvalidArgument("measurement " + e.file_name() +
                            " has a fractional center; alternating projection needs integer centers");
    }
    if (e.aperture.diameter > stack.field_size) {
      throw InvalidArgument("measurement " + e.file_name() + " larger than the field");
    }
  }
}

// Window origin of the aperture's d×d band inside the centered spectrum.
struct Window {
  int row0;
  int col0;
};

Window window_of(const ApertureSpec& spec, int n) {
  const int d = spec.diameter;
  return {static_cast<int>(spec.center_v) - d / 2 + n / 2,
          static_cast<int>(spec.center_u) - d / 2 + n / 2};
}

ComplexField sub_image(const ComplexField& spectrum, const ApertureSpec& spec) {
  return ifft2(ifftshift(pupil_subspectrum(spectrum, spec)));
}

std::vector<std::size_t> sweep_indices(const MeasurementStack& stack, SweepOrder order,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> idx(stack.entries.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  switch (order) {
    case SweepOrder::raster:
      break;
    case SweepOrder::by_diameter_desc:
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return stack.entries[a].aperture.diameter > stack.entries[b].aperture.diameter;
      });
      break;
    case SweepOrder::seeded_random:
      std::shuffle(idx.begin(), idx.end(), rng);
      break;
  }
  return idx;
}

double norm2(const ComplexField& f) { return energy(f); }

}  // namespace

RealGrid target_modulus(const StackEntry& entry, double photon_scale) {
  RealGrid out(entry.image.width(), entry.image.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.storage()[i] = std::sqrt(std::max(entry.image.pixels.storage()[i], 0.0) / photon_scale);
  }
  return out;
}

void project_entry(ComplexField& spectrum, const ApertureSpec& spec,
                   const RealGrid& target_modulus) {
  const int n = spectrum.width();
  const int d = spec.diameter;
  if (target_modulus.width() != d || target_modulus.height() != d) {
    throw InvalidArgument("target modulus is not diameter×diameter");
  }
  ComplexField g = sub_image(spectrum, spec);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Complex z = g.storage()[i];
    const double a = std::abs(z);
    const double t = target_modulus.storage()[i];
    g.storage()[i] = a > 0.0 ? z * (t / a) : Complex(t, 0.0);
  }
  const ComplexField updated = fftshift(fft2(g));
  const Mask pupil = pupil_window(d);
  const Window w = window_of(spec, n);
  for (int i = 0; i < d; ++i) {
    const int row = w.row0 + i;
    if (row < 0 || row >= n) continue;
    for (int j = 0; j < d; ++j) {
      const int col = w.col0 + j;
      if (col < 0 || col >= n || !pupil(i, j)) continue;
      spectrum(row, col) = updated(i, j);
    }
  }
}

double modulus_distance(const ComplexField& spectrum, const ApertureSpec& spec,
                        const RealGrid& target_modulus) {
  const ComplexField g = sub_image(spectrum, spec);
  if (!g.same_shape(target_modulus)) throw InvalidArgument("target modulus shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double diff = std::abs(g.storage()[i]) - target_modulus.storage()[i];
    acc += diff * diff;
  }
  return acc;
}

double data_misfit(const MeasurementStack& stack, const ComplexField& spectrum) {
  check_stack(stack);
  if (spectrum.width() != stack.field_size || spectrum.height() != stack.field_size) {
    throw InvalidArgument("spectrum size does not match the stack field size");
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& e : stack.entries) {
    const RealGrid sim = decimated_from_spectrum(spectrum, e.aperture);
    for (std::size_t i = 0; i < sim.size(); ++i) {
      const double diff = sim.storage()[i] - e.image.pixels.storage()[i] / stack.photon_scale;
      acc += diff * diff;
    }
    count += sim.size();
  }
  return std::sqrt(acc / static_cast<double>(count));
}

ComplexField initial_spectrum(const MeasurementStack& stack, InitMode mode,
                              const std::optional<IntensityImage>& init_image) {
  const int n = stack.field_size;
  if (init_image) mode = InitMode::external_image;
  RealGrid amplitude;
  const auto& bf = stack.entries.at(static_cast<std::size_t>(stack.brightfield_entry));
  switch (mode) {
    case InitMode::external_image: {
      if (!init_image) throw InvalidArgument("external_image init requires an init image");
      if (init_image->width() != n || init_image->height() != n) {
        throw InvalidArgument("init image must be N×N");
      }
      IntensityImage copy(init_image->pixels, ValueScale::normalized01);
      copy.validate();
      amplitude = init_image->pixels;
      break;
    }
    case InitMode::brightfield_upsample: {
      const int d = bf.aperture.diameter;
      RealGrid low = target_modulus(bf, stack.photon_scale);
      // A constant object c gives a decimated modulus c·N/d.
      const double gain = static_cast<double>(d) / n;
      for (double& v : low) v *= gain;
      amplitude = d == n ? low : resize_bicubic(low, n, n);
      for (double& v : amplitude) v = std::max(v, 0.0);
      break;
    }
    case InitMode::flat: {
      double total = 0.0;
      for (double v : bf.image.pixels) total += std::max(v, 0.0);
      const double level = std::sqrt(total / stack.photon_scale) / n;
      amplitude = RealGrid(n, n, level);
      break;
    }
  }
  return centered_spectrum(to_complex(amplitude));
}

ReconResult ap_reconstruct(const MeasurementStack& stack, const APConfig& config,
                           const std::optional<IntensityImage>& init_image) {
  config.validate();
  check_stack(stack);
  const int n = stack.field_size;

  std::vector<RealGrid> targets;
  targets.reserve(stack.entries.size());
  std::vector<ApertureSpec> apertures;
  for (const auto& e : stack.entries) {
    targets.push_back(target_modulus(e, stack.photon_scale));
    apertures.push_back(e.aperture);
  }
  const Mask covered = pupil_union(apertures, n);

  ReconResult result;
  result.spectrum = initial_spectrum(stack, config.init, init_image);
  ComplexField& spectrum = result.spectrum;
  std::mt19937_64 rng(config.seed);

  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    const ComplexField previous = spectrum;
    for (std::size_t i : sweep_indices(stack, config.sweep_order, rng)) {
      project_entry(spectrum, apertures[i], targets[i]);
    }
    if (config.clamp_nonnegative_object) {
      ComplexField psi = field_from_centered(spectrum);
      for (Complex& z : psi) z = Complex(std::max(z.real(), 0.0), 0.0);
      const ComplexField projected = centered_spectrum(psi);
      for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (covered.storage()[i]) spectrum.storage()[i] = projected.storage()[i];
      }
    }
    result.residual_log.push_back(data_misfit(stack, spectrum));
    result.sweeps_run = sweep + 1;

    double change = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      change += std::norm(spectrum.storage()[i] - previous.storage()[i]);
    }
    const double base = norm2(previous);
    const double rel = base > 0.0 ? std::sqrt(change / base) : std::sqrt(change);
    if (rel < config.tol) {
      result.converged = true;
      break;
    }
  }

  RealGrid amp = magnitude(field_from_centered(spectrum));
  for (double& v : amp) v = std::clamp(v, 0.0, 1.0);
  result.estimate = IntensityImage(std::move(amp), ValueScale::normalized01);
  return result;
}

void save_recon(const ReconResult& result, const std::filesystem::path& dir,
                bool write_spectrum) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_png(result.estimate, dir / "estimate.png", 16);
  if (write_spectrum) {
    write_tensor(RasterTensor::from_complex(result.spectrum, DType::c64), dir / "spectrum.cafp");
  }
  Json doc;
  doc["sweeps_run"] = result.sweeps_run;
  doc["converged"] = result.converged;
  doc["residual_log"] = result.residual_log;
  std::ofstream out(dir / "recon.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "recon.json").string());
  out << doc.dump(2) << '\n';
}

std::string sweep_order_name(SweepOrder order) {
  switch (order) {
    case SweepOrder::raster: return "raster";
    case SweepOrder::by_diameter_desc: return "by_diameter_desc";
    case SweepOrder::seeded_random: return "seeded_random";
  }
  return "raster";
}

SweepOrder parse_sweep_order(const std::string& name) {
  if (name == "raster") return SweepOrder::raster;
  if (name == "by_diameter_desc") return SweepOrder::by_diameter_desc;
  if (name == "seeded_random") return SweepOrder::seeded_random;
  throw InvalidArgument("unknown sweep order '" + name + "'");
}

std::string init_mode_name(InitMode mode) {
  switch (mode) {
    case InitMode::brightfield_upsample: return "brightfield_upsample";
    case InitMode::external_image: return "external_image";
    case InitMode::flat: return "flat";
  }
  return "flat";
}

InitMode parse_init_mode(const std::string& name) {
  if (name == "brightfield_upsample" || name == "brightfield") return InitMode::brightfield_upsample;
  if (name == "external_image" || name == "external") return InitMode::external_image;
  if (name == "flat") return InitMode::flat;
  throw InvalidArgument("unknown init mode '" + name + "'");
}

}  // namespace apsynth
