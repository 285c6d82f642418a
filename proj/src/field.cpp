#include "apsynth/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

namespace apsynth {

namespace {

// FFTW's planner is not reentrant; executing an existing plan on new arrays
// is. Plans are created once per (shape, direction) and never destroyed.
class PlanCache {
 public:
  fftw_plan get(int width, int height, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(width, height, sign);
    if (auto it = plans_.find(key); it != plans_.end()) {
      return it->second;
    }
    std::vector<Complex> scratch(static_cast<std::size_t>(width) * height);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(height, width, buf, buf, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) {
      throw Error("fftw: failed to create plan");
    }
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

ComplexField transform(const ComplexField& in, int sign) {
  if (in.width() < 1 || in.height() < 1) {
    throw InvalidArgument("fft2: dimensions must be at least 1x1");
  }
  ComplexField out = in;
  auto* buf = reinterpret_cast<fftw_complex*>(out.data().data());
  fftw_execute_dft(plan_cache().get(in.width(), in.height(), sign), buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.width()) * in.height());
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace

void IntensityImage::validate() const {
  for (double v : pixels) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("intensity image has a negative or non-finite value");
    }
    if (scale == ValueScale::normalized01 && v > 1.0 + 1e-6) {
      throw InvalidArgument("normalized intensity image has a value above 1");
    }
  }
}

ComplexField fft2(const ComplexField& field) { return transform(field, FFTW_FORWARD); }
ComplexField ifft2(const ComplexField& field) { return transform(field, FFTW_BACKWARD); }

ComplexField centered_spectrum(const ComplexField& field) { return fftshift(fft2(field)); }
ComplexField field_from_centered(const ComplexField& spectrum) {
  return ifft2(ifftshift(spectrum));
}

ComplexField to_complex(const RealGrid& real) {
  ComplexField out(real.width(), real.height());
  std::transform(real.begin(), real.end(), out.begin(),
                 [](double v) { return Complex(v, 0.0); });
  return out;
}

RealGrid abs_squared(const ComplexField& field) {
  RealGrid out(field.width(), field.height());
  std::transform(field.begin(), field.end(), out.begin(),
                 [](const Complex& v) { return std::norm(v); });
  return out;
}

RealGrid magnitude(const ComplexField& field) {
  RealGrid out(field.width(), field.height());
  std::transform(field.begin(), field.end(), out.begin(),
                 [](const Complex& v) { return std::abs(v); });
  return out;
}

double energy(const ComplexField& field) {
  double sum = 0.0;
  for (const auto& v : field) sum += std::norm(v);
  return sum;
}

bool all_finite(const ComplexField& field) {
  return std::all_of(field.begin(), field.end(), [](const Complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

bool all_finite(const RealGrid& grid) {
  return std::all_of(grid.begin(), grid.end(), [](double v) { return std::isfinite(v); });
}

double cubic_kernel(double x) noexcept {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  int index[4];
  double weight[4];
};

std::vector<Taps> make_taps(int in, int out) {
  std::vector<Taps> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double src = (i + 0.5) * ratio - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      const int idx = static_cast<int>(base) - 1 + k;
      taps[i].index[k] = std::clamp(idx, 0, in - 1);
      taps[i].weight[k] = cubic_kernel(frac - (k - 1));
    }
  }
  return taps;
}

}  // namespace

RealGrid resize_bicubic(const RealGrid& grid, int out_w, int out_h) {
  if (grid.empty() || out_w < 1 || out_h < 1) {
    throw InvalidArgument("resize_bicubic: empty input or output");
  }
  const auto col_taps = make_taps(grid.width(), out_w);
  const auto row_taps = make_taps(grid.height(), out_h);

  RealGrid horizontal(out_w, grid.height());
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < out_w; ++c) {
      const Taps& t = col_taps[c];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * grid(r, t.index[k]);
      horizontal(r, c) = acc;
    }
  }
  RealGrid out(out_w, out_h);
  for (int r = 0; r < out_h; ++r) {
    const Taps& t = row_taps[r];
    for (int c = 0; c < out_w; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * horizontal(t.index[k], c);
      out(r, c) = acc;
    }
  }
  return out;
}

IntensityImage upsample_bicubic(const IntensityImage& image, int out_w, int out_h) {
  if (out_w < image.width() || out_h < image.height()) {
    throw InvalidArgument("upsample_bicubic: output must be at least the input size");
  }
  RealGrid out = resize_bicubic(image.pixels, out_w, out_h);
  // Cubic overshoot can leave the valid range.
  const double hi = image.scale == ValueScale::normalized01
                        ? 1.0
                        : std::numeric_limits<double>::infinity();
  for (double& v : out) v = std::clamp(v, 0.0, hi);
  return IntensityImage(std::move(out), image.scale);
}

}  // namespace apsynth
