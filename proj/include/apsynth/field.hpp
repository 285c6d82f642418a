#pragma once

// Dense 2-D grids, unitary Fourier transforms and the DC-at-center
// conventions shared by every other module.
//
// Conventions: grids are row-major, row = y (vertical), col = x (horizontal).
// A "centered" spectrum holds DC at (height/2, width/2) (integer division),
// i.e. the layout produced by fftshift. Aperture coordinates (u, v) are
// column/row offsets from that DC pixel.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "apsynth/error.hpp"

namespace apsynth {

using Complex = std::complex<double>;

template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}
  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) {
      throw InvalidArgument("grid data length does not match width*height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int row, int col) noexcept {
    return data_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(col)];
  }
  const T& operator()(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(col)];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) {
      throw InvalidArgument("grid dimensions must be nonnegative");
    }
    const auto w = static_cast<std::uint64_t>(width);
    const auto h = static_cast<std::uint64_t>(height);
    if (w != 0 && h > (std::uint64_t{1} << 40) / w) {
      throw InvalidArgument("grid dimensions overflow");
    }
    return static_cast<std::size_t>(w * h);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ComplexField = Grid<Complex>;
using RealGrid = Grid<double>;
using Mask = Grid<std::uint8_t>;

enum class ValueScale { normalized01, photon_counts };

/// Nonnegative real image. normalized01 images additionally satisfy
/// value <= 1 (+1e-6); photon_counts images carry unnormalized intensities.
struct IntensityImage {
  RealGrid pixels;
  ValueScale scale = ValueScale::normalized01;

  IntensityImage() = default;
  explicit IntensityImage(RealGrid p, ValueScale s = ValueScale::normalized01)
      : pixels(std::move(p)), scale(s) {}
  IntensityImage(int width, int height, double fill = 0.0,
                 ValueScale s = ValueScale::normalized01)
      : pixels(width, height, fill), scale(s) {}

  int width() const noexcept { return pixels.width(); }
  int height() const noexcept { return pixels.height(); }
  double& operator()(int row, int col) noexcept { return pixels(row, col); }
  double operator()(int row, int col) const noexcept { return pixels(row, col); }

  /// Throws InvalidArgument if any value is negative, non-finite, or above 1
  /// for a normalized01 image.
  void validate() const;
};

// --- Fourier transforms -----------------------------------------------------

/// Orthonormal 2-D DFT, DC at index (0, 0). Preserves sum |x|^2.
ComplexField fft2(const ComplexField& field);
/// Exact inverse of fft2 with the same 1/sqrt(N*M) normalization.
ComplexField ifft2(const ComplexField& field);

/// fft2 followed by fftshift: DC lands at (h/2, w/2).
ComplexField centered_spectrum(const ComplexField& field);
/// Inverse of centered_spectrum.
ComplexField field_from_centered(const ComplexField& spectrum);

template <typename T>
Grid<T> fftshift(const Grid<T>& in) {
  const int w = in.width();
  const int h = in.height();
  Grid<T> out(w, h);
  for (int r = 0; r < h; ++r) {
    const int rr = (r + h / 2) % h;
    for (int c = 0; c < w; ++c) {
      out(rr, (c + w / 2) % w) = in(r, c);
    }
  }
  return out;
}

template <typename T>
Grid<T> ifftshift(const Grid<T>& in) {
  const int w = in.width();
  const int h = in.height();
  Grid<T> out(w, h);
  for (int r = 0; r < h; ++r) {
    const int rr = (r + h / 2) % h;
    for (int c = 0; c < w; ++c) {
      out(r, c) = in(rr, (c + w / 2) % w);
    }
  }
  return out;
}

// --- Centered crop / pad ----------------------------------------------------

/// Row/column index where a centered window of size `out` starts inside an
/// extent of size `in` (keeps index out/2 aligned with in/2).
constexpr int centered_offset(int in, int out) noexcept { return in / 2 - out / 2; }

template <typename T>
Grid<T> crop_centered(const Grid<T>& in, int out_w, int out_h) {
  if (out_w < 0 || out_h < 0 || out_w > in.width() || out_h > in.height()) {
    throw InvalidArgument("crop_centered: output must fit inside the input");
  }
  const int r0 = centered_offset(in.height(), out_h);
  const int c0 = centered_offset(in.width(), out_w);
  Grid<T> out(out_w, out_h);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      out(r, c) = in(r0 + r, c0 + c);
    }
  }
  return out;
}

template <typename T>
Grid<T> pad_centered(const Grid<T>& in, int out_w, int out_h) {
  if (out_w < in.width() || out_h < in.height()) {
    throw InvalidArgument("pad_centered: output must contain the input");
  }
  const int r0 = centered_offset(out_h, in.height());
  const int c0 = centered_offset(out_w, in.width());
  Grid<T> out(out_w, out_h, T{});
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) {
      out(r0 + r, c0 + c) = in(r, c);
    }
  }
  return out;
}

// --- Conversions and resampling ---------------------------------------------

ComplexField to_complex(const RealGrid& real);
RealGrid abs_squared(const ComplexField& field);
RealGrid magnitude(const ComplexField& field);
double energy(const ComplexField& field);
bool all_finite(const ComplexField& field);
bool all_finite(const RealGrid& grid);

/// Cubic-convolution kernel with a = -0.5.
double cubic_kernel(double x) noexcept;

/// Separable bicubic resize (a = -0.5) with pixel-center alignment
/// (src = (dst + 0.5) * in/out - 0.5) and edge-clamped taps.
IntensityImage upsample_bicubic(const IntensityImage& image, int out_w, int out_h);
RealGrid resize_bicubic(const RealGrid& grid, int out_w, int out_h);

}  // namespace apsynth
