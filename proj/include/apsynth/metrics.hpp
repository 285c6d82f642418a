#pragma once

// Image-quality metrics on [0,1] images (peak value 1).

#include <string>
#include <vector>

#include "apsynth/field.hpp"
#include "apsynth/json_fwd.hpp"

namespace apsynth {

inline constexpr double kBceEpsilon = 1e-7;

double mse(const RealGrid& a, const RealGrid& b);
/// 10·log10(1/mse); +infinity for identical images.
double psnr(const RealGrid& a, const RealGrid& b);
/// Mean local SSIM: 11×11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// data range 1, averaged over window positions fully inside the image.
double ssim(const RealGrid& a, const RealGrid& b);
/// Binary cross-entropy with pred clamped to [eps, 1 - eps].
double bce(const RealGrid& pred, const RealGrid& target);
/// Elementwise value >= t -> 1, else 0.
RealGrid threshold(const RealGrid& image, double t = 0.5);

struct MetricsReport {
  std::string name;
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double bce = 0.0;

  bool identical() const noexcept;
  Json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

MetricsReport compare(const RealGrid& estimate, const RealGrid& reference, std::string name = {});

/// "identical" for infinite PSNR, otherwise a round-trip decimal.
std::string format_psnr(double value);
std::string format_number(double value);

}  // namespace apsynth
