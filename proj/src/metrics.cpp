#include "apsynth/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace apsynth {

namespace {

void require_same(const RealGrid& a, const RealGrid& b) {
  if (!a.same_shape(b)) throw InvalidArgument("metric inputs have different dimensions");
  if (a.empty()) throw InvalidArgument("metric inputs are empty");
}

constexpr int kRadius = 5;
constexpr int kWin = 2 * kRadius + 1;

std::array<double, kWin> gaussian_taps() {
  std::array<double, kWin> w{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double x = i - kRadius;
    w[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Gaussian filter evaluated only at positions whose window fits the image.
RealGrid filter_valid(const RealGrid& in, const std::array<double, kWin>& w) {
  const int ow = in.width() - 2 * kRadius;
  const int oh = in.height() - 2 * kRadius;
  RealGrid rows(ow, in.height());
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += w[k] * in(r, c + k);
      rows(r, c) = acc;
    }
  }
  RealGrid out(ow, oh);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += w[k] * rows(r + k, c);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

double mse(const RealGrid& a, const RealGrid& b) {
  require_same(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.storage()[i] - b.storage()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const RealGrid& a, const RealGrid& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const RealGrid& a, const RealGrid& b) {
  require_same(a, b);
  if (a.width() < kWin || a.height() < kWin) {
    throw InvalidArgument("ssim needs images of at least 11×11");
  }
  const auto w = gaussian_taps();
  RealGrid aa(a.width(), a.height()), bb(a.width(), a.height()), ab(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.storage()[i];
    const double y = b.storage()[i];
    aa.storage()[i] = x * x;
    bb.storage()[i] = y * y;
    ab.storage()[i] = x * y;
  }
  const RealGrid ux = filter_valid(a, w);
  const RealGrid uy = filter_valid(b, w);
  const RealGrid uxx = filter_valid(aa, w);
  const RealGrid uyy = filter_valid(bb, w);
  const RealGrid uxy = filter_valid(ab, w);
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double acc = 0.0;
  for (std::size_t i = 0; i < ux.size(); ++i) {
    const double mx = ux.storage()[i];
    const double my = uy.storage()[i];
    const double vx = uxx.storage()[i] - mx * mx;
    const double vy = uyy.storage()[i] - my * my;
    const double cxy = uxy.storage()[i] - mx * my;
    acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
           ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(ux.size());
}

double bce(const RealGrid& pred, const RealGrid& target) {
  require_same(pred, target);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred.storage()[i], kBceEpsilon, 1.0 - kBceEpsilon);
    const double t = target.storage()[i];
    acc += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(pred.size());
}

RealGrid threshold(const RealGrid& image, double t) {
  RealGrid out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    out.storage()[i] = image.storage()[i] >= t ? 1.0 : 0.0;
  }
  return out;
}

bool MetricsReport::identical() const noexcept { return std::isinf(psnr); }

std::string format_number(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

std::string format_psnr(double value) {
  return std::isinf(value) ? std::string("identical") : format_number(value);
}

Json MetricsReport::to_json() const {
  Json doc;
  if (!name.empty()) doc["name"] = name;
  doc["mse"] = mse;
  if (identical()) {
    doc["psnr"] = "identical";
  } else {
    doc["psnr"] = psnr;
  }
  doc["ssim"] = ssim;
  doc["bce"] = bce;
  return doc;
}

std::string MetricsReport::csv_header() { return "name,mse,psnr,ssim,bce"; }

std::string MetricsReport::csv_row() const {
  return name + "," + format_number(mse) + "," + format_psnr(psnr) + "," + format_number(ssim) +
         "," + format_number(bce);
}

MetricsReport compare(const RealGrid& estimate, const RealGrid& reference, std::string name) {
  MetricsReport r;
  r.name = std::move(name);
  r.mse = mse(estimate, reference);
  r.psnr = psnr(estimate, reference);
  r.ssim = ssim(estimate, reference);
  r.bce = bce(estimate, reference);
  return r;
}

}  // namespace apsynth
