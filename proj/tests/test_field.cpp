#include <doctest.h>

#include <cmath>
#include <numbers>

#include "apsynth/field.hpp"
#include "test_util.hpp"

using namespace apsynth;

namespace {

// Direct O(N^4) DFT, orthonormal.
ComplexField naive_dft(const ComplexField& x, int sign) {
  const int w = x.width(), h = x.height();
  ComplexField out(w, h);
  for (int kr = 0; kr < h; ++kr)
    for (int kc = 0; kc < w; ++kc) {
      Complex acc = 0.0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double ph = sign * 2.0 * std::numbers::pi * (double(kr) * r / h + double(kc) * c / w);
          acc += x(r, c) * std::polar(1.0, ph);
        }
      out(kr, kc) = acc / std::sqrt(double(w) * h);
    }
  return out;
}

double max_abs_diff(const ComplexField& a, const ComplexField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.storage()[i] - b.storage()[i]));
  return m;
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("fft2 of a constant 4x4 field has a single DC bin of 4") {
  const ComplexField f(4, 4, Complex(1.0, 0.0));
  const ComplexField s = fft2(f);
  CHECK(std::abs(s(0, 0) - Complex(4.0, 0.0)) < 1e-12);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s.storage()[i]) < 1e-12);
}

TEST_CASE("fft2 of an 8x8 impulse is flat with magnitude 1/8") {
  ComplexField f(8, 8);
  f(0, 0) = 1.0;
  for (const auto& z : fft2(f)) CHECK(std::abs(z) == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("fft2 and ifft2 agree with a direct DFT") {
  const auto x = testutil::random_field(6, 5, 11);
  CHECK(max_abs_diff(fft2(x), naive_dft(x, -1)) < 1e-12);
  CHECK(max_abs_diff(ifft2(x), naive_dft(x, +1)) < 1e-12);
}

TEST_CASE("round trips and Parseval") {
  const auto x32 = testutil::random_field(32, 32, 1);
  CHECK(max_abs_diff(ifft2(fft2(x32)), x32) < 1e-10);
  const auto x16 = testutil::random_field(16, 16, 2);
  CHECK(max_abs_diff(ifft2(fft2(x16)), x16) < 1e-12);
  CHECK(energy(ifft2(x16)) == doctest::Approx(energy(x16)).epsilon(1e-12));
  CHECK(max_abs_diff(field_from_centered(centered_spectrum(x16)), x16) < 1e-12);
}

TEST_CASE("DC-only spectrum gives a constant field") {
  ComplexField s(8, 8);
  s(0, 0) = 8.0;
  for (const auto& z : ifft2(s)) CHECK(std::abs(z - Complex(1.0, 0.0)) < 1e-12);
}

TEST_CASE("fftshift conventions") {
  Grid<int> g(4, 4, 0);
  g(0, 0) = 1;
  const auto s = fftshift(g);
  CHECK(s(2, 2) == 1);
  CHECK(std::count(s.begin(), s.end(), 1) == 1);

  Grid<int> odd(5, 5);
  for (int i = 0; i < 25; ++i) odd.storage()[i] = i;
  CHECK(ifftshift(fftshift(odd)) == odd);
  CHECK(fftshift(ifftshift(odd)) == odd);

  Grid<int> cb(2, 2, std::vector<int>{1, 2, 3, 4});
  CHECK(fftshift(cb) == Grid<int>(2, 2, std::vector<int>{4, 3, 2, 1}));
}

TEST_CASE("centered crop and pad") {
  CHECK(centered_offset(512, 128) == 192);
  CHECK(centered_offset(512, 128) + 128 == 320);
  const RealGrid ones(4, 4, 1.0);
  CHECK(crop_centered(ones, 2, 2) == RealGrid(2, 2, 1.0));

  // Something supported inside the central 128 window survives crop + pad.
  RealGrid big(512, 512, 0.0);
  for (int r = 200; r < 300; ++r)
    for (int c = 210; c < 310; ++c) big(r, c) = r * 0.001 + c;
  CHECK(pad_centered(crop_centered(big, 128, 128), 512, 512) == big);
  CHECK_THROWS_AS(crop_centered(ones, 5, 2), InvalidArgument);
  CHECK_THROWS_AS(pad_centered(ones, 3, 8), InvalidArgument);
}

TEST_CASE("bicubic resampling") {
  SUBCASE("constant stays constant") {
    const RealGrid c(3, 5, 0.37);
    for (double v : resize_bicubic(c, 11, 7)) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
  }
  SUBCASE("identity at equal size") {
    const auto g = testutil::random_grid(9, 7, 3);
    const auto out = resize_bicubic(g, 9, 7);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(out.storage()[i] == doctest::Approx(g.storage()[i]).epsilon(1e-14));
  }
  SUBCASE("2x2 -> 4x4 matches a Catmull-Rom matrix-form reference") {
    // Reference: Catmull-Rom spline in matrix form, pixel-center alignment,
    // edge-clamped samples (computed independently).
    const double expect[4][4] = {
        {0.02018432617187499, 0.24854736328125004, 0.7444213867187501, 0.9727844238281247},
        {0.11182861328125, 0.3028076171875, 0.7175048828125001, 0.9084838867187499},
        {0.31082763671875, 0.4206298828125001, 0.6590576171875, 0.7688598632812498},
        {0.40247192382812497, 0.47489013671874997, 0.63214111328125, 0.7045593261718749}};
    const RealGrid in(2, 2, std::vector<double>{0.1, 0.9, 0.4, 0.7});
    const auto out = upsample_bicubic(IntensityImage(in), 4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) CHECK(out(r, c) == doctest::Approx(expect[r][c]).epsilon(1e-12));
  }
  SUBCASE("upsampling rejects smaller outputs") {
    CHECK_THROWS_AS(upsample_bicubic(IntensityImage(4, 4), 3, 4), InvalidArgument);
  }
  SUBCASE("cubic kernel") {
    CHECK(cubic_kernel(0.0) == 1.0);
    CHECK(cubic_kernel(1.0) == 0.0);
    CHECK(cubic_kernel(2.0) == 0.0);
    CHECK(cubic_kernel(0.5) == doctest::Approx(0.5625));
    CHECK(cubic_kernel(1.5) == doctest::Approx(-0.0625));
  }
}

TEST_CASE("intensity image validation") {
  IntensityImage ok(2, 2, 0.5);
  CHECK_NOTHROW(ok.validate());
  IntensityImage high(2, 2, 1.5);
  CHECK_THROWS_AS(high.validate(), InvalidArgument);
  IntensityImage counts(2, 2, 1.5, ValueScale::photon_counts);
  CHECK_NOTHROW(counts.validate());
  IntensityImage neg(2, 2, 0.5);
  neg(0, 1) = -0.1;
  CHECK_THROWS_AS(neg.validate(), InvalidArgument);
  CHECK_THROWS_AS(RealGrid(2, 2, std::vector<double>{1.0}), InvalidArgument);
}

}  // TEST_SUITE
