#include <doctest.h>

#include <cstring>
#include <fstream>

#include "apsynth/raster_io.hpp"
#include "test_util.hpp"

using namespace apsynth;

TEST_SUITE("raster_io") {

TEST_CASE("8-bit PNG round trip is bit exact") {
  const auto dir = testutil::scratch("png8");
  RealGrid g(7, 5);
  for (std::size_t i = 0; i < g.size(); ++i) g.storage()[i] = double((i * 37) % 256) / 255.0;
  save_png(g, dir / "a.png", 8);
  const auto back = load_png(dir / "a.png");
  CHECK(back.scale == ValueScale::normalized01);
  CHECK(back.pixels == g);
  save_png(back, dir / "b.png", 8);
  CHECK(testutil::read_bytes(dir / "a.png") == testutil::read_bytes(dir / "b.png"));
  CHECK(png_size(dir / "a.png") == std::pair{7, 5});
}

TEST_CASE("16-bit PNG and value mapping") {
  const auto dir = testutil::scratch("png16");
  RealGrid g(3, 2, std::vector<double>{0.0, 1.0, 0.5, 1.0 / 65535.0, 0.25, 1.0});
  save_png(g, dir / "a.png", 16);
  const auto back = load_png(dir / "a.png");
  CHECK(back(0, 1) == 1.0);
  CHECK(back(1, 0) == doctest::Approx(1.0 / 65535.0));
  CHECK(back(0, 2) == doctest::Approx(std::round(0.5 * 65535) / 65535.0));

  save_png(RealGrid(4, 4, 0.0), dir / "black.png");
  for (double v : load_png(dir / "black.png").pixels) CHECK(v == 0.0);
}

TEST_CASE("PNG errors") {
  const auto dir = testutil::scratch("pngerr");
  std::ofstream(dir / "bad.png") << "not a png";
  CHECK_THROWS_AS(load_png(dir / "bad.png"), IoError);
  CHECK_THROWS_AS(load_png(dir / "missing.png"), IoError);
  CHECK_THROWS_AS(save_png(RealGrid(2, 2), dir / "x.png", 12), InvalidArgument);
}

TEST_CASE("tensor round trips") {
  const auto dir = testutil::scratch("tensor");
  SUBCASE("c128 rank-3 bit exact") {
    RasterTensor t;
    t.dtype = DType::c128;
    t.dims = {2, 3, 4};
    const auto f = testutil::random_field(24, 1, 5);
    t.payload.resize(24 * 16);
    std::memcpy(t.payload.data(), f.storage().data(), t.payload.size());
    write_tensor(t, dir / "c.cafp");
    const RasterTensor back = read_tensor(dir / "c.cafp");
    CHECK(back == t);
    CHECK(back.element_count() == 24);
  }
  SUBCASE("f64 grid and c64 field") {
    const auto g = testutil::random_grid(5, 3, 9);
    CHECK(decode_tensor(encode_tensor(RasterTensor::from_real(g, DType::f64))).to_real_grid() == g);
    const auto f = testutil::random_field(4, 4, 9);
    const auto back = decode_tensor(encode_tensor(RasterTensor::from_complex(f, DType::c64))).to_complex_field();
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(back.storage()[i].real() == float(f.storage()[i].real()));
      CHECK(back.storage()[i].imag() == float(f.storage()[i].imag()));
    }
  }
  SUBCASE("zero-element tensor") {
    RasterTensor t;
    t.dtype = DType::f32;
    t.dims = {0, 5};
    const auto bytes = encode_tensor(t);
    CHECK(bytes.size() == 8 + 8);
    CHECK(decode_tensor(bytes) == t);
  }
}

TEST_CASE("tensor header layout and errors") {
  const auto bytes = encode_tensor(RasterTensor::from_real(RealGrid(2, 1, 1.0), DType::f32));
  REQUIRE(bytes.size() == 4 + 2 + 1 + 1 + 8 + 8);
  CHECK(char(bytes[0]) == 'C');
  CHECK(char(bytes[3]) == 'P');
  CHECK(std::to_integer<int>(bytes[4]) == 1);  // version, little endian
  CHECK(std::to_integer<int>(bytes[6]) == 0);  // f32
  CHECK(std::to_integer<int>(bytes[7]) == 2);  // rank

  auto bad = bytes;
  bad[0] = std::byte{'X'};
  CHECK_THROWS_AS(decode_tensor(bad), IoError);
  bad = bytes;
  bad[4] = std::byte{9};
  CHECK_THROWS_AS(decode_tensor(bad), IoError);
  bad = bytes;
  bad[6] = std::byte{7};
  CHECK_THROWS_AS(decode_tensor(bad), IoError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_tensor(bad), IoError);
  bad = bytes;
  bad.push_back(std::byte{0});
  CHECK_THROWS_AS(decode_tensor(bad), IoError);
}

}  // TEST_SUITE
