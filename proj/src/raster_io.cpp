#include "apsynth/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace apsynth {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'A', 'F', 'P'};

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  out.insert(out.end(), raw.begin(), raw.end());
}

template <typename T>
T get_le(const std::byte* src) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

bool is_complex(DType d) { return d == DType::c64 || d == DType::c128; }

// Reads scalar component `i` (complex tensors have two per element).
double component(const RasterTensor& t, std::size_t i) {
  const std::byte* p = t.payload.data();
  switch (t.dtype) {
    case DType::f32:
    case DType::c64:
      return get_le<float>(p + i * 4);
    case DType::f64:
    case DType::c128:
      return get_le<double>(p + i * 8);
  }
  return 0.0;
}

void append_component(std::vector<std::byte>& out, DType dtype, double v) {
  if (dtype == DType::f32 || dtype == DType::c64) {
    put_le(out, static_cast<float>(v));
  } else {
    put_le(out, v);
  }
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::c64: return 8;
    case DType::c128: return 16;
  }
  throw IoError("unknown dtype");
}

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::c64: return "c64";
    case DType::c128: return "c128";
  }
  return "?";
}

std::uint64_t RasterTensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

RasterTensor RasterTensor::from_values(std::span<const double> values,
                                       std::vector<std::uint32_t> dims, DType dtype) {
  if (is_complex(dtype)) {
    throw InvalidArgument("from_values expects a real dtype");
  }
  RasterTensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  if (t.element_count() != values.size()) {
    throw InvalidArgument("value count does not match tensor dims");
  }
  t.payload.reserve(values.size() * dtype_size(dtype));
  for (double v : values) append_component(t.payload, dtype, v);
  return t;
}

RasterTensor RasterTensor::from_real(const RealGrid& grid, DType dtype) {
  return from_values(grid.data(),
                     {static_cast<std::uint32_t>(grid.height()),
                      static_cast<std::uint32_t>(grid.width())},
                     dtype);
}

RasterTensor RasterTensor::from_complex(const ComplexField& field, DType dtype) {
  if (!is_complex(dtype)) {
    throw InvalidArgument("from_complex expects a complex dtype");
  }
  RasterTensor t;
  t.dtype = dtype;
  t.dims = {static_cast<std::uint32_t>(field.height()),
            static_cast<std::uint32_t>(field.width())};
  t.payload.reserve(field.size() * dtype_size(dtype));
  for (const auto& v : field) {
    append_component(t.payload, dtype, v.real());
    append_component(t.payload, dtype, v.imag());
  }
  return t;
}

RealGrid RasterTensor::to_real_grid() const {
  if (dims.size() != 2 || is_complex(dtype)) {
    throw IoError("tensor is not a rank-2 real array");
  }
  RealGrid g(static_cast<int>(dims[1]), static_cast<int>(dims[0]));
  for (std::size_t i = 0; i < g.size(); ++i) g.storage()[i] = component(*this, i);
  return g;
}

ComplexField RasterTensor::to_complex_field() const {
  if (dims.size() != 2 || !is_complex(dtype)) {
    throw IoError("tensor is not a rank-2 complex array");
  }
  ComplexField f(static_cast<int>(dims[1]), static_cast<int>(dims[0]));
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.storage()[i] = Complex(component(*this, 2 * i), component(*this, 2 * i + 1));
  }
  return f;
}

std::vector<std::byte> encode_tensor(const RasterTensor& tensor) {
  if (tensor.dims.size() > 255) throw InvalidArgument("tensor rank exceeds 255");
  if (tensor.payload.size() != tensor.element_count() * dtype_size(tensor.dtype)) {
    throw InvalidArgument("tensor payload length does not match dims");
  }
  std::vector<std::byte> out;
  out.reserve(8 + 4 * tensor.dims.size() + tensor.payload.size());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le(out, kTensorVersion);
  put_le(out, static_cast<std::uint8_t>(tensor.dtype));
  put_le(out, static_cast<std::uint8_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_le(out, d);
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
  return out;
}

RasterTensor decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < 8) throw IoError("tensor file truncated in header");
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::byte>(kMagic[i])) {
      throw IoError("bad tensor magic (expected CAFP)");
    }
  }
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kTensorVersion) throw IoError("unsupported tensor version");
  const auto code = get_le<std::uint8_t>(bytes.data() + 6);
  if (code > 3) throw IoError("unknown tensor dtype");
  const auto rank = get_le<std::uint8_t>(bytes.data() + 7);

  RasterTensor t;
  t.dtype = static_cast<DType>(code);
  std::size_t pos = 8;
  if (bytes.size() < pos + 4u * rank) throw IoError("tensor file truncated in dims");
  for (int i = 0; i < rank; ++i, pos += 4) {
    t.dims.push_back(get_le<std::uint32_t>(bytes.data() + pos));
  }
  const std::uint64_t expected = t.element_count() * dtype_size(t.dtype);
  const std::uint64_t available = bytes.size() - pos;
  if (available < expected) throw IoError("tensor payload truncated");
  if (available > expected) throw IoError("tensor payload has trailing bytes");
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return t;
}

void write_tensor(const RasterTensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

RasterTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

// --- PNG --------------------------------------------------------------------

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw IoError(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

std::pair<int, int> png_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char head[24];
  in.read(reinterpret_cast<char*>(head), sizeof head);
  if (in.gcount() != sizeof head || png_sig_cmp(head, 0, 8) != 0 ||
      std::memcmp(head + 12, "IHDR", 4) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  auto be32 = [&](int o) {
    return static_cast<int>((std::uint32_t{head[o]} << 24) | (std::uint32_t{head[o + 1]} << 16) |
                            (std::uint32_t{head[o + 2]} << 8) | std::uint32_t{head[o + 3]});
  };
  return {be32(16), be32(20)};
}

IntensityImage load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                           png_warning_fn);
  if (!png) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  const bool gray = (color & PNG_COLOR_MASK_COLOR) == 0;
  if (gray && depth != 8 && depth != 16) {
    throw IoError("unsupported PNG bit depth " + std::to_string(depth) + " in " +
                  path.string());
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (depth == 16) png_set_swap(png);  // native little-endian u16 rows
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);

  std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) rows[r] = buffer.data() + rowbytes * r;
  png_read_image(png, rows.data());

  const double max_code = out_depth == 16 ? 65535.0 : 255.0;
  auto sample = [&](int r, int c, int ch) -> double {
    const png_byte* row = rows[r];
    if (out_depth == 16) {
      std::uint16_t v;
      std::memcpy(&v, row + 2 * (c * channels + ch), 2);
      return v;
    }
    return row[c * channels + ch];
  };

  IntensityImage image(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double v;
      if (channels >= 3) {
        v = 0.299 * sample(r, c, 0) + 0.587 * sample(r, c, 1) + 0.114 * sample(r, c, 2);
      } else {
        v = sample(r, c, 0);
      }
      image(r, c) = std::clamp(v / max_code, 0.0, 1.0);
    }
  }
  return image;
}

void save_png(const RealGrid& image, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("PNG bit depth must be 8 or 16");
  if (image.empty()) throw InvalidArgument("cannot write an empty PNG");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                            png_warning_fn);
  if (!png) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const double max_code = bit_depth == 16 ? 65535.0 : 255.0;
  const int bytes_per = bit_depth / 8;
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * bytes_per);
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const double v = std::isfinite(image(r, c)) ? std::clamp(image(r, c), 0.0, 1.0) : 0.0;
      const auto code = static_cast<unsigned>(std::lround(v * max_code));
      if (bit_depth == 16) {
        row[2 * c] = static_cast<png_byte>(code >> 8);  // PNG stores big-endian
        row[2 * c + 1] = static_cast<png_byte>(code & 0xFF);
      } else {
        row[c] = static_cast<png_byte>(code);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

void save_png(const IntensityImage& image, const std::filesystem::path& path, int bit_depth) {
  save_png(image.pixels, path, bit_depth);
}

}  // namespace apsynth
