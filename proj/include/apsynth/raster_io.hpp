#pragma once

// CAFP tensor files and grayscale PNG I/O.
//
// CAFP layout (all integers little-endian):
//   magic   4 bytes  "CAFP"
//   version u16      currently 1
//   dtype   u8       0=f32 1=f64 2=c64 3=c128
//   rank    u8
//   dims    u32 x rank
//   payload row-major values, little-endian; complex = (re, im) pairs

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "apsynth/field.hpp"

namespace apsynth {

enum class DType : std::uint8_t { f32 = 0, f64 = 1, c64 = 2, c128 = 3 };

std::size_t dtype_size(DType dtype);
std::string_view dtype_name(DType dtype);

inline constexpr std::uint16_t kTensorVersion = 1;

struct RasterTensor {
  DType dtype = DType::f64;
  std::vector<std::uint32_t> dims;
  std::vector<std::byte> payload;

  std::uint64_t element_count() const;
  bool operator==(const RasterTensor&) const = default;

  static RasterTensor from_real(const RealGrid& grid, DType dtype = DType::f32);
  static RasterTensor from_complex(const ComplexField& field, DType dtype = DType::c128);
  /// Build from raw element values (real dtypes) in row-major order.
  static RasterTensor from_values(std::span<const double> values,
                                  std::vector<std::uint32_t> dims, DType dtype);

  /// Rank-2 real tensor (dims = {height, width}) as a grid.
  RealGrid to_real_grid() const;
  /// Rank-2 complex tensor as a field.
  ComplexField to_complex_field() const;
};

std::vector<std::byte> encode_tensor(const RasterTensor& tensor);
RasterTensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor(const RasterTensor& tensor, const std::filesystem::path& path);
RasterTensor read_tensor(const std::filesystem::path& path);

/// Loads an 8- or 16-bit PNG as a normalized grayscale image. Color images
/// are reduced with luma weights 0.299 / 0.587 / 0.114; alpha is ignored.
IntensityImage load_png(const std::filesystem::path& path);

/// Width and height from the PNG header, without decoding pixels.
std::pair<int, int> png_size(const std::filesystem::path& path);

/// Writes a grayscale PNG; values are clamped to [0, 1] and quantized by
/// rounding to the nearest code.
void save_png(const IntensityImage& image, const std::filesystem::path& path,
              int bit_depth = 8);
void save_png(const RealGrid& image, const std::filesystem::path& path, int bit_depth = 8);

}  // namespace apsynth
