#pragma once

// Training-data construction: random patches from natural images, synthetic
// binary shape patterns with augmentation, and (object, stack) pairs on disk.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "apsynth/aperture.hpp"
#include "apsynth/forward.hpp"
#include "apsynth/json_fwd.hpp"

namespace apsynth {

// --- natural-image patches --------------------------------------------------

/// Where a patch comes from. Patches are identified by (source, x, y).
struct PatchRef {
  std::string source;  ///< PNG path
  int x = 0;           ///< left column in the source
  int y = 0;           ///< top row in the source
  bool operator==(const PatchRef&) const = default;
};

struct Patch {
  PatchRef ref;
  IntensityImage image;
};

/// Sorted list of *.png files directly inside each directory.
std::vector<std::filesystem::path> list_png_sources(const std::vector<std::filesystem::path>& dirs);

/// Chooses `count` distinct patch positions uniformly among all valid
/// (source, offset) pairs. Throws InvalidArgument when fewer exist.
std::vector<PatchRef> sample_patch_refs(const std::vector<std::filesystem::path>& image_dirs,
                                        int patch_size, std::size_t count, std::uint64_t seed);

/// Grayscale [0,1] crop of one reference.
IntensityImage load_patch(const PatchRef& ref, int patch_size);

/// sample_patch_refs + load_patch.
std::vector<Patch> crop_patches(const std::vector<std::filesystem::path>& image_dirs,
                                int patch_size, std::size_t count, std::uint64_t seed);

// --- binary patterns ----------------------------------------------------------

enum class ShapeKind { line, polygon, ellipse, stroke };
inline constexpr int kShapeKinds = 4;

struct PatternConfig {
  int width = 768;
  int height = 576;
  int pad_width = 800;
  int pad_height = 600;
  int min_shapes = 3;
  int max_shapes = 12;

  void validate() const;
};

struct PatternSample {
  RealGrid image;  ///< pad_width × pad_height, values in {0, 1}
  int shape_count = 0;
  std::array<int, kShapeKinds> per_kind{};
};

/// Sample i depends only on (seed, i).
std::vector<PatternSample> gen_binary_patterns(std::size_t count, const PatternConfig& config,
                                               std::uint64_t seed, int threads = 1);
PatternSample gen_binary_pattern(const PatternConfig& config, std::uint64_t seed);

// --- augmentation -----------------------------------------------------------

enum class AugmentOp { rotate, flip, scale };

struct AugmentConfig {
  std::vector<AugmentOp> ops{AugmentOp::rotate, AugmentOp::flip, AugmentOp::scale};
  int factor = 1;                  ///< outputs per input; copy 0 is the original
  double max_rotation_deg = 180.0; ///< uniform in [-max, max]
  double min_scale = 0.8;
  double max_scale = 1.25;

  void validate() const;
};

/// Nearest-neighbour geometric primitives (binary images stay binary).
RealGrid flip_horizontal(const RealGrid& image);
RealGrid flip_vertical(const RealGrid& image);
RealGrid rotate_image(const RealGrid& image, double degrees);
RealGrid scale_image(const RealGrid& image, double factor);

/// factor × inputs.size() outputs, input-major order.
std::vector<RealGrid> augment(const std::vector<RealGrid>& images, const AugmentConfig& config,
                              std::uint64_t seed, int threads = 1);

/// Area-weighted downsampling to an arbitrary smaller size.
RealGrid area_downsample(const RealGrid& image, int out_w, int out_h);

// --- datasets -------------------------------------------------------------------

struct SplitCounts {
  std::size_t train = 200;
  std::size_t val = 25;
  std::size_t test = 25;
  std::size_t total() const noexcept { return train + val + test; }
  bool operator==(const SplitCounts&) const = default;
};

enum class DatasetPreset { desk, sim512, slm };

struct DatasetConfig {
  std::string name = "desk";
  DatasetPreset preset = DatasetPreset::desk;
  std::vector<std::string> source_dirs;  ///< natural-image presets only
  int patch_size = 256;
  SplitCounts counts;
  std::uint64_t seed = 0;
  SnapshotSchedule layout;               ///< natural-image presets only
  std::optional<PhotonModel> photons;
  // slm preset
  PatternConfig patterns;
  AugmentConfig augmentation{{}, 1};
  std::size_t pattern_sources = 0;       ///< base patterns before augmentation (0: total)
  int lowres_width = 120;
  int lowres_height = 90;

  /// Preset defaults: desk 256 px, 200/25/25, strategy 4 at 256;
  /// sim512 512 px, 15000/2500/2500, strategy 4 at 512;
  /// slm 800×600 binary targets with 120×90 low-resolution views.
  static DatasetConfig preset_defaults(DatasetPreset preset);
  void validate() const;
};

std::string preset_name(DatasetPreset preset);
DatasetPreset parse_preset(const std::string& name);
SplitCounts parse_counts(const std::string& text);

struct SampleRecord {
  std::string id;
  std::string split;  ///< train | val | test
  std::optional<PatchRef> patch;
  std::uint64_t photon_seed = 0;
};

/// One directory per sample under out_dir/samples: gt.png + stack/.
/// Noisy stacks use a per-sample seed derived from photons->seed.
std::vector<SampleRecord> build_pairs(const std::vector<PatchRef>& patches, int patch_size,
                                      const SnapshotSchedule& layout,
                                      const std::optional<PhotonModel>& photons,
                                      const std::filesystem::path& out_dir, int threads = 1);

/// Materializes a full dataset; manifest.json is written last.
Json build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                   int threads = 1);

Json dataset_config_to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const Json& doc);
/// Reads out_dir's manifest config and rebuilds the dataset into `target`.
Json regenerate_dataset(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& target, int threads = 1);

}  // namespace apsynth
