#include "apsynth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "apsynth/parallel.hpp"
#include "apsynth/raster_io.hpp"

namespace apsynth {

namespace fs = std::filesystem;

// --- natural-image patches --------------------------------------------------

std::vector<fs::path> list_png_sources(const std::vector<fs::path>& dirs) {
  std::vector<fs::path> out;
  for (const auto& dir : dirs) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("source directory not found: " + dir.string());
    std::vector<fs::path> here;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".png") here.push_back(entry.path());
    }
    std::sort(here.begin(), here.end());
    out.insert(out.end(), here.begin(), here.end());
  }
  return out;
}

std::vector<PatchRef> sample_patch_refs(const std::vector<fs::path>& image_dirs, int patch_size,
                                        std::size_t count, std::uint64_t seed) {
  if (patch_size < 1) throw InvalidArgument("patch size must be positive");
  if (count == 0) return {};
  const auto sources = list_png_sources(image_dirs);
  struct Source {
    std::string path;
    int span_x;
    std::uint64_t offsets;
  };
  std::vector<Source> usable;
  std::vector<std::uint64_t> prefix{0};
  for (const auto& path : sources) {
    const auto [w, h] = png_size(path);
    if (w < patch_size || h < patch_size) continue;
    const int sx = w - patch_size + 1;
    const auto n = static_cast<std::uint64_t>(sx) * static_cast<std::uint64_t>(h - patch_size + 1);
    usable.push_back({path.string(), sx, n});
    prefix.push_back(prefix.back() + n);
  }
  const std::uint64_t total = prefix.back();
  if (count > total) {
    throw InvalidArgument("insufficient source pixels: " + std::to_string(total) +
                          " distinct " + std::to_string(patch_size) + "-pixel patches available, " +
                          std::to_string(count) + " requested");
  }
  // Floyd's sampling without replacement, then a seeded shuffle for split order.
  std::mt19937_64 rng(seed);
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> order(chosen.begin(), chosen.end());
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<PatchRef> refs;
  refs.reserve(order.size());
  for (std::uint64_t g : order) {
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), g);
    const auto s = static_cast<std::size_t>(it - prefix.begin() - 1);
    const std::uint64_t local = g - prefix[s];
    const auto span = static_cast<std::uint64_t>(usable[s].span_x);
    refs.push_back({usable[s].path, static_cast<int>(local % span), static_cast<int>(local / span)});
  }
  return refs;
}

IntensityImage load_patch(const PatchRef& ref, int patch_size) {
  const IntensityImage src = load_png(ref.source);
  if (ref.x < 0 || ref.y < 0 || ref.x + patch_size > src.width() ||
      ref.y + patch_size > src.height()) {
    throw InvalidArgument("patch does not fit inside " + ref.source);
  }
  IntensityImage out(patch_size, patch_size);
  for (int r = 0; r < patch_size; ++r) {
    for (int c = 0; c < patch_size; ++c) out(r, c) = src(ref.y + r, ref.x + c);
  }
  return out;
}

std::vector<Patch> crop_patches(const std::vector<fs::path>& image_dirs, int patch_size,
                                std::size_t count, std::uint64_t seed) {
  std::vector<Patch> out;
  for (auto& ref : sample_patch_refs(image_dirs, patch_size, count, seed)) {
    IntensityImage img = load_patch(ref, patch_size);
    out.push_back({std::move(ref), std::move(img)});
  }
  return out;
}

// --- binary patterns ----------------------------------------------------------

void PatternConfig::validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("pattern size must be positive");
  if (pad_width < width || pad_height < height) {
    throw InvalidArgument("pattern padding must not be smaller than the pattern");
  }
  if (min_shapes < 0 || max_shapes < min_shapes) throw InvalidArgument("bad shape-count range");
}

namespace {

struct Pt {
  double x;
  double y;
};

class Canvas {
 public:
  Canvas(int w, int h) : img_(w, h, 0.0) {}

  // Calls f(r, c, x, y) for pixel centers inside the clamped bounding box.
  template <typename F>
  void scan(double x0, double y0, double x1, double y1, F&& f) {
    const int c0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int c1 = std::min(img_.width() - 1, static_cast<int>(std::ceil(x1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int r1 = std::min(img_.height() - 1, static_cast<int>(std::ceil(y1)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        if (f(c + 0.5, r + 0.5)) img_(r, c) = 1.0;
      }
    }
  }

  void segment(Pt a, Pt b, double thickness) {
    const double h = 0.5 * thickness;
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    scan(std::min(a.x, b.x) - h, std::min(a.y, b.y) - h, std::max(a.x, b.x) + h,
         std::max(a.y, b.y) + h, [&](double x, double y) {
           double t = len2 > 0.0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
           t = std::clamp(t, 0.0, 1.0);
           const double ex = a.x + t * dx - x;
           const double ey = a.y + t * dy - y;
           return ex * ex + ey * ey <= h * h;
         });
  }

  void polygon(const std::vector<Pt>& v) {
    double x0 = v[0].x, x1 = v[0].x, y0 = v[0].y, y1 = v[0].y;
    for (const auto& p : v) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    scan(x0, y0, x1, y1, [&](double x, double y) {
      bool inside = false;
      for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > y) != (v[j].y > y) &&
            x < (v[j].x - v[i].x) * (y - v[i].y) / (v[j].y - v[i].y) + v[i].x) {
          inside = !inside;
        }
      }
      return inside;
    });
  }

  void ellipse(Pt c, double a, double b, double theta) {
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double ext = std::max(a, b);
    scan(c.x - ext, c.y - ext, c.x + ext, c.y + ext, [&](double x, double y) {
      const double dx = x - c.x;
      const double dy = y - c.y;
      const double u = ct * dx + st * dy;
      const double w = -st * dx + ct * dy;
      return (u * u) / (a * a) + (w * w) / (b * b) <= 1.0;
    });
  }

  RealGrid& image() { return img_; }

 private:
  RealGrid img_;
};

}  // namespace

PatternSample gen_binary_pattern(const PatternConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const double w = config.width;
  const double h = config.height;
  const double m = std::min(w, h);
  auto point = [&] { return Pt{uni(0.0, w), uni(0.0, h)}; };

  Canvas canvas(config.width, config.height);
  PatternSample out;
  out.shape_count = pick(config.min_shapes, config.max_shapes);
  for (int s = 0; s < out.shape_count; ++s) {
    const auto kind = static_cast<ShapeKind>(pick(0, kShapeKinds - 1));
    ++out.per_kind[static_cast<std::size_t>(kind)];
    switch (kind) {
      case ShapeKind::line: {
        const Pt a = point();
        const Pt b = point();
        canvas.segment(a, b, uni(2.0, 12.0));
        break;
      }
      case ShapeKind::polygon: {
        const Pt c = point();
        const double radius = uni(0.05, 0.25) * m;
        const int sides = pick(3, 7);
        std::vector<double> angles(static_cast<std::size_t>(sides));
        for (double& a : angles) a = uni(0.0, 2.0 * std::numbers::pi);
        std::sort(angles.begin(), angles.end());
        std::vector<Pt> verts;
        for (double a : angles) {
          const double r = uni(0.4, 1.0) * radius;
          verts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
        }
        canvas.polygon(verts);
        break;
      }
      case ShapeKind::ellipse: {
        const Pt c = point();
        const double a = uni(0.03, 0.2) * m;
        const double b = uni(0.03, 0.2) * m;
        canvas.ellipse(c, a, b, uni(0.0, std::numbers::pi));
        break;
      }
      case ShapeKind::stroke: {
        Pt p = point();
        double dir = uni(0.0, 2.0 * std::numbers::pi);
        const double thick = uni(2.0, 5.0);
        const int segs = pick(2, 5);
        for (int i = 0; i < segs; ++i) {
          const double len = uni(0.03, 0.12) * m;
          const Pt q{p.x + len * std::cos(dir), p.y + len * std::sin(dir)};
          canvas.segment(p, q, thick);
          p = q;
          dir += uni(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
        }
        break;
      }
    }
  }
  out.image = pad_centered(canvas.image(), config.pad_width, config.pad_height);
  return out;
}

std::vector<PatternSample> gen_binary_patterns(std::size_t count, const PatternConfig& config,
                                               std::uint64_t seed, int threads) {
  config.validate();
  std::vector<PatternSample> out(count);
  parallel_for(count, resolve_threads(threads),
               [&](std::size_t i) { out[i] = gen_binary_pattern(config, derive_seed(seed, i)); });
  return out;
}

// --- augmentation -----------------------------------------------------------

void AugmentConfig::validate() const {
  if (factor < 1) throw InvalidArgument("augmentation factor must be at least 1");
  if (!(min_scale > 0.0) || max_scale < min_scale) throw InvalidArgument("bad scale range");
  if (max_rotation_deg < 0.0) throw InvalidArgument("rotation range must be nonnegative");
}

RealGrid flip_horizontal(const RealGrid& image) {
  RealGrid out(image.width(), image.height());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) out(r, c) = image(r, image.width() - 1 - c);
  }
  return out;
}

RealGrid flip_vertical(const RealGrid& image) {
  RealGrid out(image.width(), image.height());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) out(r, c) = image(image.height() - 1 - r, c);
  }
  return out;
}

namespace {

// Inverse-maps each output pixel through `map` (about the image center) and
// samples the nearest source pixel; zero outside.
template <typename Map>
RealGrid warp_nearest(const RealGrid& image, Map&& map) {
  const double cx = 0.5 * (image.width() - 1);
  const double cy = 0.5 * (image.height() - 1);
  RealGrid out(image.width(), image.height(), 0.0);
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const auto [sx, sy] = map(c - cx, r - cy);
      const long col = std::lround(sx + cx);
      const long row = std::lround(sy + cy);
      if (col >= 0 && col < image.width() && row >= 0 && row < image.height()) {
        out(r, c) = image(static_cast<int>(row), static_cast<int>(col));
      }
    }
  }
  return out;
}

RealGrid augment_one(const RealGrid& image, const AugmentConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RealGrid cur = image;
  for (AugmentOp op : config.ops) {
    switch (op) {
      case AugmentOp::rotate: {
        const double deg = std::uniform_real_distribution<double>(-config.max_rotation_deg,
                                                                  config.max_rotation_deg)(rng);
        cur = rotate_image(cur, deg);
        break;
      }
      case AugmentOp::flip: {
        const int mode = std::uniform_int_distribution<int>(0, 2)(rng);
        if (mode == 1) cur = flip_horizontal(cur);
        if (mode == 2) cur = flip_vertical(cur);
        break;
      }
      case AugmentOp::scale: {
        const double f =
            std::uniform_real_distribution<double>(config.min_scale, config.max_scale)(rng);
        cur = scale_image(cur, f);
        break;
      }
    }
  }
  return cur;
}

}  // namespace

RealGrid rotate_image(const RealGrid& image, double degrees) {
  if (degrees == 0.0) return image;
  const double t = degrees * std::numbers::pi / 180.0;
  const double ct = std::cos(t);
  const double st = std::sin(t);
  return warp_nearest(image, [&](double x, double y) {
    return std::pair{ct * x + st * y, -st * x + ct * y};
  });
}

RealGrid scale_image(const RealGrid& image, double factor) {
  if (!(factor > 0.0)) throw InvalidArgument("scale factor must be positive");
  if (factor == 1.0) return image;
  return warp_nearest(image, [&](double x, double y) { return std::pair{x / factor, y / factor}; });
}

std::vector<RealGrid> augment(const std::vector<RealGrid>& images, const AugmentConfig& config,
                              std::uint64_t seed, int threads) {
  config.validate();
  const auto f = static_cast<std::size_t>(config.factor);
  std::vector<RealGrid> out(images.size() * f);
  parallel_for(out.size(), resolve_threads(threads), [&](std::size_t k) {
    const RealGrid& src = images[k / f];
    out[k] = (k % f == 0) ? src : augment_one(src, config, derive_seed(seed, k));
  });
  return out;
}

RealGrid area_downsample(const RealGrid& image, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1 || out_w > image.width() || out_h > image.height()) {
    throw InvalidArgument("area_downsample: output must be nonempty and not larger than input");
  }
  // weights[o] = list of (input index, fraction of output pixel o).
  auto weights = [](int in, int out) {
    std::vector<std::vector<std::pair<int, double>>> w(static_cast<std::size_t>(out));
    const double s = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double a = o * s;
      const double b = (o + 1) * s;
      for (int i = static_cast<int>(std::floor(a)); i < std::min(in, static_cast<int>(std::ceil(b))); ++i) {
        const double overlap = std::min(b, i + 1.0) - std::max(a, static_cast<double>(i));
        if (overlap > 0.0) w[o].push_back({i, overlap / s});
      }
    }
    return w;
  };
  const auto wx = weights(image.width(), out_w);
  const auto wy = weights(image.height(), out_h);
  RealGrid rows(out_w, image.height(), 0.0);
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < out_w; ++c) {
      double acc = 0.0;
      for (const auto& [i, f] : wx[c]) acc += f * image(r, i);
      rows(r, c) = acc;
    }
  }
  RealGrid out(out_w, out_h, 0.0);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      double acc = 0.0;
      for (const auto& [i, f] : wy[r]) acc += f * rows(i, c);
      out(r, c) = acc;
    }
  }
  return out;
}

// --- datasets -------------------------------------------------------------------

std::string preset_name(DatasetPreset preset) {
  switch (preset) {
    case DatasetPreset::desk: return "desk";
    case DatasetPreset::sim512: return "sim512";
    case DatasetPreset::slm: return "slm";
  }
  return "desk";
}

DatasetPreset parse_preset(const std::string& name) {
  if (name == "desk") return DatasetPreset::desk;
  if (name == "sim512") return DatasetPreset::sim512;
  if (name == "slm") return DatasetPreset::slm;
  throw InvalidArgument("unknown dataset preset '" + name + "'");
}

SplitCounts parse_counts(const std::string& text) {
  SplitCounts c;
  unsigned long long a = 0, b = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%llu,%llu,%llu%c", &a, &b, &d, &tail) != 3 ||
      text.find('-') != std::string::npos) {
    throw InvalidArgument("counts must look like TRAIN,VAL,TEST (got '" + text + "')");
  }
  c.train = a;
  c.val = b;
  c.test = d;
  return c;
}

DatasetConfig DatasetConfig::preset_defaults(DatasetPreset preset) {
  DatasetConfig c;
  c.preset = preset;
  c.name = preset_name(preset);
  switch (preset) {
    case DatasetPreset::desk:
      c.patch_size = 256;
      c.counts = {200, 25, 25};
      c.layout = single_snapshot(build_strategy(4, 256, 0));
      break;
    case DatasetPreset::sim512:
      c.patch_size = 512;
      c.counts = {15000, 2500, 2500};
      c.layout = single_snapshot(build_strategy(4, 512, 0));
      break;
    case DatasetPreset::slm:
      c.patch_size = 0;
      c.counts = {20000, 0, 3200};
      c.pattern_sources = 2665;
      c.augmentation = AugmentConfig{};
      break;
  }
  return c;
}

void DatasetConfig::validate() const {
  if (preset == DatasetPreset::slm) {
    patterns.validate();
    augmentation.validate();
    if (lowres_width < 1 || lowres_height < 1 || lowres_width > patterns.pad_width ||
        lowres_height > patterns.pad_height) {
      throw InvalidArgument("low-resolution view size must fit inside the padded pattern");
    }
    return;
  }
  if (source_dirs.empty()) throw InvalidArgument("dataset needs at least one source directory");
  if (layout.base.field_size != patch_size) {
    throw InvalidArgument("layout field size " + std::to_string(layout.base.field_size) +
                          " does not match patch size " + std::to_string(patch_size));
  }
  if (layout.base.apertures.empty()) throw InvalidArgument("dataset layout has no apertures");
}

namespace {

std::string sample_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

std::string split_of(std::size_t i, const SplitCounts& c) {
  if (i < c.train) return "train";
  if (i < c.train + c.val) return "val";
  return "test";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Json photon_json(const std::optional<PhotonModel>& p) {
  if (!p) return nullptr;
  return Json{{"photons", p->photons}, {"budget", budget_name(p->budget)}, {"seed", p->seed}};
}

std::optional<PhotonModel> photon_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return PhotonModel{j.at("photons").get<double>(), parse_budget(j.at("budget").get<std::string>()),
                     j.at("seed").get<std::uint64_t>()};
}

std::string op_name(AugmentOp op) {
  switch (op) {
    case AugmentOp::rotate: return "rotate";
    case AugmentOp::flip: return "flip";
    case AugmentOp::scale: return "scale";
  }
  return "flip";
}

AugmentOp parse_op(const std::string& s) {
  if (s == "rotate") return AugmentOp::rotate;
  if (s == "flip") return AugmentOp::flip;
  if (s == "scale") return AugmentOp::scale;
  throw InvalidArgument("unknown augmentation '" + s + "'");
}

}  // namespace

std::vector<SampleRecord> build_pairs(const std::vector<PatchRef>& patches, int patch_size,
                                      const SnapshotSchedule& layout,
                                      const std::optional<PhotonModel>& photons,
                                      const fs::path& out_dir, int threads) {
  if (layout.base.field_size != patch_size) {
    throw InvalidArgument("layout field size does not match the patch size");
  }
  std::vector<SampleRecord> records(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    records[i].id = sample_id(i);
    records[i].patch = patches[i];
    if (photons) records[i].photon_seed = derive_seed(photons->seed, i);
  }
  parallel_for(patches.size(), resolve_threads(threads), [&](std::size_t i) {
    const fs::path dir = out_dir / "samples" / records[i].id;
    fs::create_directories(dir);
    const IntensityImage gt = load_patch(patches[i], patch_size);
    save_png(gt, dir / "gt.png", 16);
    std::optional<PhotonModel> p = photons;
    if (p) p->seed = records[i].photon_seed;
    const MeasurementStack stack = simulate(gt, layout, p, {records[i].id, 1});
    save_stack(stack, dir / "stack");
  });
  return records;
}

Json dataset_config_to_json(const DatasetConfig& c) {
  Json doc;
  doc["name"] = c.name;
  doc["preset"] = preset_name(c.preset);
  doc["source_dirs"] = c.source_dirs;
  doc["patch_size"] = c.patch_size;
  doc["counts"] = Json{{"train", c.counts.train}, {"val", c.counts.val}, {"test", c.counts.test}};
  doc["split_seed"] = c.seed;
  if (c.preset == DatasetPreset::slm) {
    doc["layout"] = nullptr;
  } else {
    doc["layout"] = to_json(c.layout);
  }
  doc["photon_model"] = photon_json(c.photons);
  Json ops = Json::array();
  for (AugmentOp op : c.augmentation.ops) ops.push_back(op_name(op));
  doc["augmentations"] = Json{{"ops", ops},
                              {"factor", c.augmentation.factor},
                              {"max_rotation_deg", c.augmentation.max_rotation_deg},
                              {"min_scale", c.augmentation.min_scale},
                              {"max_scale", c.augmentation.max_scale}};
  doc["patterns"] = Json{{"width", c.patterns.width},
                         {"height", c.patterns.height},
                         {"pad_width", c.patterns.pad_width},
                         {"pad_height", c.patterns.pad_height},
                         {"min_shapes", c.patterns.min_shapes},
                         {"max_shapes", c.patterns.max_shapes}};
  doc["pattern_sources"] = c.pattern_sources;
  doc["lowres"] = Json{{"width", c.lowres_width}, {"height", c.lowres_height}};
  return doc;
}

DatasetConfig dataset_config_from_json(const Json& doc) {
  try {
    DatasetConfig c;
    c.name = doc.at("name").get<std::string>();
    c.preset = parse_preset(doc.at("preset").get<std::string>());
    c.source_dirs = doc.at("source_dirs").get<std::vector<std::string>>();
    c.patch_size = doc.at("patch_size").get<int>();
    const Json& n = doc.at("counts");
    c.counts = {n.at("train").get<std::size_t>(), n.at("val").get<std::size_t>(),
                n.at("test").get<std::size_t>()};
    c.seed = doc.at("split_seed").get<std::uint64_t>();
    if (!doc.at("layout").is_null()) c.layout = schedule_from_json(doc.at("layout"));
    c.photons = photon_from_json(doc.at("photon_model"));
    const Json& a = doc.at("augmentations");
    c.augmentation.ops.clear();
    for (const auto& op : a.at("ops")) c.augmentation.ops.push_back(parse_op(op.get<std::string>()));
    c.augmentation.factor = a.at("factor").get<int>();
    c.augmentation.max_rotation_deg = a.at("max_rotation_deg").get<double>();
    c.augmentation.min_scale = a.at("min_scale").get<double>();
    c.augmentation.max_scale = a.at("max_scale").get<double>();
    const Json& p = doc.at("patterns");
    c.patterns = {p.at("width").get<int>(),     p.at("height").get<int>(),
                  p.at("pad_width").get<int>(), p.at("pad_height").get<int>(),
                  p.at("min_shapes").get<int>(), p.at("max_shapes").get<int>()};
    c.pattern_sources = doc.at("pattern_sources").get<std::size_t>();
    c.lowres_width = doc.at("lowres").at("width").get<int>();
    c.lowres_height = doc.at("lowres").at("height").get<int>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("dataset manifest: ") + e.what());
  }
}

Json build_dataset(const DatasetConfig& config, const fs::path& out_dir, int threads) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "samples", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::size_t total = config.counts.total();

  Json samples = Json::array();
  if (config.preset == DatasetPreset::slm) {
    const std::size_t base = config.pattern_sources == 0 ? total : config.pattern_sources;
    const std::size_t factor =
        base == 0 ? 1 : std::max<std::size_t>(1, (total + base - 1) / base);
    AugmentConfig aug = config.augmentation;
    aug.factor = static_cast<int>(factor);
    const std::uint64_t pattern_seed = derive_seed(config.seed, 1);
    const std::uint64_t aug_seed = derive_seed(config.seed, 2);
    std::vector<std::array<int, kShapeKinds>> kinds(total);
    std::vector<int> shape_counts(total);
    parallel_for(total, resolve_threads(threads), [&](std::size_t s) {
      const std::size_t b = s / factor;
      PatternSample p = gen_binary_pattern(config.patterns, derive_seed(pattern_seed, b));
      const RealGrid img = (s % factor == 0) ? p.image
                                            : augment_one(p.image, aug, derive_seed(aug_seed, s));
      kinds[s] = p.per_kind;
      shape_counts[s] = p.shape_count;
      const fs::path dir = out_dir / "samples" / sample_id(s);
      fs::create_directories(dir);
      save_png(img, dir / "gt.png", 8);
      save_png(area_downsample(img, config.lowres_width, config.lowres_height),
               dir / "lowres.png", 16);
    });
    for (std::size_t s = 0; s < total; ++s) {
      samples.push_back(Json{{"id", sample_id(s)},
                             {"split", split_of(s, config.counts)},
                             {"base_pattern", s / factor},
                             {"copy", s % factor},
                             {"shape_count", shape_counts[s]},
                             {"per_kind", kinds[s]}});
    }
  } else {
    std::vector<fs::path> dirs(config.source_dirs.begin(), config.source_dirs.end());
    const auto refs = sample_patch_refs(dirs, config.patch_size, total, config.seed);
    const auto records =
        build_pairs(refs, config.patch_size, config.layout, config.photons, out_dir, threads);
    for (std::size_t s = 0; s < total; ++s) {
      samples.push_back(Json{{"id", records[s].id},
                             {"split", split_of(s, config.counts)},
                             {"source", records[s].patch->source},
                             {"x", records[s].patch->x},
                             {"y", records[s].patch->y},
                             {"photon_seed", records[s].photon_seed}});
    }
  }

  std::string lists[3];
  for (std::size_t s = 0; s < total; ++s) {
    const std::string split = split_of(s, config.counts);
    const int k = split == "train" ? 0 : split == "val" ? 1 : 2;
    lists[k] += sample_id(s) + "\n";
  }
  write_text(out_dir / "train.txt", lists[0]);
  write_text(out_dir / "val.txt", lists[1]);
  write_text(out_dir / "test.txt", lists[2]);

  Json manifest;
  manifest["format"] = "apsynth.dataset";
  manifest["version"] = 1;
  const Json cfg = dataset_config_to_json(config);
  for (const auto& [key, value] : cfg.items()) manifest[key] = value;
  manifest["samples"] = std::move(samples);
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

Json regenerate_dataset(const fs::path& manifest_path, const fs::path& target, int threads) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  if (doc.value("format", std::string{}) != "apsynth.dataset") {
    throw IoError(manifest_path.string() + " is not a dataset manifest");
  }
  return build_dataset(dataset_config_from_json(doc), target, threads);
}

}  // namespace apsynth
