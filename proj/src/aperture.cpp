#include "apsynth/aperture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace apsynth {

namespace {

bool is_integer(double x) noexcept { return std::floor(x) == x; }

bool lattice_inside(double du, double dv, double r) noexcept {
  return du * du + dv * dv <= r * r + 1e-9;
}

int half(int n) noexcept { return n / 2; }

// Visits every lattice point (u, v) of the closed disk.
template <typename F>
void for_each_disk_point(const ApertureSpec& spec, F&& fn) {
  const double r = spec.radius();
  const int v0 = static_cast<int>(std::ceil(spec.center_v - r));
  const int v1 = static_cast<int>(std::floor(spec.center_v + r));
  const int u0 = static_cast<int>(std::ceil(spec.center_u - r));
  const int u1 = static_cast<int>(std::floor(spec.center_u + r));
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      if (lattice_inside(u - spec.center_u, v - spec.center_v, r)) fn(u, v);
    }
  }
}

void check_diameter(const ApertureSpec& spec) {
  if (spec.diameter < 2) throw InvalidArgument("aperture diameter must be at least 2");
  if (!std::isfinite(spec.center_u) || !std::isfinite(spec.center_v)) {
    throw InvalidArgument("aperture center must be finite");
  }
}

void check_field(int field_size) {
  if (field_size < 2) throw InvalidArgument("field size must be at least 2");
}

bool disjoint(const ApertureSpec& a, const ApertureSpec& b) noexcept {
  const double du = a.center_u - b.center_u;
  const double dv = a.center_v - b.center_v;
  const double rr = a.radius() + b.radius();
  return du * du + dv * dv > rr * rr;
}

}  // namespace

bool ApertureSpec::integer_center() const noexcept {
  return is_integer(center_u) && is_integer(center_v);
}

std::vector<ApertureSpec> SnapshotSchedule::apertures_for(int snapshot) const {
  if (snapshot < 0 || snapshot >= k()) throw InvalidArgument("snapshot index out of range");
  const Shift s = shifts[static_cast<std::size_t>(snapshot)];
  std::vector<ApertureSpec> out = base.apertures;
  for (auto& a : out) {
    a.center_u += s.du;
    a.center_v += s.dv;
  }
  return out;
}

SnapshotSchedule single_snapshot(StrategyLayout layout) {
  SnapshotSchedule s;
  s.base = std::move(layout);
  return s;
}

// --- masks ------------------------------------------------------------------

bool disk_in_field(const ApertureSpec& spec, int field_size) noexcept {
  const int lo = -half(field_size);
  const int hi = field_size - 1 - half(field_size);
  bool inside = true;
  for_each_disk_point(spec, [&](int u, int v) {
    if (u < lo || u > hi || v < lo || v > hi) inside = false;
  });
  return inside;
}

bool center_in_field(const ApertureSpec& spec, int field_size) noexcept {
  const double lo = -half(field_size);
  const double hi = field_size - 1 - half(field_size);
  return spec.center_u >= lo && spec.center_u <= hi && spec.center_v >= lo &&
         spec.center_v <= hi;
}

Mask disk_mask(const ApertureSpec& spec, int field_size, FieldEdge edge) {
  check_diameter(spec);
  check_field(field_size);
  if (edge == FieldEdge::reject && !disk_in_field(spec, field_size)) {
    throw InvalidArgument("aperture disk exceeds the field");
  }
  Mask mask(field_size, field_size, 0);
  const int c = half(field_size);
  for_each_disk_point(spec, [&](int u, int v) {
    const int col = u + c;
    const int row = v + c;
    if (col >= 0 && col < field_size && row >= 0 && row < field_size) mask(row, col) = 1;
  });
  return mask;
}

Mask pupil_window(int diameter) {
  if (diameter < 2) throw InvalidArgument("aperture diameter must be at least 2");
  Mask w(diameter, diameter, 0);
  const std::int64_t d2 = static_cast<std::int64_t>(diameter) * diameter;
  for (int i = 0; i < diameter; ++i) {
    const std::int64_t dv = i - diameter / 2;
    for (int j = 0; j < diameter; ++j) {
      const std::int64_t du = j - diameter / 2;
      w(i, j) = 4 * (du * du + dv * dv) <= d2 ? 1 : 0;
    }
  }
  return w;
}

Mask pupil_mask(const ApertureSpec& spec, int field_size) {
  check_diameter(spec);
  check_field(field_size);
  Mask mask(field_size, field_size, 0);
  const int d = spec.diameter;
  const int c = half(field_size);
  const int base_u = static_cast<int>(std::floor(spec.center_u)) - d / 2;
  const int base_v = static_cast<int>(std::floor(spec.center_v)) - d / 2;
  const double r = spec.radius();
  for (int i = 0; i < d; ++i) {
    const int v = base_v + i;
    const int row = v + c;
    if (row < 0 || row >= field_size) continue;
    for (int j = 0; j < d; ++j) {
      const int u = base_u + j;
      const int col = u + c;
      if (col < 0 || col >= field_size) continue;
      if (lattice_inside(u - spec.center_u, v - spec.center_v, r)) mask(row, col) = 1;
    }
  }
  return mask;
}

Mask pupil_union(const std::vector<ApertureSpec>& apertures, int field_size) {
  Mask out(field_size, field_size, 0);
  for (const auto& a : apertures) {
    const Mask m = pupil_mask(a, field_size);
    for (std::size_t i = 0; i < m.size(); ++i) out.storage()[i] |= m.storage()[i];
  }
  return out;
}

// --- strategies ---------------------------------------------------------------

namespace {

struct Scale {
  int field_size;
  double factor;

  explicit Scale(int n) : field_size(n), factor(n / 512.0) {
    if (n < 64 || n % 16 != 0) {
      throw InvalidArgument("strategy layouts need a field size that is a multiple of 16 (>= 64)");
    }
  }
  int d128() const { return field_size / 4; }
  int d96() const { return 3 * field_size / 16; }
  int d64() const { return field_size / 8; }
  int len(double px512) const { return static_cast<int>(std::lround(px512 * factor)); }
};

ApertureSpec at(int u, int v, int d) { return ApertureSpec{double(u), double(v), d}; }

std::vector<ApertureSpec> uniform_grid(int per_side, int pitch, int d, int offset = 0) {
  std::vector<ApertureSpec> out;
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      const int u = (2 * j - (per_side - 1)) * pitch / 2 + offset;
      const int v = (2 * i - (per_side - 1)) * pitch / 2 + offset;
      out.push_back(at(u, v, d));
    }
  }
  return out;
}

// Largest even pitch that keeps a per_side × per_side grid of closed disks in
// the field.
int max_symmetric_pitch(int n, int per_side, int d) {
  int pitch = 2 * (n / 2 - 1 - d / 2) / (per_side - 1);
  pitch -= pitch % 2;
  if (pitch <= d) throw InfeasibleLayout("grid of apertures does not fit without overlap");
  return pitch;
}

constexpr int kAttemptsPerAperture = 5000;
constexpr int kLayoutRestarts = 200;

std::vector<ApertureSpec> jittered_grid(const Scale& s, std::uint64_t seed) {
  const auto base = uniform_grid(3, s.len(170), s.d128());
  const int jitter = s.len(20);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> offset(-jitter, jitter);
  for (int restart = 0; restart < kLayoutRestarts; ++restart) {
    std::vector<ApertureSpec> out;
    for (const auto& a : base) {
      bool placed = false;
      for (int attempt = 0; attempt < kAttemptsPerAperture && !placed; ++attempt) {
        ApertureSpec cand = a;
        cand.center_u += offset(rng);
        cand.center_v += offset(rng);
        if (!disk_in_field(cand, s.field_size)) continue;
        if (std::all_of(out.begin(), out.end(),
                        [&](const ApertureSpec& o) { return disjoint(o, cand); })) {
          out.push_back(cand);
          placed = true;
        }
      }
      if (!placed) break;
    }
    if (out.size() == base.size()) return out;
  }
  throw InfeasibleLayout("strategy 4: no disjoint jittered placement found");
}

// Rejection-sampled disjoint placement. The first diameter in the list is
// pinned at DC so the layout always has a bright-field measurement.
std::vector<ApertureSpec> random_disjoint(const Scale& s, const std::vector<int>& diameters,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = s.field_size;
  for (int restart = 0; restart < kLayoutRestarts; ++restart) {
    std::vector<ApertureSpec> out{at(0, 0, diameters.front())};
    bool ok = true;
    for (std::size_t i = 1; i < diameters.size() && ok; ++i) {
      const int d = diameters[i];
      std::uniform_int_distribution<int> pos(-n / 2 + d / 2, n - 1 - n / 2 - d / 2);
      ok = false;
      for (int attempt = 0; attempt < kAttemptsPerAperture; ++attempt) {
        const ApertureSpec cand = at(pos(rng), pos(rng), d);
        if (std::all_of(out.begin(), out.end(),
                        [&](const ApertureSpec& o) { return disjoint(o, cand); }) &&
            disk_in_field(cand, n)) {
          out.push_back(cand);
          ok = true;
          break;
        }
      }
    }
    if (ok) return out;
  }
  throw InfeasibleLayout("no disjoint random placement found within the attempt budget");
}

std::vector<int> repeat(std::initializer_list<std::pair<int, int>> counts) {
  std::vector<int> out;
  for (auto [count, d] : counts) out.insert(out.end(), static_cast<std::size_t>(count), d);
  return out;
}

}  // namespace

StrategyLayout build_strategy(int id, int field_size, std::uint64_t seed) {
  const Scale s(field_size);
  StrategyLayout layout;
  layout.kind = LayoutKind::strategy;
  layout.strategy_id = id;
  layout.seed = seed;
  layout.field_size = field_size;

  const int d128 = s.d128();
  const int d96 = s.d96();
  const int d64 = s.d64();
  switch (id) {
    case 1: {
      // Dense: one central aperture ringed by eight at 0.55 d.
      layout.apertures.push_back(at(0, 0, d128));
      const double ring = 0.55 * d128;
      for (int k = 0; k < 8; ++k) {
        const double theta = k * std::numbers::pi / 4.0;
        layout.apertures.push_back(at(static_cast<int>(std::lround(ring * std::cos(theta))),
                                      static_cast<int>(std::lround(ring * std::sin(theta))),
                                      d128));
      }
      break;
    }
    case 2:
      layout.apertures = uniform_grid(3, s.len(170), d128);
      break;
    case 3:
      // Rounding at small fields can push the offset grid one pixel out.
      layout.apertures = uniform_grid(3, s.len(170), d128,
                                      std::min(s.len(21), field_size / 2 - 1 - s.len(170) - d128 / 2));
      break;
    case 4:
      layout.apertures = jittered_grid(s, seed);
      break;
    case 5:
      layout.apertures = uniform_grid(4, max_symmetric_pitch(field_size, 4, d96), d96);
      break;
    case 6:
      layout.apertures = uniform_grid(6, max_symmetric_pitch(field_size, 6, d64), d64);
      break;
    case 7:
      layout.apertures = random_disjoint(s, repeat({{4, d128}, {4, d96}, {4, d64}}), seed);
      break;
    case 8:
      layout.apertures = random_disjoint(s, repeat({{5, d128}, {5, d96}, {5, d64}}), seed);
      break;
    case 9:
      layout.apertures = random_disjoint(s, repeat({{1, d128}, {14, d96}}), seed);
      break;
    case 10:
      layout.apertures = random_disjoint(s, repeat({{1, d128}, {32, d64}}), seed);
      break;
    default:
      throw InvalidArgument("strategy id must be in 1..10");
  }
  for (const auto& a : layout.apertures) {
    if (!disk_in_field(a, field_size)) throw InfeasibleLayout("strategy aperture leaves the field");
  }
  return layout;
}

// --- FP grid ------------------------------------------------------------------

double fp_grid_spacing(int diameter, double overlap) {
  if (diameter < 2) throw InvalidArgument("aperture diameter must be at least 2");
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw InvalidArgument("overlap fraction must lie in [0, 1)");
  }
  // Lens-shaped intersection of two equal disks as a fraction of one disk,
  // with t = spacing / diameter. Decreasing from 1 (t=0) to 0 (t=1).
  auto fraction = [](double t) {
    return 2.0 / std::numbers::pi * (std::acos(t) - t * std::sqrt(1.0 - t * t));
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (fraction(mid) > overlap ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) * diameter;
}

StrategyLayout build_fp_grid(int field_size, int diameter, int count, double overlap) {
  check_field(field_size);
  const int per_side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
  if (count < 1 || per_side * per_side != count) {
    throw InvalidArgument("fp grid aperture count must be a perfect square");
  }
  const double exact = fp_grid_spacing(diameter, overlap);
  int pitch = static_cast<int>(std::lround(exact));
  // Even grids put centers at half-pitch multiples; keep them on the lattice.
  if (per_side % 2 == 0 && pitch % 2 != 0) pitch += exact > pitch ? 1 : -1;
  if (pitch < 1) pitch = per_side % 2 == 0 ? 2 : 1;

  StrategyLayout layout;
  layout.kind = LayoutKind::fp_grid;
  layout.field_size = field_size;
  layout.apertures = uniform_grid(per_side, pitch, diameter);
  for (const auto& a : layout.apertures) {
    if (!disk_in_field(a, field_size)) {
      throw InfeasibleLayout("fp grid exceeds the field");
    }
  }
  return layout;
}

// --- snapshot schedules -------------------------------------------------------

namespace {

// Coverage search over integer translations of a fixed aperture set. Gains
// are exact pupil-pixel counts evaluated with per-row prefix sums.
class ShiftSearch {
 public:
  ShiftSearch(const StrategyLayout& base) : n_(base.field_size) {
    if (base.apertures.empty()) throw InvalidArgument("schedule base layout is empty");
    int min_u = std::numeric_limits<int>::max();
    int max_u = std::numeric_limits<int>::min();
    int min_v = min_u;
    int max_v = max_u;
    for (const auto& a : base.apertures) {
      if (!a.integer_center()) throw InvalidArgument("schedule base needs integer centers");
      const int u = static_cast<int>(a.center_u);
      const int v = static_cast<int>(a.center_v);
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
      apertures_.push_back({u, v, row_spans(a.diameter)});
    }
    lo_u_ = -n_ / 2 - min_u;
    hi_u_ = n_ - 1 - n_ / 2 - max_u;
    lo_v_ = -n_ / 2 - min_v;
    hi_v_ = n_ - 1 - n_ / 2 - max_v;
    if (lo_u_ > 0 || hi_u_ < 0 || lo_v_ > 0 || hi_v_ < 0) {
      throw InvalidArgument("schedule base layout has apertures outside the field");
    }
    counts_.assign(static_cast<std::size_t>(n_) * n_, 0);
    prefix_.assign(static_cast<std::size_t>(n_) * (n_ + 1), 0);
  }

  Shift random_shift(std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> du(lo_u_, hi_u_);
    std::uniform_int_distribution<int> dv(lo_v_, hi_v_);
    const int a = du(rng);
    return Shift{a, dv(rng)};
  }

  void paint(Shift s, int delta) {
    for (const auto& ap : apertures_) {
      for_each_run(ap, s, [&](int row, int c0, int c1) {
        int* line = counts_.data() + static_cast<std::size_t>(row) * n_;
        for (int c = c0; c <= c1; ++c) line[c] += delta;
      });
    }
  }

  std::int64_t uncovered() const {
    return std::count(counts_.begin(), counts_.end(), 0);
  }

  // Rebuilds the row prefix sums of the uncovered indicator.
  void refresh_prefix() {
    for (int r = 0; r < n_; ++r) {
      const int* line = counts_.data() + static_cast<std::size_t>(r) * n_;
      std::int32_t* p = prefix_.data() + static_cast<std::size_t>(r) * (n_ + 1);
      p[0] = 0;
      for (int c = 0; c < n_; ++c) p[c + 1] = p[c] + (line[c] == 0 ? 1 : 0);
    }
  }

  // Newly covered pixels if the layout were added at shift s (prefix must be fresh).
  std::int64_t gain(Shift s) const {
    std::int64_t g = 0;
    for (const auto& ap : apertures_) {
      for_each_run(ap, s, [&](int row, int c0, int c1) {
        const std::int32_t* p = prefix_.data() + static_cast<std::size_t>(row) * (n_ + 1);
        g += p[c1 + 1] - p[c0];
      });
    }
    return g;
  }

  std::pair<Shift, std::int64_t> best_shift() const {
    Shift best{};
    std::int64_t best_gain = -1;
    for (int dv = lo_v_; dv <= hi_v_; ++dv) {
      for (int du = lo_u_; du <= hi_u_; ++du) {
        const std::int64_t g = gain(Shift{du, dv});
        if (g > best_gain) {
          best_gain = g;
          best = Shift{du, dv};
        }
      }
    }
    return {best, best_gain};
  }

 private:
  struct Span {
    int dv;
    int du0;
    int du1;
  };
  struct Placed {
    int u;
    int v;
    std::vector<Span> spans;
  };

  static std::vector<Span> row_spans(int d) {
    const Mask w = pupil_window(d);
    std::vector<Span> spans;
    for (int i = 0; i < d; ++i) {
      int first = -1;
      int last = -1;
      for (int j = 0; j < d; ++j) {
        if (w(i, j)) {
          if (first < 0) first = j;
          last = j;
        }
      }
      if (first >= 0) spans.push_back({i - d / 2, first - d / 2, last - d / 2});
    }
    return spans;
  }

  template <typename F>
  void for_each_run(const Placed& ap, Shift s, F&& fn) const {
    const int c = n_ / 2;
    for (const auto& span : ap.spans) {
      const int row = ap.v + s.dv + span.dv + c;
      if (row < 0 || row >= n_) continue;
      const int c0 = std::max(0, ap.u + s.du + span.du0 + c);
      const int c1 = std::min(n_ - 1, ap.u + s.du + span.du1 + c);
      if (c0 <= c1) fn(row, c0, c1);
    }
  }

  int n_;
  std::vector<Placed> apertures_;
  int lo_u_ = 0, hi_u_ = 0, lo_v_ = 0, hi_v_ = 0;
  std::vector<int> counts_;
  std::vector<std::int32_t> prefix_;
};

constexpr int kScheduleAttempts = 64;
constexpr int kDescentRounds = 60;

}  // namespace

SnapshotSchedule build_snapshot_schedule(const StrategyLayout& base, int k, std::uint64_t seed,
                                         int full_coverage_k) {
  if (full_coverage_k < 1) throw InvalidArgument("full-coverage snapshot count must be >= 1");
  if (k < 1 || k > full_coverage_k) {
    throw InvalidArgument("snapshot count must lie in 1.." + std::to_string(full_coverage_k));
  }
  std::mt19937_64 rng(seed);
  std::vector<Shift> plan;

  for (int attempt = 0; attempt < kScheduleAttempts && plan.empty(); ++attempt) {
    ShiftSearch search(base);
    std::vector<Shift> shifts{Shift{}};
    search.paint(Shift{}, +1);
    for (int j = 1; j < full_coverage_k; ++j) {
      Shift s;
      if (attempt == 0) {
        search.refresh_prefix();
        s = search.best_shift().first;
      } else {
        s = search.random_shift(rng);
      }
      shifts.push_back(s);
      search.paint(s, +1);
    }
    // Coordinate descent: re-place each snapshot given all the others.
    for (int round = 0; round < kDescentRounds && search.uncovered() > 0; ++round) {
      bool changed = false;
      for (int j = 1; j < full_coverage_k; ++j) {
        search.paint(shifts[j], -1);
        search.refresh_prefix();
        const std::int64_t current = search.gain(shifts[j]);
        const auto [cand, g] = search.best_shift();
        if (g > current) {
          shifts[j] = cand;
          changed = true;
        }
        search.paint(shifts[j], +1);
      }
      if (!changed) break;
    }
    if (search.uncovered() == 0) plan = std::move(shifts);
  }
  if (plan.empty()) {
    throw InfeasibleLayout("cannot reach full Fourier coverage with " +
                           std::to_string(full_coverage_k) + " snapshots");
  }

  // Greedy ordering: each next snapshot adds the most new pixels.
  ShiftSearch order(base);
  SnapshotSchedule schedule;
  schedule.base = base;
  schedule.shifts = {Shift{}};
  order.paint(Shift{}, +1);
  std::vector<Shift> remaining(plan.begin() + 1, plan.end());
  while (!remaining.empty() && schedule.k() < k) {
    order.refresh_prefix();
    std::size_t pick = 0;
    std::int64_t best = -1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const std::int64_t g = order.gain(remaining[i]);
      if (g > best) {
        best = g;
        pick = i;
      }
    }
    schedule.shifts.push_back(remaining[pick]);
    order.paint(remaining[pick], +1);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return schedule;
}

// --- statistics -----------------------------------------------------------------

namespace {

Mask disk_union(const SnapshotSchedule& schedule, int snapshots) {
  const int n = schedule.base.field_size;
  Mask out(n, n, 0);
  for (int s = 0; s < snapshots; ++s) {
    for (const auto& a : schedule.apertures_for(s)) {
      const Mask m = disk_mask(a, n, FieldEdge::clip);
      for (std::size_t i = 0; i < m.size(); ++i) out.storage()[i] |= m.storage()[i];
    }
  }
  return out;
}

double fraction_set(const Mask& m) {
  const auto set = std::count(m.begin(), m.end(), std::uint8_t{1});
  return static_cast<double>(set) / static_cast<double>(m.size());
}

}  // namespace

double coverage(const StrategyLayout& layout) { return coverage(single_snapshot(layout)); }

double coverage(const SnapshotSchedule& schedule) {
  return fraction_set(disk_union(schedule, schedule.k()));
}

std::vector<double> coverage_curve(const SnapshotSchedule& schedule) {
  const int n = schedule.base.field_size;
  Mask acc(n, n, 0);
  std::vector<double> curve;
  for (int s = 0; s < schedule.k(); ++s) {
    for (const auto& a : schedule.apertures_for(s)) {
      const Mask m = disk_mask(a, n, FieldEdge::clip);
      for (std::size_t i = 0; i < m.size(); ++i) acc.storage()[i] |= m.storage()[i];
    }
    curve.push_back(fraction_set(acc));
  }
  return curve;
}

double pupil_coverage(const SnapshotSchedule& schedule) {
  std::vector<ApertureSpec> all;
  for (int s = 0; s < schedule.k(); ++s) {
    const auto a = schedule.apertures_for(s);
    all.insert(all.end(), a.begin(), a.end());
  }
  return fraction_set(pupil_union(all, schedule.base.field_size));
}

std::int64_t measured_pixels(const StrategyLayout& layout) {
  std::int64_t total = 0;
  for (const auto& a : layout.apertures) {
    total += static_cast<std::int64_t>(a.diameter) * a.diameter;
  }
  return total;
}

std::int64_t measured_pixels(const SnapshotSchedule& schedule) {
  return measured_pixels(schedule.base) * schedule.k();
}

RealGrid render_coverage(const SnapshotSchedule& schedule) {
  const int n = schedule.base.field_size;
  RealGrid img(n, n, 0.0);
  const int k = schedule.k();
  for (int s = k - 1; s >= 0; --s) {
    const double level = k == 1 ? 1.0 : 1.0 - 0.6 * s / (k - 1);
    for (const auto& a : schedule.apertures_for(s)) {
      const Mask m = disk_mask(a, n, FieldEdge::clip);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.storage()[i]) img.storage()[i] = level;
      }
    }
  }
  return img;
}

// --- serialization ----------------------------------------------------------------

std::string layout_label(const StrategyLayout& layout) {
  switch (layout.kind) {
    case LayoutKind::strategy: return "strategy " + std::to_string(layout.strategy_id);
    case LayoutKind::fp_grid: return "fp_grid";
    case LayoutKind::custom: return "custom";
  }
  return "custom";
}

namespace {

Json coordinate(double x) {
  if (is_integer(x) && std::abs(x) < 1e15) return Json(static_cast<std::int64_t>(x));
  return Json(x);
}

}  // namespace

Json to_json(const SnapshotSchedule& schedule) {
  const auto& base = schedule.base;
  Json doc;
  switch (base.kind) {
    case LayoutKind::strategy: doc["strategy_id"] = base.strategy_id; break;
    case LayoutKind::fp_grid: doc["strategy_id"] = "fp_grid"; break;
    case LayoutKind::custom: doc["strategy_id"] = "custom"; break;
  }
  doc["seed"] = base.seed;
  doc["field_size"] = base.field_size;
  Json apertures = Json::array();
  for (const auto& a : base.apertures) {
    apertures.push_back(Json{{"u", coordinate(a.center_u)},
                             {"v", coordinate(a.center_v)},
                             {"d", a.diameter}});
  }
  doc["apertures"] = std::move(apertures);
  Json shifts = Json::array();
  for (const auto& s : schedule.shifts) shifts.push_back(Json::array({s.du, s.dv}));
  doc["shifts"] = std::move(shifts);
  return doc;
}

SnapshotSchedule schedule_from_json(const Json& doc) {
  try {
    SnapshotSchedule schedule;
    auto& base = schedule.base;
    const Json& id = doc.at("strategy_id");
    if (id.is_number_integer()) {
      base.kind = LayoutKind::strategy;
      base.strategy_id = id.get<int>();
    } else if (id.get<std::string>() == "fp_grid") {
      base.kind = LayoutKind::fp_grid;
    } else {
      base.kind = LayoutKind::custom;
    }
    base.seed = doc.value("seed", std::uint64_t{0});
    base.field_size = doc.at("field_size").get<int>();
    check_field(base.field_size);
    for (const auto& a : doc.at("apertures")) {
      ApertureSpec spec{a.at("u").get<double>(), a.at("v").get<double>(), a.at("d").get<int>()};
      check_diameter(spec);
      base.apertures.push_back(spec);
    }
    schedule.shifts.clear();
    if (doc.contains("shifts")) {
      for (const auto& s : doc.at("shifts")) {
        schedule.shifts.push_back(Shift{s.at(0).get<int>(), s.at(1).get<int>()});
      }
    }
    if (schedule.shifts.empty()) schedule.shifts.push_back(Shift{});
    if (schedule.shifts.front() != Shift{}) {
      throw InvalidArgument("the first snapshot shift must be (0, 0)");
    }
    return schedule;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed layout document: ") + e.what());
  }
}

void save_schedule(const SnapshotSchedule& schedule, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(schedule).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

SnapshotSchedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return schedule_from_json(doc);
}

}  // namespace apsynth
