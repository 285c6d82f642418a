#pragma once

// Circular Fourier-plane apertures, the ten distribution strategies, the
// overlapping FP benchmark grid and multi-snapshot shift schedules.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apsynth/field.hpp"
#include "apsynth/json_fwd.hpp"

namespace apsynth {

/// One circular aperture. Center is a (column, row) offset in pixels from the
/// DC pixel of a centered N×N spectrum.
struct ApertureSpec {
  double center_u = 0.0;
  double center_v = 0.0;
  int diameter = 2;

  bool integer_center() const noexcept;
  double radius() const noexcept { return 0.5 * diameter; }
  bool operator==(const ApertureSpec&) const = default;
};

enum class LayoutKind { strategy, fp_grid, custom };

struct StrategyLayout {
  LayoutKind kind = LayoutKind::custom;
  int strategy_id = 0;  // 1..10 when kind == strategy
  std::vector<ApertureSpec> apertures;
  std::uint64_t seed = 0;
  int field_size = 512;

  bool operator==(const StrategyLayout&) const = default;
};

struct Shift {
  int du = 0;
  int dv = 0;
  bool operator==(const Shift&) const = default;
};

/// Per-snapshot translations of a base layout. shifts[0] is always (0, 0).
struct SnapshotSchedule {
  StrategyLayout base;
  std::vector<Shift> shifts{Shift{}};

  int k() const noexcept { return static_cast<int>(shifts.size()); }
  /// Apertures of snapshot `s`, with the shift applied.
  std::vector<ApertureSpec> apertures_for(int snapshot) const;
  bool operator==(const SnapshotSchedule&) const = default;
};

SnapshotSchedule single_snapshot(StrategyLayout layout);

// --- masks ------------------------------------------------------------------

enum class FieldEdge {
  reject,  ///< throw if any part of the aperture falls outside the field
  clip,    ///< silently drop lattice points outside the field
};

/// Lattice points p with (p_u - center_u)^2 + (p_v - center_v)^2 <= (d/2)^2.
Mask disk_mask(const ApertureSpec& spec, int field_size, FieldEdge edge = FieldEdge::reject);

/// The d×d camera sampling window of an aperture: offsets -d/2 .. d-1-d/2
/// around the (integer) center. Local pupil below is indexed in this window.
Mask pupil_window(int diameter);

/// Disk lattice points that fall inside the aperture's d×d window and inside
/// the field. This is the support every measurement path actually samples.
Mask pupil_mask(const ApertureSpec& spec, int field_size);

/// True when every closed-disk lattice point has a valid array index.
bool disk_in_field(const ApertureSpec& spec, int field_size) noexcept;
/// True when the center itself lies on the N×N grid.
bool center_in_field(const ApertureSpec& spec, int field_size) noexcept;

// --- layouts ----------------------------------------------------------------

/// Strategies 1–10. Geometry is defined at N = 512 and scaled by N/512 for
/// other sizes (N must be a multiple of 16).
StrategyLayout build_strategy(int id, int field_size = 512, std::uint64_t seed = 0);

/// Center spacing (pixels, real) at which two disks of diameter d overlap by
/// the given fraction of their area.
double fp_grid_spacing(int diameter, double overlap);

/// Square grid of `count` (perfect square) apertures with the given area
/// overlap between neighbours, centered on DC.
StrategyLayout build_fp_grid(int field_size = 512, int diameter = 128, int count = 100,
                             double overlap = 0.61);

/// Snapshot shifts of `base` whose pupil union covers the whole field after
/// `full_coverage_k` snapshots; returns the first `k` of them.
SnapshotSchedule build_snapshot_schedule(const StrategyLayout& base, int k,
                                         std::uint64_t seed, int full_coverage_k = 6);

// --- statistics -------------------------------------------------------------

/// Fraction of field pixels inside the union of all disks (clipped at the edge).
double coverage(const StrategyLayout& layout);
double coverage(const SnapshotSchedule& schedule);
/// Cumulative coverage after 1..k snapshots.
std::vector<double> coverage_curve(const SnapshotSchedule& schedule);
/// Fraction of field pixels inside the union of pupil masks.
double pupil_coverage(const SnapshotSchedule& schedule);
Mask pupil_union(const std::vector<ApertureSpec>& apertures, int field_size);

/// Sum of d^2 over apertures (camera pixels per snapshot).
std::int64_t measured_pixels(const StrategyLayout& layout);
std::int64_t measured_pixels(const SnapshotSchedule& schedule);

/// Grayscale map of the union; in a schedule, later snapshots are darker.
RealGrid render_coverage(const SnapshotSchedule& schedule);

// --- serialization ----------------------------------------------------------

std::string layout_label(const StrategyLayout& layout);
Json to_json(const SnapshotSchedule& schedule);
SnapshotSchedule schedule_from_json(const Json& doc);
void save_schedule(const SnapshotSchedule& schedule, const std::filesystem::path& path);
SnapshotSchedule load_schedule(const std::filesystem::path& path);

}  // namespace apsynth
