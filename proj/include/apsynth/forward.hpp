#pragma once

// Array-camera measurement simulation. Each camera sees the object spectrum
// through its pupil; the image it records is the squared modulus of the
// inverse transform of that band (optionally with Poisson photon noise).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "apsynth/aperture.hpp"
#include "apsynth/field.hpp"
#include "apsynth/json_fwd.hpp"

namespace apsynth {

enum class BudgetMode {
  per_snapshot,  ///< every snapshot receives the full photon count
  total_shared,  ///< the photon count is split evenly across k snapshots
};

struct PhotonModel {
  double photons = 1e3;  ///< expected photons per pixel of the bright-field image
  BudgetMode budget = BudgetMode::per_snapshot;
  std::uint64_t seed = 0;

  bool operator==(const PhotonModel&) const = default;
};

/// Parameters of the spatial (tilt-and-blur) forward path.
struct SpatialOracleConfig {
  double tilt_scale = 0.0;  ///< radians per (pixel * aperture-offset pixel)
  int psf_support = 0;      ///< kernel window per axis, in pixels
  bool direct_convolution = false;

  /// Shift-theorem-consistent settings for an N×N field: 2π/N, full support.
  static SpatialOracleConfig for_field(int field_size);
};

struct StackEntry {
  ApertureSpec aperture;  ///< absolute position (snapshot shift applied)
  int snapshot = 0;
  int aperture_index = 0;
  IntensityImage image;   ///< diameter × diameter
  bool resampled = false; ///< fractional center: full-resolution image binned down

  std::string file_name() const;
};

struct MeasurementStack {
  std::vector<StackEntry> entries;
  std::string object_id;
  int field_size = 0;
  SnapshotSchedule layout;
  std::optional<PhotonModel> photon_model;
  /// Multiplier mapping field intensity to recorded values (1 when noise-free).
  double photon_scale = 1.0;
  int brightfield_entry = 0;

  /// Throws InvalidArgument on empty stacks, size mismatches or bad values.
  void validate() const;
  Json manifest() const;
};

struct SimulateOptions {
  std::string object_id;
  int threads = 1;
};

// --- single-aperture measurements --------------------------------------------

/// |ifft2(spectrum · pupil)|² at full N×N resolution, noise-free.
IntensityImage measure_fullres(const ComplexField& object, const ApertureSpec& spec);

/// d×d camera image: the aperture's d×d band, demodulated to DC, transformed.
IntensityImage measure_decimated(const ComplexField& object, const ApertureSpec& spec);

/// |(object · e^{iφ}) ⊛ h_o|² with h_o the PSF of the DC-centered pupil and φ
/// the linear tilt selecting the aperture's band.
IntensityImage measure_spatial(const ComplexField& object, const ApertureSpec& spec,
                               const SpatialOracleConfig& cfg);

/// PSF of a DC-centered pupil of diameter d on an N×N grid (DC at (0,0)),
/// evaluated by direct summation over the pupil lattice points.
ComplexField pupil_psf(int diameter, int field_size);

/// The d×d band under the aperture's pupil, taken from a centered spectrum
/// (zero outside the field), DC-centered within the window.
ComplexField pupil_subspectrum(const ComplexField& centered, const ApertureSpec& spec);

/// Decimated measurement computed from an already centered spectrum.
RealGrid decimated_from_spectrum(const ComplexField& centered, const ApertureSpec& spec);

// --- stacks -----------------------------------------------------------------

/// Simulates every (snapshot, aperture) measurement of a real object in [0,1].
MeasurementStack simulate(const IntensityImage& object, const SnapshotSchedule& schedule,
                          const std::optional<PhotonModel>& photons,
                          const SimulateOptions& options = {});

/// Index of the entry whose aperture center is closest to DC (first on ties).
int most_central_entry(const std::vector<StackEntry>& entries);

/// Writes manifest.json and one f32 CAFP file per entry into `dir`.
void save_stack(const MeasurementStack& stack, const std::filesystem::path& dir);
MeasurementStack load_stack(const std::filesystem::path& dir);

std::string budget_name(BudgetMode mode);
BudgetMode parse_budget(const std::string& name);

}  // namespace apsynth
