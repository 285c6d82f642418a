#pragma once

// Alternating-projection phase retrieval from a measurement stack:
// sequential modulus replacement inside each aperture's pupil.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "apsynth/forward.hpp"

namespace apsynth {

enum class SweepOrder { raster, by_diameter_desc, seeded_random };
enum class InitMode { brightfield_upsample, external_image, flat };

struct APConfig {
  int max_sweeps = 200;
  double tol = 1e-6;
  SweepOrder sweep_order = SweepOrder::by_diameter_desc;
  InitMode init = InitMode::brightfield_upsample;
  bool clamp_nonnegative_object = true;
  std::uint64_t seed = 0;  ///< used by seeded_random ordering

  void validate() const;
};

struct ReconResult {
  IntensityImage estimate;            ///< object amplitude |psi|, clamped to [0, 1]
  ComplexField spectrum;              ///< centered N×N spectrum
  std::vector<double> residual_log;   ///< data_misfit after each sweep
  int sweeps_run = 0;
  bool converged = false;
};

/// Reconstructs the object spectrum. When `init_image` is given it seeds the
/// object amplitude (zero phase) regardless of config.init; config.init ==
/// external_image without an image is an error.
ReconResult ap_reconstruct(const MeasurementStack& stack, const APConfig& config,
                           const std::optional<IntensityImage>& init_image = std::nullopt);

/// Initial centered spectrum for the given mode (exposed for tests/tools).
ComplexField initial_spectrum(const MeasurementStack& stack, InitMode mode,
                              const std::optional<IntensityImage>& init_image);

/// RMS over all entries and pixels of (simulated intensity - measured / photon_scale).
double data_misfit(const MeasurementStack& stack, const ComplexField& spectrum);

/// One modulus projection: replace the modulus of the aperture's sub-image
/// with `target_modulus` (d×d) and write the result back inside the pupil.
void project_entry(ComplexField& spectrum, const ApertureSpec& spec,
                   const RealGrid& target_modulus);

/// Squared distance between the aperture's sub-image and the nearest field
/// with the target modulus: sum (|g| - target)^2.
double modulus_distance(const ComplexField& spectrum, const ApertureSpec& spec,
                        const RealGrid& target_modulus);

/// sqrt(max(I, 0) / photon_scale) for one entry.
RealGrid target_modulus(const StackEntry& entry, double photon_scale);

/// estimate.png (16-bit), recon.json and optionally spectrum.cafp (c64).
void save_recon(const ReconResult& result, const std::filesystem::path& dir,
                bool write_spectrum = false);

std::string sweep_order_name(SweepOrder order);
SweepOrder parse_sweep_order(const std::string& name);
std::string init_mode_name(InitMode mode);
InitMode parse_init_mode(const std::string& name);

}  // namespace apsynth
