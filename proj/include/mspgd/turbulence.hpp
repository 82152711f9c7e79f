#pragma once

// Von Karman phase screens (FFT synthesis plus subharmonics), frozen-flow
// evolution, angle-of-arrival series and the angle-of-arrival Fried parameter
// estimator.

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mspgd/grid.hpp"

namespace mspgd::turbulence {

inline constexpr double kInfiniteOuterScale = std::numeric_limits<double>::infinity();

struct PhaseScreen {
  RealGrid phase;          ///< radians at wavelength_ref
  double pixel_pitch = 0;  ///< meters
  double r0 = 0;           ///< Fried parameter at wavelength_ref, meters
  double wavelength_ref = 0;
  double outer_scale = kInfiniteOuterScale;
  std::uint64_t seed = 0;

  double physical_size() const { return pixel_pitch * static_cast<double>(phase.side()); }
};

struct ScreenSpec {
  double r0 = 0.1;
  double outer_scale = 25.0;
  std::size_t grid_size = 256;
  double pixel_pitch = 0.01;
  double wavelength = 1570e-9;
  std::uint64_t seed = 1;
  int subharmonic_levels = 3;
  /// When positive, the screen must span at least 4 apertures.
  double aperture_diameter = 0.0;
};

/// Piston-removed screen, deterministic in spec.seed. Throws ConfigError for
/// odd grid sizes, non-positive r0/pitch, or a screen smaller than 4 apertures.
PhaseScreen generate_screen(const ScreenSpec& spec);

/// Kolmogorov phase structure function 6.88 (r / r0)^(5/3).
double kolmogorov_structure_function(double separation, double r0);

/// r0 * (target / ref)^(6/5).
double scale_r0(double r0_ref, double wavelength_ref, double wavelength_target);

/// Screen translated by (rows, cols) pixels with periodic wrap; fractional
/// shifts are bilinear, integer shifts are an exact roll.
PhaseScreen translate(const PhaseScreen& screen, double shift_rows, double shift_cols);

struct Wind {
  double vx = 0;  ///< m/s along columns
  double vy = 0;  ///< m/s along rows
  double speed() const;
};

/// Frozen-flow view of a large periodic screen through a square aperture
/// window. The window moves over the screen as wind * time. It starts against
/// the screen edge on the downstream side so it can cross side - window pixels
/// before reaching the periodic seam; subharmonic content is not periodic, so
/// crossing the seam is a phase discontinuity and is reported by wrapped().
class FrozenFlow {
 public:
  FrozenFlow(std::shared_ptr<const PhaseScreen> screen, std::size_t window_side, const Wind& heading = {});

  void evolve(const Wind& wind, double dt);
  /// Current aperture window.
  void window(RealGrid& out) const;
  RealGrid window() const;

  double offset_rows() const { return row_; }
  double offset_cols() const { return col_; }
  bool wrapped() const { return wrapped_; }
  const PhaseScreen& screen() const { return *screen_; }

 private:
  std::shared_ptr<const PhaseScreen> screen_;
  std::size_t window_side_;
  double row_ = 0;
  double col_ = 0;
  double travelled_rows_ = 0;
  double travelled_cols_ = 0;
  bool wrapped_ = false;
};

/// Aperture-averaged phase gradient (G-tilt) over the disk inscribed in the
/// window, as a wavefront angle in radians: (lambda / 2 pi) * <grad phase>.
std::array<double, 2> average_tilt_angle(const RealGrid& window, double pixel_pitch, double wavelength);

struct AngleOfArrivalSetup {
  double r0 = 0.074;              ///< at wavelength
  double wavelength = 810e-9;     ///< reference (beacon) wavelength
  double aperture_diameter = 0.4;
  double outer_scale = kInfiniteOuterScale;
  Wind wind{5.0, 0.0};
  std::size_t aperture_pixels = 32;
  std::size_t screen_pixels = 256;  ///< per stitched segment
  std::uint64_t seed = 1;
};

/// Tilt angles sampled at sample_rate while turbulence flows past the
/// aperture. Paths longer than one screen continue on fresh independent
/// screens (seeds derived from setup.seed).
std::vector<std::array<double, 2>> angle_of_arrival_series(const AngleOfArrivalSetup& setup, std::size_t n_samples,
                                                           double sample_rate);

/// Centroid positions (meters) to angles: C / f.
std::vector<std::array<double, 2>> centroids_to_angles(const std::vector<std::array<double, 2>>& centroids,
                                                       double focal_length);

/// Single-axis angle-of-arrival spread: sqrt of the mean of the per-axis
/// sample variances. Requires at least two samples.
double angle_of_arrival_stdev(const std::vector<std::array<double, 2>>& angles);

struct FriedEstimate {
  double r0 = 0;
  double d_over_r0 = 0;
};

/// r0 = 3.18 k^(-6/5) D^(-1/5) delta_alpha^(-6/5). Throws NoTurbulenceError
/// when delta_alpha is zero and std::domain_error for negative inputs.
FriedEstimate estimate_r0(double delta_alpha, double aperture_diameter, double wavenumber);

/// Inverse of estimate_r0 for a given r0.
double delta_alpha_for_r0(double r0, double aperture_diameter, double wavenumber);

/// Binary grid export: little-endian float64 row-major to `path`, with a
/// sidecar text header at path + ".hdr".
void write_screen(const PhaseScreen& screen, const std::string& path);
PhaseScreen read_screen(const std::string& path);

}  // namespace mspgd::turbulence
