#pragma once

// Receiver optics: deformable mirror model and modal map, pupil field
// assembly, Fraunhofer propagation to the fiber face and single-mode overlap.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "mspgd/fft.hpp"
#include "mspgd/grid.hpp"
#include "mspgd/zernike.hpp"

namespace mspgd::optics {

/// Actuator centers in normalized pupil coordinates (unit-radius disk). The
/// 40-actuator layout is 1 + 8 + 12 + 19 on rings at radius 0, 0.4, 0.8, 1.2,
/// the outer ring lying just beyond the pupil edge.
/// Other counts fill hexagonal-style rings of 6k actuators; the last ring
/// takes the remainder.
std::vector<std::array<double, 2>> ring_layout(std::size_t count);

struct MirrorParams {
  std::size_t actuator_count = 40;
  double influence_sigma = 0.7;  ///< Gaussian width in inter-actuator spacings
  double voltage_gain = 1.0;     ///< radians of phase per unit voltage at an actuator center
  double voltage_limit = 10.0;   ///< symmetric clamp, |u_j| <= limit
};

struct MirrorCommand {
  std::vector<double> voltages;  ///< after clamping
  std::size_t saturated = 0;     ///< actuators that hit the limit
};

class DeformableMirror {
 public:
  DeformableMirror(const MirrorParams& params, std::size_t grid_size);

  const MirrorParams& params() const { return params_; }
  std::size_t actuator_count() const { return positions_.size(); }
  std::span<const std::array<double, 2>> positions() const { return positions_; }
  /// Center-to-center spacing in normalized pupil units.
  double spacing() const { return spacing_; }
  const DiskGeometry& geometry() const { return geometry_; }

  /// Phase (radians) of actuator j's influence at normalized (x, y), per unit voltage.
  double influence(std::size_t j, double x, double y) const;

  /// Row-major (disk pixels x actuators) influence matrix including voltage_gain.
  std::span<const double> influence_matrix() const { return influence_; }

  MirrorCommand clamp(std::span<const double> voltages) const;

  /// Mirror phase over the disk pixels for the given voltages (no clamping).
  void packed_phase(std::span<const double> voltages, std::span<double> out) const;

 private:
  MirrorParams params_;
  DiskGeometry geometry_;
  std::vector<std::array<double, 2>> positions_;
  double spacing_ = 0;
  std::vector<double> influence_;
};

/// dm phase on the full grid, zero outside the disk. Linear in u.
RealGrid dm_phase(const DeformableMirror& dm, std::span<const double> voltages);

/// u = a x M: row n of `matrix` holds the voltages reproducing mode n.
struct ModalMap {
  Eigen::MatrixXd matrix;             ///< mode_count x actuator_count
  std::vector<double> fit_residuals;  ///< RMS phase error per unit coefficient, radians
  std::vector<int> noll_indices;
  std::vector<std::size_t> poorly_reproduced;  ///< modes whose residual exceeds 0.5
  double condition_number = 0;

  std::size_t mode_count() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t actuator_count() const { return static_cast<std::size_t>(matrix.cols()); }
  std::vector<double> voltages(std::span<const double> coefficients) const;

  /// Square identity map (one "mode" per actuator) used for SPGD/M-SPGD
  /// equivalence runs.
  static ModalMap identity(std::size_t actuator_count);
};

/// Regularized least-squares fit of each basis mode by the mirror. Throws
/// NumericalError when the influence matrix condition number exceeds 1e10.
ModalMap fit_modal_map(const DeformableMirror& dm, const zernike::ZernikeBasis& basis);

struct PupilSampling {
  double aperture_diameter = 0.4;  ///< meters
  std::size_t pupil_pixels = 64;   ///< across the aperture
  std::size_t pad_factor = 4;      ///< focal grid side = pupil_pixels * pad_factor

  double pixel_pitch() const { return aperture_diameter / static_cast<double>(pupil_pixels); }
  std::size_t padded_side() const { return pupil_pixels * pad_factor; }
};

struct FiberModel {
  double focal_length = 2.0;
  double mode_field_radius = 0.0;  ///< 1/e field radius at the fiber face, meters
  double wavelength = 1570e-9;
};

/// Unit-amplitude disk field with phase screen - dm + tilt, where the tilt
/// term is k (theta_x x + theta_y y). All phase grids must be pupil_pixels wide.
ComplexGrid pupil_field(const RealGrid& screen_phase, const RealGrid& dm_correction, std::array<double, 2> tilt,
                        const PupilSampling& sampling, double wavelength);

struct FocalField {
  ComplexGrid field;
  double pixel_size = 0;  ///< meters
};

/// Unitary scalar Fraunhofer propagation of a pupil_pixels-wide field,
/// zero-padded by pad_factor. Throws ConfigError when the Airy core spans
/// fewer than 8 focal pixels.
FocalField focal_field(const ComplexGrid& pupil, const PupilSampling& sampling, double focal_length,
                       double wavelength);

/// |<E, M>|^2 / (<E, E> <M, M>). Throws NumericalError for zero-power inputs.
double coupling_efficiency(const ComplexGrid& field, const ComplexGrid& mode);

/// Gaussian fiber mode sampled on the focal grid of `sampling`.
ComplexGrid fiber_mode(const PupilSampling& sampling, const FiberModel& fiber);

struct ModeRadius {
  double radius = 0;
  double eta = 0;
  double bracket_lo = 0;
  double bracket_hi = 0;
};

/// Golden-section maximization of the flat-wavefront coupling over the fiber
/// mode radius.
ModeRadius optimize_mode_radius(const PupilSampling& sampling, const FiberModel& fiber);

/// Coupling engine for the control loop. The overlap is evaluated in the pupil
/// plane against the back-propagated fiber mode, which is algebraically the
/// same number as the focal-plane overlap (unitary propagation preserves inner
/// products) at a fraction of the cost.
class FiberCoupler {
 public:
  FiberCoupler(const PupilSampling& sampling, const FiberModel& fiber);

  const PupilSampling& sampling() const { return sampling_; }
  const FiberModel& fiber() const { return fiber_; }
  const DiskGeometry& geometry() const { return geometry_; }

  /// eta for a unit-amplitude disk field with the given packed phase.
  double eta_from_phase(std::span<const double> packed_phase) const;
  /// eta through explicit propagation of `pupil` and the focal overlap.
  double eta_from_field(const ComplexGrid& pupil) const;

  /// Phase (rad) of a tilt angle at each disk pixel, per radian of angle.
  std::span<const double> tilt_x() const { return tilt_x_; }
  std::span<const double> tilt_y() const { return tilt_y_; }

 private:
  PupilSampling sampling_;
  FiberModel fiber_;
  DiskGeometry geometry_;
  ComplexGrid focal_mode_;
  std::vector<std::complex<double>> pupil_mode_;  // back-propagated mode on disk pixels
  double mode_norm2_ = 0;
  std::vector<double> tilt_x_;
  std::vector<double> tilt_y_;
};

}  // namespace mspgd::optics
