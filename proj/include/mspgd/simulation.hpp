#pragma once

// Closed-loop link simulation: turbulence window + APT residual jitter +
// deformable mirror -> fiber coupling, driven by SPGD or M-SPGD at a fixed
// iteration rate with a fixed readout latency.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mspgd/control.hpp"
#include "mspgd/optics.hpp"
#include "mspgd/turbulence.hpp"
#include "mspgd/zernike.hpp"

namespace mspgd::control {

enum class ModalMapKind { kFitted, kIdentity };

/// Everything needed to simulate one link condition.
struct Scenario {
  std::string name = "scenario";

  // Turbulence. r0 is quoted at wavelength_ref and scaled to the signal.
  double r0_ref = 0.074;
  double wavelength_ref = 810e-9;
  double outer_scale = 25.0;
  turbulence::Wind wind{5.0, 0.0};
  std::size_t screen_pixels = 2048;
  int subharmonic_levels = 3;
  bool static_screen = false;  ///< freeze turbulence regardless of wind

  optics::PupilSampling sampling{};
  optics::FiberModel fiber{};
  optics::MirrorParams mirror{};

  // Modal basis and tip/tilt handling.
  std::vector<int> modes = zernike::noll_range(4, 15);
  ModalMapKind map_kind = ModalMapKind::kFitted;
  bool apt_removes_tilt = true;
  double jitter_rms = 2.5e-6;        ///< per axis, radians
  double jitter_bandwidth = 50.0;    ///< Hz, first-order low-pass
  double metric_noise = 0.01;        ///< detector noise sigma relative to the flat-wavefront eta

  // Optimizer.
  OptimizerMode mode = OptimizerMode::kModalSpgd;
  double gain = 1.0;
  double amplitude = 0.1;
  bool normalize_delta_j = false;
  bool scale_amplitude_by_order = false;

  LoopTiming timing{};
  double duration = 20.0;

  double r0_signal() const;
  /// D / r0 at the reference wavelength.
  double d_over_r0_ref() const;
  /// Optimizer dimension: actuator count (SPGD) or mode count (M-SPGD).
  std::size_t dimension() const;
  /// Throws ConfigError on non-physical values and InfeasibleTiming on timing.
  void validate() const;
};

/// Immutable per-scenario optics shared by every seed and trial.
struct PreparedOptics {
  zernike::ZernikeBasis basis;
  optics::DeformableMirror mirror;
  optics::ModalMap modal_map;
  optics::FiberCoupler coupler;
  double eta_ceiling = 0;  ///< flat-wavefront coupling with the chosen mode radius
  double mode_radius = 0;
  /// Least-squares tip/tilt projector rows over disk pixels (2 x pixels).
  std::vector<double> tilt_projector;
  std::vector<double> tilt_modes;  ///< Z2, Z3 samples (pixels x 2, row-major)
};

std::shared_ptr<const PreparedOptics> prepare_optics(const Scenario& scenario);

/// Ornstein-Uhlenbeck tilt jitter: stationary N(0, rms^2) per axis with a
/// first-order spectrum of corner frequency `bandwidth`.
class TiltJitter {
 public:
  TiltJitter(double rms, double bandwidth, std::uint64_t seed);
  void advance(double dt);
  std::array<double, 2> angle() const { return angle_; }

 private:
  double rms_;
  double bandwidth_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::array<double, 2> angle_{0.0, 0.0};
};

/// The physical plant: turbulence, APT residual and detector, at one seed.
class LinkSimulator {
 public:
  LinkSimulator(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics, std::uint64_t seed);
  /// Shares a pre-generated screen (for sweeping parameters on one realization).
  LinkSimulator(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                std::shared_ptr<const turbulence::PhaseScreen> screen, std::uint64_t seed);
  /// Fixed aberration over the disk pixels instead of a flowing screen.
  LinkSimulator(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                std::vector<double> static_phase, std::uint64_t seed);

  void advance(double dt);
  MetricReading measure(std::span<const double> voltages);
  /// Noise-free coupling for the given voltages at the current instant.
  double true_eta(std::span<const double> voltages);
  /// Residual pupil phase over disk pixels (turbulence after APT, plus jitter,
  /// minus mirror), for the given voltages.
  void residual_phase(std::span<const double> voltages, std::span<double> out);

  double time() const { return time_; }
  bool wrapped() const { return flow_ ? flow_->wrapped() : false; }
  const PreparedOptics& optics() const { return *optics_; }

 private:
  const Scenario scenario_;
  std::shared_ptr<const PreparedOptics> optics_;
  std::optional<turbulence::FrozenFlow> flow_;
  std::vector<double> static_phase_;  // used when there is no screen
  TiltJitter jitter_;
  std::mt19937_64 noise_rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  double time_ = 0;
  RealGrid window_;
  std::vector<double> turbulence_;
  std::vector<double> total_;
  std::vector<double> mirror_;
};

/// Scenario screen at the signal wavelength for `seed`.
std::shared_ptr<const turbulence::PhaseScreen> make_screen(const Scenario& scenario, std::uint64_t seed);

struct TrajectoryRow {
  std::uint64_t iteration = 0;
  double time_s = 0;
  double j_plus = 0;
  double j_minus = 0;
  double delta_j = 0;
  std::vector<double> parameters;
  double eta = 0;  ///< mean of the noise-free eta at the two readouts
  std::size_t saturated = 0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  std::size_t measurements = 0;
  std::size_t saturated_total = 0;
  std::size_t faults = 0;
  bool screen_wrapped = false;

  std::vector<double> eta_series() const;
  std::vector<double> metric_series() const;  ///< all 2N readouts in order
};

/// Closed loop on a simulator (built by the caller so the same plant can be
/// reused). The simulator clock is advanced by the loop.
Trajectory run_closed_loop(const Scenario& scenario, LinkSimulator& plant, std::uint64_t seed);
Trajectory run_closed_loop(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics, std::uint64_t seed);

/// Same schedule with a flat mirror and no perturbations.
Trajectory run_open_loop(const Scenario& scenario, LinkSimulator& plant);
Trajectory run_open_loop(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics, std::uint64_t seed);

struct AutotuneCell {
  double amplitude = 0;
  double gain = 0;
  double mean_metric = 0;  ///< mean coupled power over all trial readouts
  double mean_eta = 0;
};

struct AutotuneResult {
  double amplitude = 0;
  double gain = 0;
  bool stable = false;  ///< best cell beats the open-loop mean
  bool amplitude_on_boundary = false;
  bool gain_on_boundary = false;
  double open_loop_mean_metric = 0;
  std::vector<AutotuneCell> table;
};

/// One closed-loop trial per (amplitude, gain) cell, all cells on the same
/// turbulence realization(s) so that the scores are directly comparable.
AutotuneResult autotune(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                        std::span<const double> amplitude_grid, std::span<const double> gain_grid,
                        double trial_duration, std::span<const std::uint64_t> seeds);

}  // namespace mspgd::control
