#pragma once

// Experiment drivers behind the command-line tool: paired open/closed-loop
// ensembles, the SPGD vs M-SPGD convergence race, Fried-parameter estimation
// and gain/amplitude autotuning.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mspgd/config.hpp"
#include "mspgd/metrics.hpp"
#include "mspgd/simulation.hpp"

namespace mspgd::experiments {

/// Field values for the two published turbulence conditions.
struct ReferenceValues {
  double d_over_r0 = 0;
  double improvement_db = 0;
  double rsd_open = 0;
  double rsd_closed = 0;
};

/// The published condition closest to d_over_r0 (within 0.5), if any.
std::optional<ReferenceValues> reference_for(double d_over_r0);

struct PairedRun {
  std::uint64_t seed = 0;
  control::Trajectory open;
  control::Trajectory closed;
  metrics::RunSummary summary;
};

struct SimulationResult {
  std::string scenario;
  double d_over_r0 = 0;
  double gain = 0;
  double amplitude = 0;
  std::optional<control::AutotuneResult> tuning;
  std::vector<PairedRun> runs;
  metrics::RunSummary pooled;  ///< all seeds concatenated
  double median_improvement_db = 0;
  double median_rsd_open = 0;
  double median_rsd_closed = 0;
  double median_rsd_reduction = 0;  ///< percentage points
  std::size_t seeds_with_lower_rsd = 0;
};

/// Paired open/closed runs on matched seeds (same screen, jitter and detector
/// noise streams), parallel across seeds. Autotunes first when the config asks
/// for it. Throws NumericalError for a zero duration.
SimulationResult simulate(const config::ExperimentConfig& cfg);

/// Trajectory CSVs per seed and loop, summary.txt, summary.csv,
/// per-seed.csv, trace and histogram SVGs with their sidecar CSVs.
void write_simulation(const SimulationResult& result, std::size_t parameter_count, std::size_t bins,
                      const std::filesystem::path& dir);
std::string simulation_report(const SimulationResult& result);

struct RaceTrial {
  std::uint64_t seed = 0;
  double initial_eta = 0;
  double ceiling_eta = 0;              ///< best coupling the mirror can reach on this aberration
  std::size_t spgd_evaluations = 0;    ///< metric evaluations to reach the target
  std::size_t mspgd_evaluations = 0;
  bool spgd_reached = false;
  bool mspgd_reached = false;
  double spgd_plateau = 0;             ///< mean eta over the last tenth of the run
  double mspgd_plateau = 0;
};

struct RaceResult {
  std::vector<RaceTrial> trials;
  double spgd_gain = 0;
  double mspgd_gain = 0;
  std::size_t mspgd_wins = 0;
  std::size_t spgd_wins = 0;
  std::size_t ties = 0;
  double median_spgd = 0;
  double median_mspgd = 0;
  std::string verdict;         ///< "mspgd faster", "spgd faster" or "tie"
  bool insufficient_sample = false;
  std::size_t spgd_dimension = 0;
  std::size_t mspgd_dimension = 0;
};

/// Random static aberration of `rms` radians over the given modes, packed over
/// the pupil disk.
std::vector<double> static_aberration(const zernike::ZernikeBasis& basis, double rms, std::uint64_t seed);

/// Coupling after the least-squares mirror fit of `phase`: the best any
/// optimizer driving this mirror can do.
double mirror_ceiling(const control::PreparedOptics& optics, std::span<const double> phase);

/// Metric evaluations until the 10-iteration running mean of eta first reaches
/// `target`; nullopt when it never does.
std::optional<std::size_t> evaluations_to_target(std::span<const double> eta_per_iteration, double target);

/// SPGD (actuator space) against M-SPGD (configured modal basis) on identical
/// static aberrations and seeds, each optimizer at its own tuned gain.
RaceResult race(const config::ExperimentConfig& cfg);
std::string race_report(const RaceResult& result);
std::string race_csv(const RaceResult& result);

struct R0Report {
  std::size_t samples = 0;
  double delta_alpha = 0;           ///< radians
  double r0_ref = 0;                ///< at the reference wavelength
  double d_over_r0_ref = 0;
  double r0_signal = 0;             ///< scaled to the signal wavelength
  double d_over_r0_signal = 0;
  double wavelength_ref = 0;
  double wavelength_signal = 0;
};

/// Reads a two-column series (x, y). With focal_length > 0 the columns are
/// centroid displacements in meters, otherwise angles in radians. A header
/// line is allowed.
std::vector<std::array<double, 2>> read_angle_series(const std::filesystem::path& path, double focal_length);

R0Report estimate_r0_from_angles(const std::vector<std::array<double, 2>>& angles, const control::Scenario& scenario);

/// Synthesizes an angle-of-arrival series for the scenario and estimates r0.
R0Report estimate_r0_synthetic(const config::ExperimentConfig& cfg, std::uint64_t seed);
std::string r0_report(const R0Report& report);

/// Autotune with trial seeds disjoint from the run seeds.
control::AutotuneResult tune(const config::ExperimentConfig& cfg, std::shared_ptr<const control::PreparedOptics> optics);
std::string autotune_csv(const control::AutotuneResult& result);
std::string autotune_report(const control::AutotuneResult& result);

}  // namespace mspgd::experiments
