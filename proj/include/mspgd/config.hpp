#pragma once

// Experiment configuration: a sectioned key = value text file.
//
//   [turbulence]
//   r0_ref = 0.074        # meters at wavelength_ref
//   wind = 1.0, 0.0       # m/s
//
// Unknown sections or keys, malformed values and non-physical quantities are
// rejected with the offending line number before anything runs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mspgd/simulation.hpp"

namespace mspgd::config {

struct RunSettings {
  std::size_t seeds = 10;          ///< paired open/closed runs per experiment
  std::uint64_t first_seed = 1;
  std::filesystem::path output = "out";
  std::size_t histogram_bins = 40;
};

struct AutotuneSettings {
  bool enabled = false;  ///< optimizer gain/amplitude given as "autotune"
  std::vector<double> amplitude_grid{0.04, 0.08, 0.12, 0.16};
  std::vector<double> gain_grid{2.5, 5.0, 10.0, 20.0};
  double trial_duration = 4.0;
  std::size_t trial_seeds = 2;
};

struct RaceSettings {
  double aberration_rms = 1.0;                            ///< radians over the pupil
  std::vector<int> aberration_modes = zernike::noll_range(4, 9);
  std::size_t iterations = 1500;
  std::size_t seeds = 20;
  /// Target as a fraction of the best coupling the mirror can reach.
  double plateau_fraction = 0.9;
  /// Each optimizer's gain is picked from this grid on separate tuning seeds,
  /// unless fixed below.
  std::vector<double> gain_grid{5, 10, 20, 40, 80, 160, 320};
  std::size_t tuning_seeds = 5;
  double spgd_gain = 0;  ///< 0 means tune
  double mspgd_gain = 0;
  double spgd_amplitude = 0;  ///< 0 keeps the optimizer section's amplitude
  double mspgd_amplitude = 0;
};

struct EstimateSettings {
  std::size_t samples = 2000;
  double sample_rate = 100.0;          ///< Hz
  std::size_t aperture_pixels = 32;
  std::size_t screen_pixels = 256;
  double outer_scale = 0;              ///< 0 means infinite for the synthetic series
};

struct ExperimentConfig {
  control::Scenario scenario;
  RunSettings run;
  AutotuneSettings autotune;
  RaceSettings race;
  EstimateSettings estimate;
};

/// Parses configuration text. `origin` prefixes error messages.
ExperimentConfig parse(std::string_view text, const std::string& origin = "config");
ExperimentConfig load(const std::filesystem::path& path);

/// Parses "2-13", "4,5,6" or "2-3, 5-9" into Noll indices.
std::vector<int> parse_mode_list(std::string_view text);

}  // namespace mspgd::config
