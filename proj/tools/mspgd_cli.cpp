// mspgd: simulate wavefront-sensorless fiber-coupling correction.
//
//   mspgd simulate --config d_r0_5p4 --out runs/moderate
//   mspgd race --config static_race
//   mspgd estimate-r0 --series centroids.csv --focal-length 0.5
//   mspgd autotune --config d_r0_9p5
//
// Exit status: 0 success, 2 configuration error, 3 numerical or
// infeasibility error.

#include <CLI11.hpp>
#include <fmt/core.h>
#include <omp.h>

#include <filesystem>
#include <iostream>
#include <optional>

#include "mspgd/config.hpp"
#include "mspgd/errors.hpp"
#include "mspgd/experiments.hpp"
#include "mspgd/io.hpp"

namespace fs = std::filesystem;
using namespace mspgd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 0;
};

// A bare preset name ("d_r0_5p4") resolves to the bundled file.
fs::path resolve_config(const std::string& name) {
  const fs::path direct(name);
  if (fs::exists(direct)) return direct;
  for (const fs::path dir : {fs::path(MSPGD_PRESET_DIR), fs::path("presets")}) {
    for (const auto& candidate : {dir / name, dir / (name + ".ini")}) {
      if (fs::exists(candidate)) return candidate;
    }
  }
  throw ConfigError(fmt::format("config '{}' not found (not a file or bundled preset)", name));
}

config::ExperimentConfig load_config(const GlobalOptions& g) {
  config::ExperimentConfig cfg = g.config.empty() ? config::parse("", "defaults") : config::load(resolve_config(g.config));
  if (g.seed) cfg.run.first_seed = *g.seed;
  if (g.out) cfg.run.output = *g.out;
  return cfg;
}

int run_simulate(const GlobalOptions& g, std::optional<double> duration, std::optional<std::size_t> seeds) {
  auto cfg = load_config(g);
  if (duration) {
    if (*duration < 0) throw ConfigError("--duration must be non-negative");
    cfg.scenario.duration = *duration;
  }
  if (seeds) cfg.run.seeds = *seeds;
  io::ensure_writable_directory(cfg.run.output);
  const auto result = experiments::simulate(cfg);
  experiments::write_simulation(result, cfg.scenario.dimension(), cfg.run.histogram_bins, cfg.run.output);
  const auto report = experiments::simulation_report(result);
  io::write_atomic(cfg.run.output / "report.txt", report);
  fmt::print("{}", report);
  fmt::print("artifacts written to {}\n", cfg.run.output.string());
  return 0;
}

int run_race(const GlobalOptions& g, std::optional<std::size_t> seeds) {
  auto cfg = load_config(g);
  if (seeds) cfg.race.seeds = *seeds;
  io::ensure_writable_directory(cfg.run.output);
  const auto result = experiments::race(cfg);
  const auto report = experiments::race_report(result);
  io::write_atomic(cfg.run.output / "race.csv", experiments::race_csv(result));
  io::write_atomic(cfg.run.output / "race.txt", report);
  fmt::print("{}", report);
  return 0;
}

int run_estimate(const GlobalOptions& g, const std::string& series, double focal_length) {
  const auto cfg = load_config(g);
  experiments::R0Report report;
  if (!series.empty()) {
    report = experiments::estimate_r0_from_angles(experiments::read_angle_series(series, focal_length), cfg.scenario);
  } else {
    report = experiments::estimate_r0_synthetic(cfg, cfg.run.first_seed);
    fmt::print("synthetic series at r0 = {:.4f} m ({:.0f} nm)\n", cfg.scenario.r0_ref, cfg.scenario.wavelength_ref * 1e9);
  }
  fmt::print("{}", experiments::r0_report(report));
  return 0;
}

int run_autotune(const GlobalOptions& g) {
  const auto cfg = load_config(g);
  io::ensure_writable_directory(cfg.run.output);
  const auto result = experiments::tune(cfg, control::prepare_optics(cfg.scenario));
  io::write_atomic(cfg.run.output / "autotune.csv", experiments::autotune_csv(result));
  fmt::print("{}", experiments::autotune_report(result));
  return result.stable ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modal SPGD fiber-coupling simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "INI file or bundled preset name");
  app.add_option("--seed", g.seed, "first seed (overrides the config)");
  app.add_option("--out", g.out, "output directory (overrides the config)");
  app.add_option("--jobs", g.jobs, "worker threads for seed ensembles and sweeps")->check(CLI::NonNegativeNumber);

  std::optional<double> duration;
  std::optional<std::size_t> sim_seeds, race_seeds;
  auto* simulate = app.add_subcommand("simulate", "paired open/closed-loop runs over matched seeds");
  simulate->add_option("--duration", duration, "simulated seconds per run");
  simulate->add_option("--seeds", sim_seeds, "number of seeds");

  auto* race = app.add_subcommand("race", "SPGD vs M-SPGD convergence on static aberrations");
  race->add_option("--seeds", race_seeds, "number of trials");

  std::string series;
  double focal_length = 0;
  auto* estimate = app.add_subcommand("estimate-r0", "Fried parameter from angle-of-arrival fluctuation");
  estimate->add_option("--series", series, "two-column CSV of angles (rad) or centroids (m, with --focal-length)");
  estimate->add_option("--focal-length", focal_length, "convert centroid displacements to angles")
      ->check(CLI::PositiveNumber);

  auto* tune = app.add_subcommand("autotune", "grid search over perturbation amplitude and gain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (g.jobs > 0) omp_set_num_threads(g.jobs);
    if (*simulate) return run_simulate(g, duration, sim_seeds);
    if (*race) return run_race(g, race_seeds);
    if (*estimate) return run_estimate(g, series, focal_length);
    if (*tune) return run_autotune(g);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
