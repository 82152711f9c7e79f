#include "mspgd/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "mspgd/errors.hpp"
#include "mspgd/io.hpp"
#include "mspgd/rng.hpp"
#include "mspgd/svg.hpp"
#include "mspgd/turbulence.hpp"

namespace mspgd::experiments {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

// Autotune trials never reuse a run seed.
constexpr std::uint64_t kTuningSeedOffset = 1'000'000;

}  // namespace

std::optional<ReferenceValues> reference_for(double d_over_r0) {
  static constexpr std::array<ReferenceValues, 2> kPublished{{{5.4, 3.1, 88.7, 51.1}, {9.5, 3.7, 97.3, 53.7}}};
  for (const auto& r : kPublished) {
    if (std::abs(r.d_over_r0 - d_over_r0) < 0.5) return r;
  }
  return std::nullopt;
}

control::AutotuneResult tune(const config::ExperimentConfig& cfg,
                             std::shared_ptr<const control::PreparedOptics> optics) {
  const auto seeds = seed_list(cfg.run.first_seed + kTuningSeedOffset, cfg.autotune.trial_seeds);
  return control::autotune(cfg.scenario, std::move(optics), cfg.autotune.amplitude_grid, cfg.autotune.gain_grid,
                           cfg.autotune.trial_duration, seeds);
}

SimulationResult simulate(const config::ExperimentConfig& cfg) {
  control::Scenario scenario = cfg.scenario;
  scenario.validate();
  if (scenario.duration * scenario.timing.iteration_rate < 2.0) {
    throw NumericalError("simulate: duration yields fewer than two loop iterations, statistics are undefined");
  }
  const auto optics = control::prepare_optics(scenario);

  SimulationResult result;
  result.scenario = scenario.name;
  result.d_over_r0 = scenario.d_over_r0_ref();
  if (cfg.autotune.enabled) {
    result.tuning = tune(cfg, optics);
    if (!result.tuning->stable) throw NumericalError("autotune: no stable parameters (every cell fell below open loop)");
    scenario.gain = result.tuning->gain;
    scenario.amplitude = result.tuning->amplitude;
  }
  result.gain = scenario.gain;
  result.amplitude = scenario.amplitude;

  const auto seeds = seed_list(cfg.run.first_seed, cfg.run.seeds);
  result.runs.resize(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto screen = control::make_screen(scenario, seeds[i]);
    control::LinkSimulator open_plant(scenario, optics, screen, seeds[i]);
    control::LinkSimulator closed_plant(scenario, optics, screen, seeds[i]);
    PairedRun& run = result.runs[i];
    run.seed = seeds[i];
    run.open = control::run_open_loop(scenario, open_plant);
    run.closed = control::run_closed_loop(scenario, closed_plant, seeds[i]);
    run.summary = metrics::summarize(scenario.name, result.d_over_r0, run.open.eta_series(), run.closed.eta_series(),
                                     scenario.duration, {seeds[i]}, cfg.run.histogram_bins);
  }

  std::vector<double> all_open, all_closed, db, rsd_open, rsd_closed, reduction;
  for (const auto& run : result.runs) {
    const auto o = run.open.eta_series();
    const auto c = run.closed.eta_series();
    all_open.insert(all_open.end(), o.begin(), o.end());
    all_closed.insert(all_closed.end(), c.begin(), c.end());
    db.push_back(run.summary.improvement_db);
    rsd_open.push_back(run.summary.rsd_open);
    rsd_closed.push_back(run.summary.rsd_closed);
    reduction.push_back(run.summary.rsd_open - run.summary.rsd_closed);
    if (run.summary.rsd_closed < run.summary.rsd_open) ++result.seeds_with_lower_rsd;
  }
  result.pooled = metrics::summarize(scenario.name, result.d_over_r0, all_open, all_closed, scenario.duration, seeds,
                                     cfg.run.histogram_bins);
  result.median_improvement_db = median(db);
  result.median_rsd_open = median(rsd_open);
  result.median_rsd_closed = median(rsd_closed);
  result.median_rsd_reduction = median(reduction);
  return result;
}

std::string simulation_report(const SimulationResult& r) {
  std::string out = fmt::format("scenario {}  D/r0 = {:.2f}  seeds = {}  gain = {:g}  amplitude = {:g}\n", r.scenario,
                                r.d_over_r0, r.runs.size(), r.gain, r.amplitude);
  if (r.tuning) {
    out += fmt::format("autotuned over {} cells (open-loop mean J {:.4f})\n", r.tuning->table.size(),
                       r.tuning->open_loop_mean_metric);
  }
  out += fmt::format("{:>6} {:>10} {:>10} {:>8} {:>9} {:>9}\n", "seed", "eta_open", "eta_closed", "dB", "RSD_open",
                     "RSD_closed");
  for (const auto& run : r.runs) {
    const auto& s = run.summary;
    out += fmt::format("{:>6} {:>10.4f} {:>10.4f} {:>+8.2f} {:>8.1f}% {:>8.1f}%\n", run.seed, s.mean_eta_open,
                       s.mean_eta_closed, s.improvement_db, s.rsd_open, s.rsd_closed);
  }
  out += fmt::format("median improvement {:+.2f} dB, RSD {:.1f}% -> {:.1f}% (reduction {:.1f} pp), "
                     "closed RSD below open in {}/{} seeds\n",
                     r.median_improvement_db, r.median_rsd_open, r.median_rsd_closed, r.median_rsd_reduction,
                     r.seeds_with_lower_rsd, r.runs.size());
  const auto wrapped = std::count_if(r.runs.begin(), r.runs.end(), [](const PairedRun& p) { return p.open.screen_wrapped; });
  if (wrapped > 0) {
    out += fmt::format("warning: the aperture crossed the screen seam in {} seed(s); raise screen_pixels or lower "
                       "the duration\n", wrapped);
  }
  if (const auto ref = reference_for(r.d_over_r0)) {
    out += fmt::format("field measurement at D/r0 = {:.1f}: {:+.1f} dB, RSD {:.1f}% -> {:.1f}%\n", ref->d_over_r0,
                       ref->improvement_db, ref->rsd_open, ref->rsd_closed);
  }
  return out;
}

void write_simulation(const SimulationResult& r, std::size_t parameter_count, std::size_t bins,
                      const std::filesystem::path& dir) {
  io::ensure_writable_directory(dir);
  for (const auto& run : r.runs) {
    io::write_atomic(dir / fmt::format("open_seed{}.csv", run.seed), io::trajectory_csv(run.open, parameter_count));
    io::write_atomic(dir / fmt::format("closed_seed{}.csv", run.seed),
                     io::trajectory_csv(run.closed, parameter_count));
  }

  std::string kv = metrics::to_key_value(r.pooled);
  kv += fmt::format("gain = {:.9g}\namplitude = {:.9g}\n", r.gain, r.amplitude);
  kv += fmt::format("median_improvement_db = {:.6f}\nmedian_rsd_open = {:.6f}\nmedian_rsd_closed = {:.6f}\n",
                    r.median_improvement_db, r.median_rsd_open, r.median_rsd_closed);
  kv += fmt::format("median_rsd_reduction = {:.6f}\nseeds_with_lower_rsd = {}\n", r.median_rsd_reduction,
                    r.seeds_with_lower_rsd);
  kv += fmt::format("seeds_with_screen_wrap = {}\n",
                    std::count_if(r.runs.begin(), r.runs.end(), [](const PairedRun& p) { return p.open.screen_wrapped; }));
  if (const auto ref = reference_for(r.d_over_r0)) {
    kv += fmt::format("reference_improvement_db = {:g}\nreference_rsd_open = {:g}\nreference_rsd_closed = {:g}\n",
                      ref->improvement_db, ref->rsd_open, ref->rsd_closed);
  }
  io::write_atomic(dir / "summary.txt", kv);

  std::string csv = metrics::csv_header();
  for (const auto& run : r.runs) csv += metrics::to_csv_row(run.summary);
  csv += metrics::to_csv_row(r.pooled);
  io::write_atomic(dir / "summary.csv", csv);
  if (r.tuning) io::write_atomic(dir / "autotune.csv", autotune_csv(*r.tuning));
  if (r.runs.empty()) return;

  const auto& first = r.runs.front();
  std::vector<double> t;
  for (const auto& row : first.open.rows) t.push_back(row.time_s);
  const std::array<svg::Column, 2> traces{svg::Column{"open loop", first.open.eta_series()},
                                          svg::Column{"closed loop", first.closed.eta_series()}};
  const auto trace = svg::trace_plot(fmt::format("Coupling efficiency, D/r0 = {:.1f}, seed {}", r.d_over_r0, first.seed),
                                     "time_s", "coupling efficiency", t, traces);
  io::write_atomic(dir / "trace.svg", trace.svg);
  io::write_atomic(dir / "trace.csv", trace.csv);

  (void)bins;
  const std::array<svg::NamedHistogram, 2> hists{svg::NamedHistogram{"open loop", r.pooled.histogram_open},
                                                 svg::NamedHistogram{"closed loop", r.pooled.histogram_closed}};
  const auto hist = svg::histogram_plot(fmt::format("Coupling efficiency distribution, D/r0 = {:.1f}", r.d_over_r0),
                                        "coupling efficiency", hists);
  io::write_atomic(dir / "histogram.svg", hist.svg);
  io::write_atomic(dir / "histogram.csv", hist.csv);
}

std::vector<double> static_aberration(const zernike::ZernikeBasis& basis, double rms, std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::kAberration);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd a(static_cast<Eigen::Index>(basis.mode_count()));
  for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = gauss(rng);
  Eigen::VectorXd phase = basis.packed() * a;
  phase.array() -= phase.mean();
  const double current = std::sqrt(phase.squaredNorm() / static_cast<double>(phase.size()));
  if (current > 0.0) phase *= rms / current;
  return {phase.data(), phase.data() + phase.size()};
}

double mirror_ceiling(const control::PreparedOptics& optics, std::span<const double> phase) {
  const auto& dm = optics.mirror;
  const auto n = static_cast<Eigen::Index>(dm.actuator_count());
  const auto pixels = static_cast<Eigen::Index>(phase.size());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> influence(
      dm.influence_matrix().data(), pixels, n);
  const Eigen::Map<const Eigen::VectorXd> target(phase.data(), pixels);
  const Eigen::VectorXd u = influence.colPivHouseholderQr().solve(target);
  const Eigen::VectorXd residual = target - influence * u;
  return optics.coupler.eta_from_phase({residual.data(), static_cast<std::size_t>(residual.size())});
}

std::optional<std::size_t> evaluations_to_target(std::span<const double> eta, double target) {
  constexpr std::size_t kWindow = 10;
  double running = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    running += eta[i];
    if (i >= kWindow) running -= eta[i - kWindow];
    if (running / static_cast<double>(std::min(i + 1, kWindow)) >= target) return 2 * (i + 1);
  }
  return std::nullopt;
}

namespace {

double tail_mean(std::span<const double> eta) {
  const std::size_t tail = std::max<std::size_t>(1, eta.size() / 10);
  double sum = 0.0;
  for (std::size_t i = eta.size() - tail; i < eta.size(); ++i) sum += eta[i];
  return sum / static_cast<double>(tail);
}

struct Leg {
  std::size_t evaluations = 0;
  bool reached = false;
  double plateau = 0;
};

// One optimizer on one static aberration. Runs that never reach the target are
// charged the full budget.
Leg run_leg(const control::Scenario& s, const std::shared_ptr<const control::PreparedOptics>& optics,
            const std::vector<double>& phase, std::uint64_t seed, double target) {
  control::LinkSimulator plant(s, optics, phase, seed);
  const auto eta = control::run_closed_loop(s, plant, seed).eta_series();
  Leg leg;
  leg.plateau = tail_mean(eta);
  const auto hit = evaluations_to_target(eta, target);
  leg.reached = hit.has_value();
  leg.evaluations = hit.value_or(2 * eta.size());
  return leg;
}

// Gain with the fewest median evaluations to target on the tuning seeds.
double tune_race_gain(control::Scenario s, const std::shared_ptr<const control::PreparedOptics>& optics,
                      const std::vector<std::vector<double>>& phases, const std::vector<std::uint64_t>& seeds,
                      const std::vector<double>& targets, const std::vector<double>& grid) {
  std::vector<double> score(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    s.gain = grid[g];
    std::vector<double> evals(seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      evals[i] = static_cast<double>(run_leg(s, optics, phases[i], seeds[i], targets[i]).evaluations);
    }
    score[g] = median(evals);
  }
  return grid[static_cast<std::size_t>(std::min_element(score.begin(), score.end()) - score.begin())];
}

}  // namespace

RaceResult race(const config::ExperimentConfig& cfg) {
  const auto& rc = cfg.race;
  control::Scenario modal = cfg.scenario;
  modal.mode = control::OptimizerMode::kModalSpgd;
  modal.duration = static_cast<double>(rc.iterations) / modal.timing.iteration_rate;
  if (rc.mspgd_amplitude > 0) modal.amplitude = rc.mspgd_amplitude;
  modal.validate();
  control::Scenario zonal = modal;
  zonal.mode = control::OptimizerMode::kSpgd;
  zonal.amplitude = rc.spgd_amplitude > 0 ? rc.spgd_amplitude : cfg.scenario.amplitude;

  const auto optics = control::prepare_optics(modal);
  const zernike::ZernikeBasis aberration_basis(rc.aberration_modes, modal.sampling.pupil_pixels);
  const auto draw = [&](const std::vector<std::uint64_t>& seeds, std::vector<std::vector<double>>& phases,
                        std::vector<double>& ceilings) {
    phases.resize(seeds.size());
    ceilings.resize(seeds.size());
#pragma omp parallel for
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      phases[i] = static_aberration(aberration_basis, rc.aberration_rms, seeds[i]);
      ceilings[i] = mirror_ceiling(*optics, phases[i]);
    }
  };

  RaceResult result;
  if (rc.spgd_gain > 0 && rc.mspgd_gain > 0) {
    zonal.gain = rc.spgd_gain;
    modal.gain = rc.mspgd_gain;
  } else {
    const auto tuning_seeds = seed_list(cfg.run.first_seed + kTuningSeedOffset, rc.tuning_seeds);
    std::vector<std::vector<double>> phases;
    std::vector<double> targets;
    draw(tuning_seeds, phases, targets);
    for (auto& t : targets) t *= rc.plateau_fraction;
    zonal.gain = rc.spgd_gain > 0 ? rc.spgd_gain
                                  : tune_race_gain(zonal, optics, phases, tuning_seeds, targets, rc.gain_grid);
    modal.gain = rc.mspgd_gain > 0 ? rc.mspgd_gain
                                   : tune_race_gain(modal, optics, phases, tuning_seeds, targets, rc.gain_grid);
  }
  result.spgd_gain = zonal.gain;
  result.mspgd_gain = modal.gain;
  result.spgd_dimension = zonal.dimension();
  result.mspgd_dimension = modal.dimension();

  const auto seeds = seed_list(cfg.run.first_seed, rc.seeds);
  std::vector<std::vector<double>> phases;
  std::vector<double> ceilings;
  draw(seeds, phases, ceilings);
  result.trials.resize(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    RaceTrial& trial = result.trials[i];
    trial.seed = seeds[i];
    trial.ceiling_eta = ceilings[i];
    trial.initial_eta = optics->coupler.eta_from_phase(phases[i]);
    const double target = rc.plateau_fraction * ceilings[i];
    const auto z = run_leg(zonal, optics, phases[i], seeds[i], target);
    const auto m = run_leg(modal, optics, phases[i], seeds[i], target);
    trial.spgd_evaluations = z.evaluations;
    trial.spgd_reached = z.reached;
    trial.spgd_plateau = z.plateau;
    trial.mspgd_evaluations = m.evaluations;
    trial.mspgd_reached = m.reached;
    trial.mspgd_plateau = m.plateau;
  }

  std::vector<double> zs, ms;
  for (const auto& t : result.trials) {
    zs.push_back(static_cast<double>(t.spgd_evaluations));
    ms.push_back(static_cast<double>(t.mspgd_evaluations));
    if (t.mspgd_evaluations < t.spgd_evaluations) ++result.mspgd_wins;
    else if (t.spgd_evaluations < t.mspgd_evaluations) ++result.spgd_wins;
    else ++result.ties;
  }
  result.median_spgd = median(zs);
  result.median_mspgd = median(ms);
  result.insufficient_sample = result.trials.size() < 2;

  // Two-sided sign test on the decided trials at the 5% level.
  const std::size_t decided = result.mspgd_wins + result.spgd_wins;
  const std::size_t k = std::min(result.mspgd_wins, result.spgd_wins);
  double p = 0.0;
  for (std::size_t j = 0; j <= k && decided > 0; ++j) {
    p += std::exp(std::lgamma(decided + 1.0) - std::lgamma(j + 1.0) - std::lgamma(decided - j + 1.0) -
                  static_cast<double>(decided) * std::numbers::ln2);
  }
  p = std::min(1.0, 2.0 * p);
  if (decided == 0 || p > 0.05) result.verdict = "tie";
  else result.verdict = result.mspgd_wins > result.spgd_wins ? "mspgd faster" : "spgd faster";
  return result;
}

std::string race_report(const RaceResult& r) {
  std::string out = fmt::format("SPGD ({} actuators, gain {:g}) vs M-SPGD ({} modes, gain {:g}), {} trials\n",
                                r.spgd_dimension, r.spgd_gain, r.mspgd_dimension, r.mspgd_gain, r.trials.size());
  out += fmt::format("{:>6} {:>9} {:>9} {:>10} {:>10} {:>9} {:>9} {:>7}\n", "seed", "eta_start", "ceiling",
                     "spgd_eval", "mspgd_eval", "plat_s", "plat_m", "winner");
  const auto cell = [](std::size_t n, bool reached) { return reached ? fmt::format("{}", n) : fmt::format(">{}", n); };
  for (const auto& t : r.trials) {
    const char* winner = t.mspgd_evaluations < t.spgd_evaluations   ? "mspgd"
                         : t.spgd_evaluations < t.mspgd_evaluations ? "spgd"
                                                                    : "tie";
    out += fmt::format("{:>6} {:>9.4f} {:>9.4f} {:>10} {:>10} {:>9.4f} {:>9.4f} {:>7}\n", t.seed, t.initial_eta,
                       t.ceiling_eta, cell(t.spgd_evaluations, t.spgd_reached),
                       cell(t.mspgd_evaluations, t.mspgd_reached), t.spgd_plateau, t.mspgd_plateau, winner);
  }
  out += fmt::format("wins: mspgd {}  spgd {}  ties {}\n", r.mspgd_wins, r.spgd_wins, r.ties);
  out += fmt::format("median evaluations to target: spgd {:g}  mspgd {:g}\n", r.median_spgd, r.median_mspgd);
  out += fmt::format("verdict: {}\n", r.verdict);
  if (r.insufficient_sample) out += "warning: a single trial is not enough for a meaningful median\n";
  return out;
}

std::string race_csv(const RaceResult& r) {
  std::string out =
      "seed,initial_eta,ceiling_eta,spgd_gain,mspgd_gain,spgd_evaluations,mspgd_evaluations,spgd_reached,"
      "mspgd_reached,spgd_plateau,mspgd_plateau\n";
  for (const auto& t : r.trials) {
    out += fmt::format("{},{:.9g},{:.9g},{:g},{:g},{},{},{:d},{:d},{:.9g},{:.9g}\n", t.seed, t.initial_eta,
                       t.ceiling_eta, r.spgd_gain, r.mspgd_gain, t.spgd_evaluations, t.mspgd_evaluations,
                       t.spgd_reached, t.mspgd_reached, t.spgd_plateau, t.mspgd_plateau);
  }
  return out;
}

std::vector<std::array<double, 2>> read_angle_series(const std::filesystem::path& path, double focal_length) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read series '{}'", path.string()));
  std::vector<std::array<double, 2>> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x = 0, y = 0;
    if (!(fields >> x >> y)) {
      if (line_no == 1) continue;  // header
      throw ConfigError(fmt::format("{}:{}: expected two numbers", path.string(), line_no));
    }
    values.push_back({x, y});
  }
  if (values.size() < 2) throw ConfigError(fmt::format("{}: at least two samples are required", path.string()));
  return focal_length > 0 ? turbulence::centroids_to_angles(values, focal_length) : values;
}

R0Report estimate_r0_from_angles(const std::vector<std::array<double, 2>>& angles, const control::Scenario& s) {
  R0Report r;
  r.samples = angles.size();
  r.delta_alpha = turbulence::angle_of_arrival_stdev(angles);
  r.wavelength_ref = s.wavelength_ref;
  r.wavelength_signal = s.fiber.wavelength;
  const double k = 2.0 * std::numbers::pi / s.wavelength_ref;
  const auto est = turbulence::estimate_r0(r.delta_alpha, s.sampling.aperture_diameter, k);
  r.r0_ref = est.r0;
  r.d_over_r0_ref = est.d_over_r0;
  r.r0_signal = turbulence::scale_r0(est.r0, s.wavelength_ref, s.fiber.wavelength);
  r.d_over_r0_signal = s.sampling.aperture_diameter / r.r0_signal;
  return r;
}

R0Report estimate_r0_synthetic(const config::ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& s = cfg.scenario;
  turbulence::AngleOfArrivalSetup setup;
  setup.r0 = s.r0_ref;
  setup.wavelength = s.wavelength_ref;
  setup.aperture_diameter = s.sampling.aperture_diameter;
  setup.outer_scale = cfg.estimate.outer_scale > 0 ? cfg.estimate.outer_scale : turbulence::kInfiniteOuterScale;
  setup.wind = s.wind;
  setup.aperture_pixels = cfg.estimate.aperture_pixels;
  setup.screen_pixels = cfg.estimate.screen_pixels;
  setup.seed = seed;
  const auto angles = turbulence::angle_of_arrival_series(setup, cfg.estimate.samples, cfg.estimate.sample_rate);
  return estimate_r0_from_angles(angles, s);
}

std::string r0_report(const R0Report& r) {
  return fmt::format(
      "samples          {}\n"
      "delta_alpha      {:.4e} rad\n"
      "r0 @ {:.0f} nm     {:.4f} m   D/r0 = {:.2f}\n"
      "r0 @ {:.0f} nm    {:.4f} m   D/r0 = {:.2f}\n",
      r.samples, r.delta_alpha, r.wavelength_ref * 1e9, r.r0_ref, r.d_over_r0_ref, r.wavelength_signal * 1e9,
      r.r0_signal, r.d_over_r0_signal);
}

std::string autotune_csv(const control::AutotuneResult& result) {
  std::string out = "amplitude,gain,mean_metric,mean_eta\n";
  for (const auto& c : result.table) {
    out += fmt::format("{:.9g},{:.9g},{:.9g},{:.9g}\n", c.amplitude, c.gain, c.mean_metric, c.mean_eta);
  }
  return out;
}

std::string autotune_report(const control::AutotuneResult& r) {
  std::string out = fmt::format("open-loop mean J {:.4f}\n", r.open_loop_mean_metric);
  out += fmt::format("{:>10} {:>8} {:>10}\n", "amplitude", "gain", "mean_J");
  for (const auto& c : r.table) out += fmt::format("{:>10g} {:>8g} {:>10.4f}\n", c.amplitude, c.gain, c.mean_metric);
  if (!r.stable) {
    out += "no stable parameters: every cell fell below the open-loop mean\n";
    return out;
  }
  out += fmt::format("best: amplitude {:g}, gain {:g}\n", r.amplitude, r.gain);
  if (r.amplitude_on_boundary || r.gain_on_boundary) {
    out += fmt::format("note: optimum on the grid edge ({}{}); consider extending the grid\n",
                       r.amplitude_on_boundary ? "amplitude" : "",
                       r.amplitude_on_boundary && r.gain_on_boundary ? ", gain" : (r.gain_on_boundary ? "gain" : ""));
  }
  return out;
}

}  // namespace mspgd::experiments
