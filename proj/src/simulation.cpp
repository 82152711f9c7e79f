#include "mspgd/simulation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mspgd/errors.hpp"
#include "mspgd/rng.hpp"

namespace mspgd::control {

double Scenario::r0_signal() const { return turbulence::scale_r0(r0_ref, wavelength_ref, fiber.wavelength); }

double Scenario::d_over_r0_ref() const { return sampling.aperture_diameter / r0_ref; }

std::size_t Scenario::dimension() const {
  return mode == OptimizerMode::kSpgd ? mirror.actuator_count : modes.size();
}

void Scenario::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(r0_ref, "r0");
  positive(wavelength_ref, "reference wavelength");
  positive(outer_scale, "outer scale");
  positive(sampling.aperture_diameter, "aperture diameter");
  positive(fiber.focal_length, "focal length");
  positive(fiber.wavelength, "signal wavelength");
  positive(mirror.influence_sigma, "influence sigma");
  positive(mirror.voltage_gain, "voltage gain");
  positive(mirror.voltage_limit, "voltage limit");
  positive(static_cast<double>(mirror.actuator_count), "actuator count");
  positive(amplitude, "perturbation amplitude");
  if (gain < 0.0) throw ConfigError("gain must be non-negative");
  if (jitter_rms < 0.0 || metric_noise < 0.0) throw ConfigError("jitter and metric noise must be non-negative");
  if (jitter_rms > 0.0) positive(jitter_bandwidth, "jitter bandwidth");
  if (duration < 0.0) throw ConfigError("duration must be non-negative");
  if (modes.empty()) throw ConfigError("at least one modal-basis mode is required");
  for (int j : modes) {
    if (j < 1) throw ConfigError("Noll indices start at 1");
  }
  if (map_kind == ModalMapKind::kIdentity && modes.size() != mirror.actuator_count) {
    throw ConfigError("identity modal map needs as many modes as actuators");
  }
  if (sampling.pupil_pixels < 16 || sampling.pupil_pixels % 2 != 0) {
    throw ConfigError("pupil pixels must be even and >= 16");
  }
  if (screen_pixels % 2 != 0 || screen_pixels < sampling.pupil_pixels) {
    throw ConfigError("screen pixels must be even and at least the pupil size");
  }
  timing.validate();
}

std::shared_ptr<const PreparedOptics> prepare_optics(const Scenario& scenario) {
  const std::size_t n = scenario.sampling.pupil_pixels;
  zernike::ZernikeBasis basis(scenario.modes, n);
  optics::DeformableMirror mirror(scenario.mirror, n);
  optics::ModalMap map = scenario.map_kind == ModalMapKind::kIdentity
                             ? optics::ModalMap::identity(mirror.actuator_count())
                             : optics::fit_modal_map(mirror, basis);

  optics::FiberModel fiber = scenario.fiber;
  optics::ModeRadius radius{fiber.mode_field_radius, 0, 0, 0};
  if (!(fiber.mode_field_radius > 0.0)) {
    radius = optics::optimize_mode_radius(scenario.sampling, fiber);
    fiber.mode_field_radius = radius.radius;
  }
  optics::FiberCoupler coupler(scenario.sampling, fiber);
  std::vector<double> flat(coupler.geometry().count(), 0.0);
  const double ceiling = coupler.eta_from_phase(flat);

  // Tip/tilt projector from the sampled Z2, Z3.
  const std::vector<int> tilt_modes{2, 3};
  zernike::ZernikeBasis tilt(tilt_modes, n);
  const Eigen::MatrixXd& T = tilt.packed();
  const Eigen::MatrixXd proj = (T.transpose() * T).ldlt().solve(T.transpose());
  std::vector<double> projector(static_cast<std::size_t>(proj.size()));
  for (Eigen::Index r = 0; r < proj.rows(); ++r) {
    for (Eigen::Index c = 0; c < proj.cols(); ++c) projector[static_cast<std::size_t>(r * proj.cols() + c)] = proj(r, c);
  }
  std::vector<double> modes(static_cast<std::size_t>(T.size()));
  for (Eigen::Index r = 0; r < T.rows(); ++r) {
    for (Eigen::Index c = 0; c < T.cols(); ++c) modes[static_cast<std::size_t>(r * T.cols() + c)] = T(r, c);
  }

  return std::make_shared<const PreparedOptics>(PreparedOptics{std::move(basis), std::move(mirror), std::move(map),
                                                               std::move(coupler), ceiling, fiber.mode_field_radius,
                                                               std::move(projector), std::move(modes)});
}

TiltJitter::TiltJitter(double rms, double bandwidth, std::uint64_t seed)
    : rms_(rms), bandwidth_(bandwidth), rng_(make_rng(seed, Stream::kJitter)) {
  if (rms_ > 0.0) angle_ = {rms_ * gauss_(rng_), rms_ * gauss_(rng_)};
}

void TiltJitter::advance(double dt) {
  if (!(rms_ > 0.0) || dt <= 0.0) return;
  const double rho = std::exp(-2.0 * std::numbers::pi * bandwidth_ * dt);
  const double kick = rms_ * std::sqrt(1.0 - rho * rho);
  for (double& a : angle_) a = rho * a + kick * gauss_(rng_);
}

std::shared_ptr<const turbulence::PhaseScreen> make_screen(const Scenario& scenario, std::uint64_t seed) {
  turbulence::ScreenSpec spec;
  spec.r0 = scenario.r0_signal();
  spec.outer_scale = scenario.outer_scale;
  spec.grid_size = scenario.screen_pixels;
  spec.pixel_pitch = scenario.sampling.pixel_pitch();
  spec.wavelength = scenario.fiber.wavelength;
  spec.seed = seed;
  spec.subharmonic_levels = scenario.subharmonic_levels;
  spec.aperture_diameter = scenario.sampling.aperture_diameter;
  return std::make_shared<const turbulence::PhaseScreen>(turbulence::generate_screen(spec));
}

LinkSimulator::LinkSimulator(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                             std::uint64_t seed)
    : LinkSimulator(scenario, optics, make_screen(scenario, seed), seed) {}

LinkSimulator::LinkSimulator(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                             std::shared_ptr<const turbulence::PhaseScreen> screen, std::uint64_t seed)
    : scenario_(scenario),
      optics_(std::move(optics)),
      jitter_(scenario.jitter_rms, scenario.jitter_bandwidth, seed),
      noise_rng_(make_rng(seed, Stream::kMetricNoise)),
      window_(scenario.sampling.pupil_pixels) {
  flow_.emplace(std::move(screen), scenario.sampling.pupil_pixels, scenario.wind);
  const std::size_t pixels = optics_->coupler.geometry().count();
  turbulence_.resize(pixels);
  total_.resize(pixels);
  mirror_.resize(pixels);
}

LinkSimulator::LinkSimulator(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                             std::vector<double> static_phase, std::uint64_t seed)
    : scenario_(scenario),
      optics_(std::move(optics)),
      static_phase_(std::move(static_phase)),
      jitter_(scenario.jitter_rms, scenario.jitter_bandwidth, seed),
      noise_rng_(make_rng(seed, Stream::kMetricNoise)) {
  const std::size_t pixels = optics_->coupler.geometry().count();
  if (static_phase_.size() != pixels) throw std::invalid_argument("LinkSimulator: static phase size mismatch");
  turbulence_.resize(pixels);
  total_.resize(pixels);
  mirror_.resize(pixels);
}

void LinkSimulator::advance(double dt) {
  if (dt <= 0.0) return;
  time_ += dt;
  if (flow_ && !scenario_.static_screen) flow_->evolve(scenario_.wind, dt);
  jitter_.advance(dt);
}

void LinkSimulator::residual_phase(std::span<const double> voltages, std::span<double> out) {
  const auto idx = optics_->coupler.geometry().indices();
  if (flow_) {
    flow_->window(window_);
    for (std::size_t k = 0; k < idx.size(); ++k) turbulence_[k] = window_[idx[k]];
  } else {
    std::copy(static_phase_.begin(), static_phase_.end(), turbulence_.begin());
  }
  const std::size_t pixels = idx.size();
  if (scenario_.apt_removes_tilt) {
    const double* p = optics_->tilt_projector.data();
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t k = 0; k < pixels; ++k) {
      cx += p[k] * turbulence_[k];
      cy += p[pixels + k] * turbulence_[k];
    }
    const double* t = optics_->tilt_modes.data();
    for (std::size_t k = 0; k < pixels; ++k) turbulence_[k] -= cx * t[2 * k] + cy * t[2 * k + 1];
  }
  const auto [ax, ay] = jitter_.angle();
  const auto tx = optics_->coupler.tilt_x();
  const auto ty = optics_->coupler.tilt_y();
  bool flat = true;
  for (double v : voltages) flat = flat && v == 0.0;
  if (!flat) optics_->mirror.packed_phase(voltages, mirror_);
  for (std::size_t k = 0; k < pixels; ++k) {
    out[k] = turbulence_[k] + ax * tx[k] + ay * ty[k] - (flat ? 0.0 : mirror_[k]);
  }
}

double LinkSimulator::true_eta(std::span<const double> voltages) {
  const auto cmd = optics_->mirror.clamp(voltages);
  residual_phase(cmd.voltages, total_);
  return optics_->coupler.eta_from_phase(total_);
}

MetricReading LinkSimulator::measure(std::span<const double> voltages) {
  const auto cmd = optics_->mirror.clamp(voltages);
  residual_phase(cmd.voltages, total_);
  MetricReading r;
  r.eta = optics_->coupler.eta_from_phase(total_);
  r.saturated = cmd.saturated;
  r.metric = r.eta;
  if (scenario_.metric_noise > 0.0) r.metric += scenario_.metric_noise * optics_->eta_ceiling * gauss_(noise_rng_);
  return r;
}

std::vector<double> Trajectory::eta_series() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.eta);
  return out;
}

std::vector<double> Trajectory::metric_series() const {
  std::vector<double> out;
  out.reserve(2 * rows.size());
  for (const auto& r : rows) {
    out.push_back(r.j_plus);
    out.push_back(r.j_minus);
  }
  return out;
}

namespace {

std::size_t iteration_count(const Scenario& s) {
  return static_cast<std::size_t>(std::floor(s.duration * s.timing.iteration_rate + 1e-9));
}

std::vector<double> order_scaling(const Scenario& s) {
  std::vector<double> scale;
  if (!s.scale_amplitude_by_order || s.mode != OptimizerMode::kModalSpgd) return scale;
  // Kolmogorov modal RMS falls roughly as j^(-sqrt(3)/4).
  const double first = static_cast<double>(s.modes.front());
  for (int j : s.modes) scale.push_back(std::pow(static_cast<double>(j) / first, -std::sqrt(3.0) / 4.0));
  return scale;
}

}  // namespace

Trajectory run_closed_loop(const Scenario& scenario, LinkSimulator& plant, std::uint64_t seed) {
  scenario.timing.validate();
  const auto& optics = plant.optics();
  ControlState state = make_state(scenario.mode, scenario.dimension(), scenario.gain, scenario.amplitude, seed);
  state.normalize_delta_j = scenario.normalize_delta_j;
  state.amplitude_scale = order_scaling(scenario);
  if (scenario.mode == OptimizerMode::kModalSpgd && optics.modal_map.mode_count() != state.parameters.size()) {
    throw ConfigError("closed loop: modal map does not match the configured modes");
  }
  const double latency = scenario.timing.readout_latency;
  const double rest = scenario.timing.period() - 2.0 * latency;
  const MetricEvaluator evaluate = [&](std::span<const double> u) {
    plant.advance(latency);
    return plant.measure(u);
  };

  Trajectory traj;
  const std::size_t n = iteration_count(scenario);
  traj.rows.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double t0 = plant.time();
    const StepRecord rec = scenario.mode == OptimizerMode::kSpgd ? spgd_step(state, evaluate)
                                                                 : mspgd_step(state, optics.modal_map, evaluate);
    plant.advance(rest);
    traj.measurements += 2;
    if (!rec.ok) {
      ++traj.faults;
      continue;
    }
    TrajectoryRow row;
    row.iteration = m;
    row.time_s = t0;
    row.j_plus = rec.plus.metric;
    row.j_minus = rec.minus.metric;
    row.delta_j = rec.delta_j;
    row.parameters = state.parameters;
    row.eta = 0.5 * (rec.plus.eta + rec.minus.eta);
    row.saturated = rec.plus.saturated + rec.minus.saturated;
    traj.saturated_total += row.saturated;
    traj.rows.push_back(std::move(row));
  }
  traj.screen_wrapped = plant.wrapped();
  return traj;
}

Trajectory run_closed_loop(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                           std::uint64_t seed) {
  scenario.validate();
  if (iteration_count(scenario) == 0) return {};
  LinkSimulator plant(scenario, std::move(optics), seed);
  return run_closed_loop(scenario, plant, seed);
}

Trajectory run_open_loop(const Scenario& scenario, LinkSimulator& plant) {
  scenario.timing.validate();
  const double latency = scenario.timing.readout_latency;
  const double rest = scenario.timing.period() - 2.0 * latency;
  const std::vector<double> flat(plant.optics().mirror.actuator_count(), 0.0);
  Trajectory traj;
  const std::size_t n = iteration_count(scenario);
  traj.rows.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    TrajectoryRow row;
    row.iteration = m;
    row.time_s = plant.time();
    plant.advance(latency);
    const MetricReading plus = plant.measure(flat);
    plant.advance(latency);
    const MetricReading minus = plant.measure(flat);
    plant.advance(rest);
    row.j_plus = plus.metric;
    row.j_minus = minus.metric;
    row.delta_j = plus.metric - minus.metric;
    row.parameters.assign(scenario.dimension(), 0.0);
    row.eta = 0.5 * (plus.eta + minus.eta);
    traj.measurements += 2;
    traj.rows.push_back(std::move(row));
  }
  traj.screen_wrapped = plant.wrapped();
  return traj;
}

Trajectory run_open_loop(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics, std::uint64_t seed) {
  scenario.validate();
  if (iteration_count(scenario) == 0) return {};
  LinkSimulator plant(scenario, std::move(optics), seed);
  return run_open_loop(scenario, plant);
}

AutotuneResult autotune(const Scenario& scenario, std::shared_ptr<const PreparedOptics> optics,
                        std::span<const double> amplitude_grid, std::span<const double> gain_grid,
                        double trial_duration, std::span<const std::uint64_t> seeds) {
  if (amplitude_grid.empty() || gain_grid.empty()) throw ConfigError("autotune: empty parameter grid");
  if (seeds.empty()) throw ConfigError("autotune: at least one seed required");
  if (trial_duration < 2.0) throw ConfigError("autotune: trial duration must be at least 2 s");
  Scenario trial = scenario;
  trial.duration = trial_duration;
  trial.validate();

  std::vector<std::shared_ptr<const turbulence::PhaseScreen>> screens;
  for (auto s : seeds) screens.push_back(make_screen(trial, s));

  auto mean_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
  };

  AutotuneResult result;
  double open_sum = 0.0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    LinkSimulator plant(trial, optics, screens[i], seeds[i]);
    open_sum += mean_of(run_open_loop(trial, plant).metric_series());
  }
  result.open_loop_mean_metric = open_sum / static_cast<double>(seeds.size());

  const std::size_t na = amplitude_grid.size();
  const std::size_t ng = gain_grid.size();
  result.table.resize(na * ng);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t cell = 0; cell < na * ng; ++cell) {
    Scenario s = trial;
    s.amplitude = amplitude_grid[cell / ng];
    s.gain = gain_grid[cell % ng];
    double metric = 0.0;
    double eta = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      LinkSimulator plant(s, optics, screens[i], seeds[i]);
      const Trajectory t = run_closed_loop(s, plant, seeds[i]);
      metric += mean_of(t.metric_series());
      eta += mean_of(t.eta_series());
    }
    result.table[cell] = {s.amplitude, s.gain, metric / static_cast<double>(seeds.size()),
                          eta / static_cast<double>(seeds.size())};
  }

  std::size_t best = 0;
  for (std::size_t cell = 1; cell < result.table.size(); ++cell) {
    if (result.table[cell].mean_metric > result.table[best].mean_metric) best = cell;
  }
  result.amplitude = result.table[best].amplitude;
  result.gain = result.table[best].gain;
  result.stable = result.table[best].mean_metric > result.open_loop_mean_metric;
  const std::size_t ia = best / ng;
  const std::size_t ig = best % ng;
  result.amplitude_on_boundary = na > 1 && (ia == 0 || ia == na - 1);
  result.gain_on_boundary = ng > 1 && (ig == 0 || ig == ng - 1);
  return result;
}

}  // namespace mspgd::control
