#include "mspgd/control.hpp"

#include <cmath>
#include <string>

#include "mspgd/errors.hpp"
#include "mspgd/rng.hpp"

namespace mspgd::control {

const char* to_string(OptimizerMode mode) { return mode == OptimizerMode::kSpgd ? "spgd" : "mspgd"; }

ControlState make_state(OptimizerMode mode, std::size_t dimension, double gain, double amplitude,
                        std::uint64_t seed) {
  ControlState s;
  s.mode = mode;
  s.parameters.assign(dimension, 0.0);
  s.gain = gain;
  s.amplitude = amplitude;
  s.rng = make_rng(seed, Stream::kPerturbation);
  return s;
}

void LoopTiming::validate() const {
  if (!(iteration_rate > 0.0) || !(readout_latency >= 0.0)) {
    throw InfeasibleTiming("loop timing: rate must be positive and latency non-negative");
  }
  if (kMeasurementsPerIteration * readout_latency > period() * (1.0 + 1e-9)) {
    throw InfeasibleTiming("loop timing: two readouts of " + std::to_string(readout_latency * 1e6) +
                           " us do not fit in a " + std::to_string(period() * 1e6) + " us iteration");
  }
}

std::vector<double> perturbation(std::size_t dimension, double amplitude, std::mt19937_64& rng) {
  std::vector<double> d(dimension);
  for (auto& v : d) v = (rng() >> 63) ? amplitude : -amplitude;
  return d;
}

std::vector<double> apply_update(std::span<const double> parameters, double gain, double delta_j,
                                 std::span<const double> delta) {
  std::vector<double> out(parameters.begin(), parameters.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gain * delta_j * delta[i];
  return out;
}

namespace {

template <typename ToVoltages>
StepRecord two_sided_step(ControlState& state, const ToVoltages& to_voltages, const MetricEvaluator& evaluate) {
  const auto rng_before = state.rng;
  StepRecord rec;
  rec.delta = perturbation(state.parameters.size(), state.amplitude, state.rng);
  if (!state.amplitude_scale.empty()) {
    for (std::size_t i = 0; i < rec.delta.size(); ++i) rec.delta[i] *= state.amplitude_scale[i];
  }
  std::vector<double> probe(state.parameters.size());
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = state.parameters[i] + rec.delta[i];
  rec.plus = evaluate(to_voltages(probe));
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = state.parameters[i] - rec.delta[i];
  rec.minus = evaluate(to_voltages(probe));

  if (!std::isfinite(rec.plus.metric) || !std::isfinite(rec.minus.metric)) {
    state.rng = rng_before;
    ++state.faults;
    return rec;
  }
  rec.delta_j = rec.plus.metric - rec.minus.metric;
  double dj = rec.delta_j;
  if (state.normalize_delta_j) {
    const double mean = 0.5 * (rec.plus.metric + rec.minus.metric);
    dj = mean != 0.0 ? dj / mean : 0.0;
  }
  state.parameters = apply_update(state.parameters, state.gain, dj, rec.delta);
  ++state.iteration;
  rec.ok = true;
  return rec;
}

}  // namespace

StepRecord spgd_step(ControlState& state, const MetricEvaluator& evaluate) {
  return two_sided_step(state, [](const std::vector<double>& p) { return p; }, evaluate);
}

StepRecord mspgd_step(ControlState& state, const optics::ModalMap& map, const MetricEvaluator& evaluate) {
  if (map.mode_count() != state.parameters.size()) {
    throw ConfigError("mspgd_step: parameter dimension " + std::to_string(state.parameters.size()) +
                      " does not match modal map with " + std::to_string(map.mode_count()) + " modes");
  }
  return two_sided_step(state, [&](const std::vector<double>& a) { return map.voltages(a); }, evaluate);
}

}  // namespace mspgd::control
