#pragma once

// Stochastic parallel gradient descent in actuator space (SPGD) and in modal
// space (M-SPGD): Bernoulli perturbations, the two-sided metric difference and
// the gradient-ascent update p <- p + G * dJ * dp.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "mspgd/errors.hpp"
#include "mspgd/optics.hpp"

namespace mspgd::control {

enum class OptimizerMode { kSpgd, kModalSpgd };

const char* to_string(OptimizerMode mode);

struct ControlState {
  std::vector<double> parameters;  ///< voltages u (SPGD) or Zernike coefficients a (M-SPGD)
  double gain = 1.0;
  double amplitude = 0.1;
  /// Optional per-coordinate multiplier on the perturbation amplitude; empty
  /// means uniform.
  std::vector<double> amplitude_scale;
  /// Use dJ / mean(J+, J-) instead of the raw difference.
  bool normalize_delta_j = false;
  std::uint64_t iteration = 0;
  std::mt19937_64 rng;
  OptimizerMode mode = OptimizerMode::kModalSpgd;
  std::size_t faults = 0;
};

ControlState make_state(OptimizerMode mode, std::size_t dimension, double gain, double amplitude, std::uint64_t seed);

struct LoopTiming {
  double iteration_rate = 500.0;     ///< Hz
  double readout_latency = 900e-6;   ///< seconds from mirror command to metric readout
  static constexpr int kMeasurementsPerIteration = 2;

  double period() const { return 1.0 / iteration_rate; }
  /// Throws InfeasibleTiming when the two readouts do not fit in one period.
  void validate() const;
};

class InfeasibleTiming : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Independent +-amplitude entries with probability 1/2 each.
std::vector<double> perturbation(std::size_t dimension, double amplitude, std::mt19937_64& rng);

struct MetricReading {
  double metric = 0;        ///< J as measured (may include detector noise)
  double eta = 0;           ///< noise-free coupling efficiency, for logging
  std::size_t saturated = 0;
};

/// Applies a voltage vector to the mirror and reads the metric.
using MetricEvaluator = std::function<MetricReading(std::span<const double> voltages)>;

struct StepRecord {
  bool ok = false;
  std::vector<double> delta;
  MetricReading plus;
  MetricReading minus;
  double delta_j = 0;  ///< J(p + dp) - J(p - dp)
};

/// One SPGD iteration on actuator voltages.
StepRecord spgd_step(ControlState& state, const MetricEvaluator& evaluate);

/// One M-SPGD iteration: voltages (a +- da) x M are sent to the mirror.
StepRecord mspgd_step(ControlState& state, const optics::ModalMap& map, const MetricEvaluator& evaluate);

/// The update rule alone: parameters + G * delta_j * delta.
std::vector<double> apply_update(std::span<const double> parameters, double gain, double delta_j,
                                 std::span<const double> delta);

}  // namespace mspgd::control
