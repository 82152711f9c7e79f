#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mspgd/control.hpp"
#include "mspgd/errors.hpp"
#include "mspgd/experiments.hpp"
#include "mspgd/rng.hpp"
#include "mspgd/simulation.hpp"

using namespace mspgd;
using namespace mspgd::control;

namespace {

// Concave quadratic with its peak at `target`.
MetricEvaluator quadratic(std::vector<double> target, double offset = 1.0) {
  return [target = std::move(target), offset](std::span<const double> x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - target[i]) * (x[i] - target[i]);
    return MetricReading{offset - s, offset - s, 0};
  };
}

Scenario quiet_static_scenario() {
  Scenario sc;
  sc.static_screen = true;
  sc.jitter_rms = 0;
  sc.metric_noise = 0;
  sc.duration = 1.0;
  return sc;
}

// E[dJ * d_i] / (2 amplitude^2) for each coordinate.
std::vector<double> estimated_gradient(const MetricEvaluator& metric, std::span<const double> x, double amplitude,
                                       std::size_t samples) {
  std::mt19937_64 rng(11);
  std::vector<double> acc(x.size(), 0.0);
  std::vector<double> plus(x.size()), minus(x.size());
  for (std::size_t s = 0; s < samples; ++s) {
    const auto d = perturbation(x.size(), amplitude, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      plus[i] = x[i] + d[i];
      minus[i] = x[i] - d[i];
    }
    const double dj = metric(plus).metric - metric(minus).metric;
    for (std::size_t i = 0; i < x.size(); ++i) acc[i] += dj * d[i];
  }
  for (auto& a : acc) a /= static_cast<double>(samples) * 2.0 * amplitude * amplitude;
  return acc;
}

}  // namespace

TEST_CASE("perturbations are +-amplitude with zero mean") {
  std::mt19937_64 rng(1);
  constexpr std::size_t kN = 100000;
  const auto d = perturbation(kN, 0.3, rng);
  double sum = 0;
  for (double v : d) {
    CHECK((v == 0.3 || v == -0.3));
    sum += v;
  }
  CHECK(std::abs(sum / kN) < 4.0 * 0.3 / std::sqrt(static_cast<double>(kN)));

  std::mt19937_64 a(7), b(7);
  CHECK(perturbation(50, 1.0, a) == perturbation(50, 1.0, b));
}

TEST_CASE("update rule") {
  const std::vector<double> p{1.0, -2.0};
  const std::vector<double> d{0.1, -0.1};
  const auto moved = apply_update(p, 2.0, 0.5, d);
  CHECK(moved[0] == doctest::Approx(1.1));
  CHECK(moved[1] == doctest::Approx(-2.1));
  CHECK(apply_update(p, 2.0, 0.0, d) == p);
  CHECK(apply_update(p, 0.0, 0.5, d) == p);

  auto state = make_state(OptimizerMode::kSpgd, 3, 0.0, 0.1, 5);
  for (int i = 0; i < 20; ++i) spgd_step(state, quadratic({1, 1, 1}));
  CHECK(state.parameters == std::vector<double>(3, 0.0));
}

TEST_CASE("SPGD converges on a quadratic") {
  const std::vector<double> target{0.5, -0.3, 0.8, 0.0, -1.0};
  auto state = make_state(OptimizerMode::kSpgd, target.size(), 2.0, 0.05, 3);
  const auto metric = quadratic(target);
  for (int i = 0; i < 3000; ++i) spgd_step(state, metric);
  for (std::size_t i = 0; i < target.size(); ++i) CHECK(state.parameters[i] == doctest::Approx(target[i]).epsilon(0.02).scale(1.0));
  CHECK(state.iteration == 3000);
}

TEST_CASE("two-sided estimator is unbiased") {
  constexpr std::size_t kSamples = 100000;
  constexpr double kAmp = 0.02;
  SUBCASE("quadratic") {
    const std::vector<double> target{0.4, -0.6, 0.5, -0.3};
    const std::vector<double> x(4, 0.0);
    const auto g = estimated_gradient(quadratic(target), x, kAmp, kSamples);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double exact = 2.0 * target[i];
      CHECK(std::abs(g[i] - exact) <= 0.1 * std::abs(exact));
    }
  }
  SUBCASE("Gaussian bump") {
    const std::vector<double> center{0.5, -0.4, 0.3, 0.6};
    constexpr double kWidth = 1.0;
    const MetricEvaluator bump = [&](std::span<const double> x) {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
      const double j = std::exp(-s / (2 * kWidth * kWidth));
      return MetricReading{j, j, 0};
    };
    const std::vector<double> x(4, 0.0);
    const double j0 = bump(x).metric;
    const auto g = estimated_gradient(bump, x, kAmp, kSamples);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double exact = j0 * center[i] / (kWidth * kWidth);
      CHECK(std::abs(g[i] - exact) <= 0.1 * std::abs(exact));
    }
  }
}

TEST_CASE("M-SPGD through the identity map is SPGD") {
  const std::vector<double> target{0.2, 0.1, -0.4, 0.3, 0.0, 0.7};
  const auto metric = quadratic(target);
  auto a = make_state(OptimizerMode::kSpgd, 6, 1.5, 0.05, 9);
  auto b = make_state(OptimizerMode::kModalSpgd, 6, 1.5, 0.05, 9);
  const auto identity = optics::ModalMap::identity(6);
  for (int i = 0; i < 200; ++i) {
    spgd_step(a, metric);
    mspgd_step(b, identity, metric);
  }
  CHECK(a.parameters == b.parameters);

  auto wrong = make_state(OptimizerMode::kModalSpgd, 5, 1.0, 0.1, 1);
  CHECK_THROWS_AS(mspgd_step(wrong, identity, metric), ConfigError);
}

TEST_CASE("a non-finite reading leaves the state untouched") {
  auto state = make_state(OptimizerMode::kSpgd, 4, 1.0, 0.1, 2);
  state.parameters = {0.1, 0.2, 0.3, 0.4};
  const auto before = state.parameters;
  const auto rng_before = state.rng;
  const MetricEvaluator broken = [](std::span<const double>) {
    return MetricReading{std::numeric_limits<double>::quiet_NaN(), 0.0, 0};
  };
  const auto rec = spgd_step(state, broken);
  CHECK_FALSE(rec.ok);
  CHECK(state.parameters == before);
  CHECK(state.rng == rng_before);
  CHECK(state.faults == 1);
  CHECK(state.iteration == 0);
}

TEST_CASE("loop timing") {
  LoopTiming t;
  CHECK_NOTHROW(t.validate());
  t.iteration_rate = 2000.0;  // 500 us period, two 900 us readouts
  CHECK_THROWS_AS(t.validate(), InfeasibleTiming);
  Scenario sc = quiet_static_scenario();
  sc.timing.iteration_rate = 2000.0;
  CHECK_THROWS_AS(sc.validate(), InfeasibleTiming);
}

TEST_CASE("closed loop on the link simulator") {
  Scenario sc = quiet_static_scenario();
  sc.gain = 20;
  sc.amplitude = 0.05;
  sc.modes = zernike::noll_range(2, 13);
  const auto optics = prepare_optics(sc);
  const zernike::ZernikeBasis aberration_modes(zernike::noll_range(4, 9), sc.sampling.pupil_pixels);
  const auto phase = experiments::static_aberration(aberration_modes, 1.0, 3);

  SUBCASE("two measurements per iteration and a replayable log") {
    LinkSimulator plant(sc, optics, phase, 3);
    const auto t = run_closed_loop(sc, plant, 3);
    REQUIRE(t.rows.size() == 500);
    CHECK(t.measurements == 1000);
    CHECK(t.metric_series().size() == 1000);

    auto rng = make_rng(3, Stream::kPerturbation);
    std::vector<double> p(sc.dimension(), 0.0);
    for (const auto& row : t.rows) {
      const auto d = perturbation(p.size(), sc.amplitude, rng);
      p = apply_update(p, sc.gain, row.delta_j, d);
      CHECK(p == row.parameters);
    }
  }
  SUBCASE("a static aberration is corrected to near the mirror ceiling") {
    sc.duration = 3.0;
    LinkSimulator plant(sc, optics, phase, 5);
    const auto eta = run_closed_loop(sc, plant, 5).eta_series();
    const double ceiling = experiments::mirror_ceiling(*optics, phase);
    double tail = 0;
    for (std::size_t i = eta.size() - 100; i < eta.size(); ++i) tail += eta[i] / 100;
    CHECK(tail > 0.9 * ceiling);
    CHECK(eta.front() < 0.6 * ceiling);
  }
  SUBCASE("zero duration gives an empty run") {
    sc.duration = 0;
    CHECK(run_closed_loop(sc, optics, 1).rows.empty());
    CHECK(run_open_loop(sc, optics, 1).rows.empty());
  }
}

TEST_CASE("open loop in vacuum sits at the flat-wavefront ceiling") {
  Scenario sc;
  sc.r0_ref = 1e6;
  sc.screen_pixels = 256;
  sc.jitter_rms = 0;
  sc.metric_noise = 0;
  sc.duration = 0.1;
  const auto optics = prepare_optics(sc);
  const auto t = run_open_loop(sc, optics, 1);
  REQUIRE(!t.rows.empty());
  for (double e : t.eta_series()) CHECK(std::abs(e - optics->eta_ceiling) < 1e-6);
}

TEST_CASE("autotune with a single cell returns that cell") {
  Scenario sc;
  sc.screen_pixels = 512;
  sc.wind = {1.0, 0.0};
  const auto optics = prepare_optics(sc);
  const std::vector<double> amps{0.08};
  const std::vector<double> gains{5.0};
  const std::vector<std::uint64_t> seeds{1};
  const auto r = autotune(sc, optics, amps, gains, 2.0, seeds);
  CHECK(r.table.size() == 1);
  CHECK(r.amplitude == 0.08);
  CHECK(r.gain == 5.0);
  CHECK(r.open_loop_mean_metric > 0);
  CHECK_THROWS_AS(autotune(sc, optics, amps, gains, 1.0, seeds), ConfigError);
  CHECK_THROWS_AS(autotune(sc, optics, std::vector<double>{}, gains, 2.0, seeds), ConfigError);
}
