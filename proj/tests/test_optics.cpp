#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mspgd/errors.hpp"
#include "mspgd/optics.hpp"
#include "mspgd/simulation.hpp"

using namespace mspgd;
using namespace mspgd::optics;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_voltages(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> u(n);
  for (auto& v : u) v = g(rng);
  return u;
}

FiberModel optimized_fiber(const PupilSampling& s) {
  FiberModel f;
  f.mode_field_radius = optimize_mode_radius(s, f).radius;
  return f;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("actuator layout") {
  const auto pos = ring_layout(40);
  REQUIRE(pos.size() == 40);
  CHECK(std::hypot(pos[0][0], pos[0][1]) == doctest::Approx(0.0));
  const std::array<std::pair<std::size_t, double>, 3> rings{{{8, 0.4}, {12, 0.8}, {19, 1.2}}};
  std::size_t k = 1;
  for (auto [count, radius] : rings) {
    for (std::size_t i = 0; i < count; ++i, ++k) CHECK(std::hypot(pos[k][0], pos[k][1]) == doctest::Approx(radius));
  }
  CHECK_THROWS_AS(ring_layout(0), ConfigError);
}

TEST_CASE("mirror phase is linear in the voltages") {
  const DeformableMirror dm(MirrorParams{}, 64);
  const auto u = random_voltages(40, 1);
  const auto v = random_voltages(40, 2);
  std::vector<double> sum(40), scaled(40);
  for (std::size_t j = 0; j < 40; ++j) {
    sum[j] = u[j] + v[j];
    scaled[j] = 2.5 * u[j];
  }
  const auto pu = dm_phase(dm, u);
  const auto pv = dm_phase(dm, v);
  const auto ps = dm_phase(dm, sum);
  const auto pk = dm_phase(dm, scaled);
  for (std::size_t i = 0; i < pu.size(); ++i) {
    CHECK(ps[i] == doctest::Approx(pu[i] + pv[i]).epsilon(1e-12).scale(1.0));
    CHECK(pk[i] == doctest::Approx(2.5 * pu[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("a single actuator makes a Gaussian bump") {
  MirrorParams p;
  p.voltage_gain = 0.8;
  const DeformableMirror dm(p, 64);
  const double sigma = p.influence_sigma * dm.spacing();
  CHECK(dm.spacing() == doctest::Approx(0.4));
  CHECK(dm.influence(0, 0.0, 0.0) == doctest::Approx(0.8));
  CHECK(dm.influence(0, sigma, 0.0) == doctest::Approx(0.8 * std::exp(-0.5)));
  std::vector<double> u(40, 0.0);
  u[0] = 1.0;
  const auto phase = dm_phase(dm, u);
  double peak = 0;
  for (double v : phase.values()) peak = std::max(peak, v);
  // The nearest pixel centers sit half a pixel from the actuator.
  CHECK(peak == doctest::Approx(0.8).epsilon(0.01));
  CHECK(phase(0, 0) == 0.0);  // outside the disk
}

TEST_CASE("voltage clamp counts saturated actuators") {
  MirrorParams p;
  p.voltage_limit = 1.0;
  const DeformableMirror dm(p, 32);
  std::vector<double> u(40, 0.5);
  u[3] = 2.0;
  u[7] = -3.0;
  const auto cmd = dm.clamp(u);
  CHECK(cmd.saturated == 2);
  CHECK(cmd.voltages[3] == 1.0);
  CHECK(cmd.voltages[7] == -1.0);
  CHECK(cmd.voltages[0] == 0.5);
}

TEST_CASE("modal map reproduces low-order modes") {
  const DeformableMirror dm(MirrorParams{}, 64);
  SUBCASE("modes 2-13 within 15 percent") {
    const auto modes = zernike::noll_range(2, 13);
    const auto map = fit_modal_map(dm, zernike::ZernikeBasis(modes, 64));
    REQUIRE(map.fit_residuals.size() == 12);
    for (double r : map.fit_residuals) CHECK(r < 0.15);
    CHECK(map.poorly_reproduced.empty());
  }
  SUBCASE("piston is almost exact") {
    const std::vector<int> piston{1};
    const auto map = fit_modal_map(dm, zernike::ZernikeBasis(piston, 64));
    CHECK(map.fit_residuals[0] < 0.02);
  }
  SUBCASE("high orders are flagged") {
    const std::vector<int> high{4, 60};
    const auto map = fit_modal_map(dm, zernike::ZernikeBasis(high, 64));
    REQUIRE(map.poorly_reproduced.size() == 1);
    CHECK(map.poorly_reproduced[0] == 1);
    CHECK(map.fit_residuals[1] > 0.5);
  }
  SUBCASE("voltages are a x M") {
    const auto modes = zernike::noll_range(4, 6);
    const auto map = fit_modal_map(dm, zernike::ZernikeBasis(modes, 64));
    const std::vector<double> a{0.0, 2.0, 0.0};
    const auto u = map.voltages(a);
    for (std::size_t j = 0; j < 40; ++j) CHECK(u[j] == doctest::Approx(2.0 * map.matrix(1, j)));
    CHECK_THROWS_AS(map.voltages(std::vector<double>{1.0}), ConfigError);
  }
}

TEST_CASE("focal propagation") {
  PupilSampling s;
  s.pad_factor = 8;
  const RealGrid zero(s.pupil_pixels, 0.0);
  const double wl = 1570e-9, f = 2.0;
  const auto flat = pupil_field(zero, zero, {0.0, 0.0}, s, wl);

  SUBCASE("Parseval") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    RealGrid ph(s.pupil_pixels);
    for (auto& v : ph.values()) v = g(rng);
    const auto pupil = pupil_field(ph, zero, {1e-6, -2e-6}, s, wl);
    const auto focal = focal_field(pupil, s, f, wl);
    double pin = 0, pout = 0;
    for (const auto& v : pupil.values()) pin += std::norm(v);
    for (const auto& v : focal.field.values()) pout += std::norm(v);
    CHECK(std::abs(pout / pin - 1.0) < 1e-6);
  }
  SUBCASE("Airy first zero at 1.22 lambda f / D") {
    const auto focal = focal_field(flat, s, f, wl);
    const std::size_t c = s.padded_side() / 2;
    std::size_t k = 1;
    while (std::norm(focal.field(c, c + k + 1)) < std::norm(focal.field(c, c + k))) ++k;
    const double expected = 1.22 * wl * f / s.aperture_diameter / focal.pixel_size;
    CHECK(std::abs(static_cast<double>(k) - expected) <= 1.0);
  }
  SUBCASE("tilt moves the spot by f theta") {
    const double pixel = wl * f / (static_cast<double>(s.padded_side()) * s.pixel_pitch());
    const double theta = 3.0 * pixel / f;
    const auto centroid = [&](const ComplexGrid& g) {
      double m = 0, w = 0;
      for (std::size_t r = 0; r < g.side(); ++r)
        for (std::size_t col = 0; col < g.side(); ++col) {
          const double p = std::norm(g(r, col));
          m += p * static_cast<double>(col);
          w += p;
        }
      return m / w;
    };
    const auto a = focal_field(flat, s, f, wl);
    const auto b = focal_field(pupil_field(zero, zero, {theta, 0.0}, s, wl), s, f, wl);
    CHECK(centroid(b.field) - centroid(a.field) == doctest::Approx(3.0).epsilon(0.03));
  }
  SUBCASE("coarse padding is rejected") {
    PupilSampling coarse = s;
    coarse.pad_factor = 2;
    CHECK_THROWS_AS(focal_field(pupil_field(zero, zero, {0.0, 0.0}, coarse, wl), coarse, f, wl), ConfigError);
  }
}

TEST_CASE("overlap integral") {
  PupilSampling s;
  FiberModel fib = optimized_fiber(s);
  const auto mode = fiber_mode(s, fib);
  CHECK(coupling_efficiency(mode, mode) == doctest::Approx(1.0).epsilon(1e-12));
  const RealGrid zero(s.pupil_pixels, 0.0);
  const auto focal = focal_field(pupil_field(zero, zero, {0.0, 0.0}, s, fib.wavelength), s, fib.focal_length,
                                 fib.wavelength);
  ComplexGrid rotated = focal.field;
  for (auto& v : rotated.values()) v *= std::polar(3.0, 1.1);
  CHECK(coupling_efficiency(rotated, mode) == doctest::Approx(coupling_efficiency(focal.field, mode)).epsilon(1e-12));
  CHECK_THROWS_AS(coupling_efficiency(ComplexGrid(mode.side()), mode), NumericalError);
}

TEST_CASE("flat-wavefront ceiling matches a brute-force quadrature") {
  // Back in the pupil plane the fiber mode is a Gaussian of radius w; the
  // overlap with the uniform disk of radius 1 is integrated on a fine radial
  // grid and maximized over w.
  const auto eta_quadrature = [](double w) {
    constexpr int kSteps = 20000;
    double overlap = 0;
    for (int i = 0; i < kSteps; ++i) {
      const double r = (i + 0.5) / kSteps;
      overlap += std::exp(-r * r / (w * w)) * 2.0 * kPi * r / kSteps;
    }
    const double disk = kPi;
    const double mode = kPi * w * w / 2.0;
    return overlap * overlap / (disk * mode);
  };
  double best = 0;
  for (double w = 0.5; w < 1.5; w += 1e-4) best = std::max(best, eta_quadrature(w));
  CHECK(best == doctest::Approx(0.8145).epsilon(2e-4));

  const PupilSampling s;
  const auto opt = optimize_mode_radius(s, FiberModel{});
  CHECK(std::abs(opt.eta - 0.81) <= 0.01);
  CHECK(std::abs(opt.eta - best) <= 0.01);
  CHECK(opt.radius > opt.bracket_lo);
  CHECK(opt.radius < opt.bracket_hi);
}

TEST_CASE("optimal mode radius scales with focal length") {
  const PupilSampling s;
  FiberModel f1;
  FiberModel f2;
  f2.focal_length = 2.0 * f1.focal_length;
  const auto a = optimize_mode_radius(s, f1);
  const auto b = optimize_mode_radius(s, f2);
  CHECK(b.radius / a.radius == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(b.eta == doctest::Approx(a.eta).epsilon(1e-6));
}

TEST_CASE("pupil-plane fast path equals focal-plane propagation") {
  const PupilSampling s;
  const FiberCoupler coupler(s, optimized_fiber(s));
  const auto& geo = coupler.geometry();
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.7);
  std::vector<double> packed(geo.count());
  for (auto& v : packed) v = g(rng);
  const RealGrid zero(s.pupil_pixels, 0.0);
  const auto field = pupil_field(geo.unpack(packed), zero, {0.0, 0.0}, s, coupler.fiber().wavelength);
  CHECK(coupler.eta_from_phase(packed) == doctest::Approx(coupler.eta_from_field(field)).epsilon(1e-9));

  // A constant phase changes nothing.
  std::vector<double> shifted = packed;
  for (auto& v : shifted) v += 2.3;
  CHECK(coupler.eta_from_phase(shifted) == doctest::Approx(coupler.eta_from_phase(packed)).epsilon(1e-12));
}

TEST_CASE("perfect correction recovers the ceiling") {
  control::Scenario sc;
  sc.static_screen = true;
  sc.apt_removes_tilt = false;
  sc.jitter_rms = 0;
  sc.metric_noise = 0;
  const auto optics = control::prepare_optics(sc);
  const auto u = random_voltages(optics->mirror.actuator_count(), 4);
  std::vector<double> phase(optics->mirror.geometry().count());
  optics->mirror.packed_phase(u, phase);
  control::LinkSimulator plant(sc, optics, phase, 1);
  CHECK(std::abs(plant.true_eta(u) - optics->eta_ceiling) < 1e-6);
  const std::vector<double> flat(u.size(), 0.0);
  CHECK(plant.true_eta(flat) < optics->eta_ceiling - 0.1);
}

TEST_CASE("stronger turbulence damages coupling more") {
  double previous = 1.0;
  for (double r0 : {0.2, 0.074, 0.042}) {
    control::Scenario sc;
    sc.r0_ref = r0;
    sc.screen_pixels = 256;
    sc.jitter_rms = 0;
    sc.metric_noise = 0;
    const auto optics = control::prepare_optics(sc);
    std::vector<double> eta;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      control::LinkSimulator plant(sc, optics, seed);
      eta.push_back(plant.true_eta(std::vector<double>(optics->mirror.actuator_count(), 0.0)));
    }
    const double m = median_of(eta);
    CHECK(m < previous);
    previous = m;
  }
}
