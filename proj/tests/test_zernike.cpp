#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mspgd/errors.hpp"
#include "mspgd/turbulence.hpp"
#include "mspgd/zernike.hpp"

using namespace mspgd;
using namespace mspgd::zernike;

namespace {

// Independent enumeration of the Noll ordering: walk n upward; within each n
// sort |m| ascending and hand out j, giving m >= 0 to even j.
std::vector<RadialAzimuthal> enumerate_noll(int count) {
  std::vector<RadialAzimuthal> out;
  int j = 1;
  for (int n = 0; static_cast<int>(out.size()) < count; ++n) {
    for (int am = n % 2; am <= n; am += 2) {
      const int copies = am == 0 ? 1 : 2;
      for (int c = 0; c < copies; ++c, ++j) out.push_back({n, am == 0 ? 0 : (j % 2 == 0 ? am : -am)});
    }
  }
  out.resize(count);
  return out;
}

}  // namespace

TEST_CASE("noll_to_nm matches the enumeration for the first 66 modes") {
  const auto table = enumerate_noll(66);
  for (int j = 1; j <= 66; ++j) {
    CHECK(noll_to_nm(j) == table[j - 1]);
    CHECK(nm_to_noll(table[j - 1].n, table[j - 1].m) == j);
  }
  CHECK(noll_to_nm(1) == RadialAzimuthal{0, 0});
  CHECK(noll_to_nm(4) == RadialAzimuthal{2, 0});
  CHECK(noll_to_nm(11) == RadialAzimuthal{4, 0});
  CHECK_THROWS_AS(noll_to_nm(0), std::domain_error);
  CHECK_THROWS_AS(noll_to_nm(-3), std::domain_error);
}

TEST_CASE("evaluate reproduces closed forms") {
  CHECK(evaluate(1, 0.3, 1.1) == doctest::Approx(1.0));
  CHECK(evaluate(4, 0.0, 0.0) == doctest::Approx(-std::sqrt(3.0)));
  CHECK(evaluate(2, 1.0, 0.0) == doctest::Approx(2.0));
  CHECK(evaluate(3, 1.0, std::numbers::pi / 2) == doctest::Approx(2.0));
  // spherical: sqrt(5)(6 rho^4 - 6 rho^2 + 1)
  CHECK(evaluate(11, 0.5, 0.7) == doctest::Approx(std::sqrt(5.0) * (6 * 0.0625 - 6 * 0.25 + 1)));
  CHECK_THROWS_AS(evaluate(4, 1.01, 0.0), std::domain_error);
  CHECK_THROWS_AS(evaluate(4, -0.1, 0.0), std::domain_error);
}

TEST_CASE("sampled modes are zero outside the disk and piston is constant") {
  const auto basis = sample_basis(6, 32);
  for (std::size_t k = 0; k < basis.mode_count(); ++k) {
    const auto g = basis.mode_grid(k);
    for (std::size_t r = 0; r < 32; ++r) {
      for (std::size_t c = 0; c < 32; ++c) {
        if (!basis.geometry().inside(r, c)) CHECK(g(r, c) == 0.0);
      }
    }
  }
  for (Eigen::Index i = 0; i < basis.packed().rows(); ++i) CHECK(basis.packed()(i, 0) == 1.0);
  CHECK_THROWS(sample_basis(3, 8));
}

TEST_CASE("Gram matrix of modes 1-12 on 256 pixels is near identity") {
  const auto gram = sample_basis(12, 256).normalized_gram();
  const double worst = (gram - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff();
  CHECK(worst < 1e-2);
}

TEST_CASE("tip and tilt are 90 degree rotations of each other; astigmatism pair under 45 degrees") {
  const std::size_t n = 128;
  const auto basis = sample_basis(6, n);
  const auto z2 = basis.mode_grid(1), z3 = basis.mode_grid(2);
  // Rotating a grid by +90 degrees about the center: (x, y) -> (-y, x).
  double worst = 0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      worst = std::max(worst, std::abs(z3(r, c) - z2(n - 1 - c, r)));
    }
  }
  CHECK(worst < 1e-12);
  // 45 degrees takes cos 2theta to sin 2theta
  for (double rho : {0.2, 0.5, 0.9}) {
    for (double th : {0.1, 1.0, 2.5}) {
      CHECK(evaluate(6, rho, th - std::numbers::pi / 4) == doctest::Approx(evaluate(5, rho, th)));
      CHECK(evaluate(2, rho, th - std::numbers::pi / 2) == doctest::Approx(evaluate(3, rho, th)));
    }
  }
}

TEST_CASE("fit recovers a single scaled mode and zero") {
  const auto basis = sample_basis(12, 64);
  std::vector<double> a(12, 0.0);
  a[3] = 3.0;
  const auto fit = fit_coefficients(basis.synthesize(a), basis);
  CHECK(fit.coefficients[3] == doctest::Approx(3.0).epsilon(1e-9));
  for (int k = 0; k < 12; ++k) {
    if (k != 3) CHECK(std::abs(fit.coefficients[k]) < 1e-6);
  }
  const auto zero = fit_coefficients(RealGrid(64, 0.0), basis);
  CHECK(zero.coefficients.norm() == 0.0);
  CHECK(zero.residual_rms == 0.0);
}

TEST_CASE("fit round trip on random coefficients is within 1e-5 relative") {
  const auto basis = sample_basis(12, 256);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> a(12);
    for (auto& v : a) v = u(rng);
    const auto fit = fit_coefficients(basis.synthesize(a), basis);
    const Eigen::Map<const Eigen::VectorXd> truth(a.data(), 12);
    CHECK((fit.coefficients - truth).norm() / truth.norm() < 1e-5);
  }
}

TEST_CASE("residual of a turbulent screen falls as the basis grows") {
  turbulence::ScreenSpec spec;
  spec.grid_size = 64;
  spec.pixel_pitch = 0.4 / 64;
  spec.r0 = 0.1;
  spec.seed = 3;
  const auto screen = turbulence::generate_screen(spec);
  double previous = 1e300;
  for (int count : {3, 6, 10, 12}) {
    const auto fit = fit_coefficients(screen.phase, sample_basis(count, 64));
    CHECK(fit.residual_rms < previous);
    previous = fit.residual_rms;
  }
}

TEST_CASE("rank-deficient basis is reported") {
  const std::vector<int> duplicated{2, 2};
  CHECK_THROWS_AS(fit_coefficients(RealGrid(32, 1.0), ZernikeBasis(duplicated, 32)), NumericalError);
}
