#include "mspgd/zernike.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mspgd/errors.hpp"

namespace mspgd::zernike {
namespace {

double factorial(int k) { return std::tgamma(static_cast<double>(k) + 1.0); }

double radial(int n, int m_abs, double rho) {
  double sum = 0.0;
  for (int s = 0; s <= (n - m_abs) / 2; ++s) {
    const double c = ((s % 2) ? -1.0 : 1.0) * factorial(n - s) /
                     (factorial(s) * factorial((n + m_abs) / 2 - s) * factorial((n - m_abs) / 2 - s));
    sum += c * std::pow(rho, n - 2 * s);
  }
  return sum;
}

}  // namespace

RadialAzimuthal noll_to_nm(int j) {
  if (j < 1) throw std::domain_error("noll_to_nm: Noll index must be >= 1, got " + std::to_string(j));
  int n = 0;
  while ((n + 1) * (n + 2) / 2 < j) ++n;
  const int p = j - n * (n + 1) / 2;  // 1-based position within radial order n
  const int m_abs = (n % 2 == 0) ? 2 * (p / 2) : 2 * ((p - 1) / 2) + 1;
  if (m_abs == 0) return {n, 0};
  return {n, (j % 2 == 0) ? m_abs : -m_abs};
}

int nm_to_noll(int n, int m) {
  if (n < 0 || std::abs(m) > n || (n - std::abs(m)) % 2 != 0) {
    throw std::domain_error("nm_to_noll: invalid (n, m) pair");
  }
  const int first = n * (n + 1) / 2 + 1;
  for (int j = first; j < first + n + 1; ++j) {
    if (noll_to_nm(j) == RadialAzimuthal{n, m}) return j;
  }
  throw std::logic_error("nm_to_noll: unreachable");
}

double evaluate(int j, double rho, double theta) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::domain_error("zernike::evaluate: rho outside the unit disk");
  }
  const auto [n, m] = noll_to_nm(j);
  const int m_abs = std::abs(m);
  const double r = radial(n, m_abs, rho);
  if (m == 0) return std::sqrt(n + 1.0) * r;
  const double norm = std::sqrt(2.0 * (n + 1.0));
  return norm * r * (m > 0 ? std::cos(m_abs * theta) : std::sin(m_abs * theta));
}

ZernikeBasis::ZernikeBasis(std::span<const int> noll_indices, std::size_t grid_size)
    : modes_(noll_indices.begin(), noll_indices.end()), geometry_(grid_size) {
  if (modes_.empty()) throw std::invalid_argument("ZernikeBasis: at least one mode required");
  if (grid_size < 16) throw std::invalid_argument("ZernikeBasis: grid_size must be >= 16");
  const auto idx = geometry_.indices();
  packed_.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(modes_.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double xv = geometry_.x(idx[k] % grid_size);
    const double yv = geometry_.y(idx[k] / grid_size);
    const double rho = std::min(1.0, std::hypot(xv, yv));
    const double theta = std::atan2(yv, xv);
    for (std::size_t c = 0; c < modes_.size(); ++c) {
      packed_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = evaluate(modes_[c], rho, theta);
    }
  }
}

RealGrid ZernikeBasis::mode_grid(std::size_t k) const {
  const auto col = packed_.col(static_cast<Eigen::Index>(k));
  return geometry_.unpack(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
}

Eigen::MatrixXd ZernikeBasis::normalized_gram() const {
  return (packed_.transpose() * packed_) / static_cast<double>(geometry_.count());
}

RealGrid ZernikeBasis::synthesize(std::span<const double> coefficients) const {
  if (coefficients.size() != modes_.size()) {
    throw std::invalid_argument("ZernikeBasis::synthesize: coefficient count mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> a(coefficients.data(), static_cast<Eigen::Index>(coefficients.size()));
  const Eigen::VectorXd packed = packed_ * a;
  return geometry_.unpack(std::span<const double>(packed.data(), static_cast<std::size_t>(packed.size())));
}

std::vector<int> noll_range(int first, int last) {
  if (first < 1 || last < first) throw std::invalid_argument("noll_range: empty or invalid range");
  std::vector<int> out;
  for (int j = first; j <= last; ++j) out.push_back(j);
  return out;
}

ZernikeBasis sample_basis(std::size_t mode_count, std::size_t grid_size) {
  if (mode_count < 1) throw std::invalid_argument("sample_basis: mode_count must be >= 1");
  const auto modes = noll_range(1, static_cast<int>(mode_count));
  return ZernikeBasis(modes, grid_size);
}

Fit fit_coefficients(const RealGrid& phase, const ZernikeBasis& basis) {
  if (phase.side() != basis.grid_size()) {
    throw std::invalid_argument("fit_coefficients: phase and basis grid sizes differ");
  }
  const auto& A = basis.packed();
  const std::vector<double> packed_phase = basis.geometry().pack(phase);
  const Eigen::Map<const Eigen::VectorXd> b(packed_phase.data(), static_cast<Eigen::Index>(packed_phase.size()));

  const Eigen::MatrixXd gram = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > hi * 1e-12)) {
    throw NumericalError("fit_coefficients: rank-deficient basis (Gram eigenvalues " + std::to_string(lo) +
                         " .. " + std::to_string(hi) + ")");
  }

  Fit fit;
  fit.coefficients = gram.ldlt().solve(A.transpose() * b);
  const Eigen::VectorXd res = b - A * fit.coefficients;
  fit.residual_rms = std::sqrt(res.squaredNorm() / static_cast<double>(res.size()));
  fit.residual = basis.geometry().unpack(std::span<const double>(res.data(), static_cast<std::size_t>(res.size())));
  return fit;
}

}  // namespace mspgd::zernike
