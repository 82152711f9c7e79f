#pragma once

// Noll-indexed, Noll-normalized Zernike polynomials on the unit disk.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "mspgd/grid.hpp"

namespace mspgd::zernike {

struct RadialAzimuthal {
  int n;  ///< radial order
  int m;  ///< signed azimuthal order; m < 0 selects the sine term
  bool operator==(const RadialAzimuthal&) const = default;
};

/// Noll index (j >= 1) to (n, m). Throws std::domain_error for j < 1.
RadialAzimuthal noll_to_nm(int j);

/// Inverse of noll_to_nm.
int nm_to_noll(int n, int m);

/// Z_j(rho, theta) with unit RMS over the disk. Throws std::domain_error when
/// rho is outside [0, 1].
double evaluate(int j, double rho, double theta);

/// Zernike modes sampled on a DiskGeometry. Immutable once built.
class ZernikeBasis {
 public:
  ZernikeBasis(std::span<const int> noll_indices, std::size_t grid_size);

  std::size_t mode_count() const { return modes_.size(); }
  std::size_t grid_size() const { return geometry_.side(); }
  const DiskGeometry& geometry() const { return geometry_; }
  std::span<const int> noll_indices() const { return modes_; }

  /// In-disk samples; column k is mode noll_indices()[k].
  const Eigen::MatrixXd& packed() const { return packed_; }
  /// Full grid for mode k (zero outside the disk).
  RealGrid mode_grid(std::size_t k) const;

  /// Gram matrix of the packed samples divided by the number of disk pixels.
  Eigen::MatrixXd normalized_gram() const;

  /// Sum of coefficient-weighted modes as a full grid.
  RealGrid synthesize(std::span<const double> coefficients) const;

 private:
  std::vector<int> modes_;
  DiskGeometry geometry_;
  Eigen::MatrixXd packed_;
};

/// Modes 1..mode_count. Requires mode_count >= 1 and grid_size >= 16.
ZernikeBasis sample_basis(std::size_t mode_count, std::size_t grid_size);

/// Consecutive Noll range [first, last].
std::vector<int> noll_range(int first, int last);

struct Fit {
  Eigen::VectorXd coefficients;
  RealGrid residual;
  double residual_rms = 0.0;  ///< RMS of residual over the disk
};

/// Least-squares modal decomposition over the disk mask. Throws
/// NumericalError when the sampled basis is rank deficient.
Fit fit_coefficients(const RealGrid& phase, const ZernikeBasis& basis);

}  // namespace mspgd::zernike
