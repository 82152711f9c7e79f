#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mspgd {

/// Square, row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::size_t side, T fill = T{}) : side_(side), data_(side * side, fill) {}

  std::size_t side() const { return side_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t row, std::size_t col) {
    assert(row < side_ && col < side_);
    return data_[row * side_ + col];
  }
  const T& operator()(std::size_t row, std::size_t col) const {
    assert(row < side_ && col < side_);
    return data_[row * side_ + col];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t side_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<std::complex<double>>;

/// Square grid with the unit disk inscribed. Pixel (row, col) has its center at
/// x = (col + 0.5 - N/2) / (N/2), y = (row + 0.5 - N/2) / (N/2), so a 90 degree
/// rotation maps pixel centers onto pixel centers.
class DiskGeometry {
 public:
  explicit DiskGeometry(std::size_t side);

  std::size_t side() const { return side_; }
  double x(std::size_t col) const { return (static_cast<double>(col) + 0.5) / half_ - 1.0; }
  double y(std::size_t row) const { return (static_cast<double>(row) + 0.5) / half_ - 1.0; }

  /// Flat indices (row * side + col) of pixels with rho <= 1, in row-major order.
  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t count() const { return indices_.size(); }
  bool inside(std::size_t row, std::size_t col) const { return mask_[row * side_ + col] != 0; }

  /// Gathers the in-disk values of a grid into a packed vector.
  std::vector<double> pack(const RealGrid& grid) const;
  /// Scatters packed values back into a full grid (zero outside the disk).
  RealGrid unpack(std::span<const double> packed) const;

  bool operator==(const DiskGeometry& other) const { return side_ == other.side_; }

 private:
  std::size_t side_;
  double half_;
  std::vector<unsigned char> mask_;
  std::vector<std::size_t> indices_;
};

}  // namespace mspgd
