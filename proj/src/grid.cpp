#include "mspgd/grid.hpp"

#include <stdexcept>

namespace mspgd {

DiskGeometry::DiskGeometry(std::size_t side)
    : side_(side), half_(static_cast<double>(side) / 2.0), mask_(side * side, 0) {
  if (side == 0) throw std::invalid_argument("DiskGeometry: side must be positive");
  for (std::size_t r = 0; r < side_; ++r) {
    for (std::size_t c = 0; c < side_; ++c) {
      const double xv = x(c);
      const double yv = y(r);
      if (xv * xv + yv * yv <= 1.0) {
        mask_[r * side_ + c] = 1;
        indices_.push_back(r * side_ + c);
      }
    }
  }
}

std::vector<double> DiskGeometry::pack(const RealGrid& grid) const {
  if (grid.side() != side_) throw std::invalid_argument("DiskGeometry::pack: grid size mismatch");
  std::vector<double> out(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) out[k] = grid[indices_[k]];
  return out;
}

RealGrid DiskGeometry::unpack(std::span<const double> packed) const {
  if (packed.size() != indices_.size()) {
    throw std::invalid_argument("DiskGeometry::unpack: packed length mismatch");
  }
  RealGrid out(side_, 0.0);
  for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = packed[k];
  return out;
}

}  // namespace mspgd
