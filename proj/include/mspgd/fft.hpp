#pragma once

#include <memory>

#include "mspgd/grid.hpp"

namespace mspgd {

/// In-place 2-D complex DFT of a fixed side length (FFTW backed). Unnormalized
/// in both directions: backward(forward(x)) == N*N * x. Plan creation is
/// serialized internally; execution on distinct grids is thread-safe.
class Fft2d {
 public:
  explicit Fft2d(std::size_t side);
  ~Fft2d();
  Fft2d(Fft2d&&) noexcept;
  Fft2d& operator=(Fft2d&&) noexcept;
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t side() const { return side_; }
  void forward(ComplexGrid& grid) const;
  void backward(ComplexGrid& grid) const;

 private:
  struct Plans;
  std::size_t side_;
  std::unique_ptr<Plans> plans_;
};

/// Circular shift by half the side length in both axes (fftshift for even sides;
/// self-inverse).
template <typename T>
void shift_half(Grid<T>& grid) {
  const std::size_t n = grid.side();
  const std::size_t h = n / 2;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      std::swap(grid(r, c), grid(r + h, (c + h) % n));
    }
  }
}

}  // namespace mspgd
