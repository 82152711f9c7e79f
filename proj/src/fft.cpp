#include "mspgd/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace mspgd {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft2d::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Fft2d::Fft2d(std::size_t side) : side_(side), plans_(std::make_unique<Plans>()) {
  if (side == 0) throw std::invalid_argument("Fft2d: side must be positive");
  const int n = static_cast<int>(side);
  // Plans are created on a scratch buffer and executed with fftw_execute_dft
  // (new-array execute), which FFTW allows when alignment matches. FFTW_UNALIGNED
  // drops the alignment requirement for std::vector storage.
  ComplexGrid scratch(side);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->forward || !plans_->backward) throw std::runtime_error("Fft2d: FFTW planning failed");
}

Fft2d::~Fft2d() = default;
Fft2d::Fft2d(Fft2d&&) noexcept = default;
Fft2d& Fft2d::operator=(Fft2d&&) noexcept = default;

void Fft2d::forward(ComplexGrid& grid) const {
  if (grid.side() != side_) throw std::invalid_argument("Fft2d::forward: size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plans_->forward, buf, buf);
}

void Fft2d::backward(ComplexGrid& grid) const {
  if (grid.side() != side_) throw std::invalid_argument("Fft2d::backward: size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plans_->backward, buf, buf);
}

}  // namespace mspgd
