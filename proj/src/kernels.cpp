#include "mspgd/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace mspgd::kernels {
namespace {

std::size_t wrap(long long i, std::size_t n) {
  const long long m = static_cast<long long>(n);
  long long r = i % m;
  return static_cast<std::size_t>(r < 0 ? r + m : r);
}

void check_lag(const RealGrid& phase, std::size_t max_lag) {
  if (max_lag == 0 || max_lag >= phase.side()) {
    throw std::invalid_argument("structure_function: max_lag must be in [1, side)");
  }
}

// One output pixel of the periodic bilinear window.
inline double bilinear_at(const RealGrid& src, long long r_int, long long c_int, double fr, double fc,
                          std::size_t r, std::size_t c) {
  const std::size_t n = src.side();
  const std::size_t r0 = wrap(r_int + static_cast<long long>(r), n);
  const std::size_t c0 = wrap(c_int + static_cast<long long>(c), n);
  if (fr == 0.0 && fc == 0.0) return src(r0, c0);
  const std::size_t r1 = (r0 + 1) % n;
  const std::size_t c1 = (c0 + 1) % n;
  return (1.0 - fr) * ((1.0 - fc) * src(r0, c0) + fc * src(r0, c1)) +
         fr * ((1.0 - fc) * src(r1, c0) + fc * src(r1, c1));
}

void check_matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out) {
  if (matrix.size() != x.size() * out.size()) throw std::invalid_argument("matvec: shape mismatch");
}

}  // namespace

namespace serial {

StructureFunction structure_function(const RealGrid& phase, std::size_t max_lag) {
  check_lag(phase, max_lag);
  const std::size_t n = phase.side();
  StructureFunction out(max_lag + 1, 0.0);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c + lag < n; ++c) {
        const double dx = phase(r, c + lag) - phase(r, c);
        const double dy = phase(c + lag, r) - phase(c, r);
        acc += dx * dx + dy * dy;
      }
    }
    out[lag] = acc / (2.0 * static_cast<double>(n * (n - lag)));
  }
  return out;
}

void bilinear_window(const RealGrid& source, double row0, double col0, RealGrid& out) {
  const double rf = std::floor(row0);
  const double cf = std::floor(col0);
  const auto ri = static_cast<long long>(rf);
  const auto ci = static_cast<long long>(cf);
  const double fr = row0 - rf;
  const double fc = col0 - cf;
  const std::size_t m = out.side();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) out(r, c) = bilinear_at(source, ri, ci, fr, fc, r, c);
  }
}

void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out) {
  check_matvec(matrix, x, out);
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* row = matrix.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

std::complex<double> phasor_overlap(std::span<const double> phase, std::span<const std::complex<double>> mode) {
  if (phase.size() != mode.size()) throw std::invalid_argument("phasor_overlap: length mismatch");
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < phase.size(); ++k) {
    const double c = std::cos(phase[k]);
    const double s = std::sin(phase[k]);
    // (c + i s) * conj(mode)
    re += c * mode[k].real() + s * mode[k].imag();
    im += s * mode[k].real() - c * mode[k].imag();
  }
  return {re, im};
}

void multiply(ComplexGrid& grid, const RealGrid& filter) {
  if (grid.side() != filter.side()) throw std::invalid_argument("multiply: size mismatch");
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] *= filter[k];
}

}  // namespace serial

namespace omp {

StructureFunction structure_function(const RealGrid& phase, std::size_t max_lag) {
  check_lag(phase, max_lag);
  const std::size_t n = phase.side();
  StructureFunction out(max_lag + 1, 0.0);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c + lag < n; ++c) {
        const double dx = phase(r, c + lag) - phase(r, c);
        const double dy = phase(c + lag, r) - phase(c, r);
        acc += dx * dx + dy * dy;
      }
    }
    out[lag] = acc / (2.0 * static_cast<double>(n * (n - lag)));
  }
  return out;
}

void bilinear_window(const RealGrid& source, double row0, double col0, RealGrid& out) {
  const double rf = std::floor(row0);
  const double cf = std::floor(col0);
  const auto ri = static_cast<long long>(rf);
  const auto ci = static_cast<long long>(cf);
  const double fr = row0 - rf;
  const double fc = col0 - cf;
  const std::size_t m = out.side();
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) out(r, c) = bilinear_at(source, ri, ci, fr, fc, r, c);
  }
}

void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out) {
  check_matvec(matrix, x, out);
  const std::size_t cols = x.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* row = matrix.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

std::complex<double> phasor_overlap(std::span<const double> phase, std::span<const std::complex<double>> mode) {
  if (phase.size() != mode.size()) throw std::invalid_argument("phasor_overlap: length mismatch");
  double re = 0.0;
  double im = 0.0;
#pragma omp parallel for reduction(+ : re, im) schedule(static)
  for (std::size_t k = 0; k < phase.size(); ++k) {
    const double c = std::cos(phase[k]);
    const double s = std::sin(phase[k]);
    re += c * mode[k].real() + s * mode[k].imag();
    im += s * mode[k].real() - c * mode[k].imag();
  }
  return {re, im};
}

void multiply(ComplexGrid& grid, const RealGrid& filter) {
  if (grid.side() != filter.side()) throw std::invalid_argument("multiply: size mismatch");
  const std::size_t n = grid.size();
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) grid[k] *= filter[k];
}

}  // namespace omp
}  // namespace mspgd::kernels
