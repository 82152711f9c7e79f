#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp with the same
// signature; tests hold the two to agreement and bench/ times them.
//
// The OpenMP versions only pay off on large grids (screen synthesis, ensemble
// statistics). A single control-loop measurement touches a few thousand pixels
// and calls the serial versions; loop runs are parallelized one level up,
// across seeds.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mspgd/grid.hpp"

namespace mspgd::kernels {

/// Mean squared phase difference at integer lags 1..max_lag, averaged over
/// both axes, using only non-wrapped pixel pairs.
using StructureFunction = std::vector<double>;

namespace serial {

StructureFunction structure_function(const RealGrid& phase, std::size_t max_lag);

/// Periodic bilinear sample of `source` into `out`, whose (0, 0) pixel sits at
/// fractional source position (row0, col0). Integer positions copy exactly.
void bilinear_window(const RealGrid& source, double row0, double col0, RealGrid& out);

/// out = matrix * x with matrix row-major (rows x x.size()).
void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);

/// sum_k exp(i phase_k) * conj(mode_k): the unit-amplitude overlap numerator.
std::complex<double> phasor_overlap(std::span<const double> phase, std::span<const std::complex<double>> mode);

/// grid[k] *= filter[k] (spectral shaping of white noise).
void multiply(ComplexGrid& grid, const RealGrid& filter);

}  // namespace serial

namespace omp {

StructureFunction structure_function(const RealGrid& phase, std::size_t max_lag);
void bilinear_window(const RealGrid& source, double row0, double col0, RealGrid& out);
void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);
std::complex<double> phasor_overlap(std::span<const double> phase, std::span<const std::complex<double>> mode);
void multiply(ComplexGrid& grid, const RealGrid& filter);

}  // namespace omp

}  // namespace mspgd::kernels
