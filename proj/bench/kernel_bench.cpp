// Serial reference kernels against their OpenMP versions. Run with
// OMP_NUM_THREADS to vary the worker count.

#include <benchmark/benchmark.h>

#include <complex>
#include <random>
#include <vector>

#include "mspgd/grid.hpp"
#include "mspgd/kernels.hpp"

using namespace mspgd;

namespace {

RealGrid random_grid(std::size_t side, std::uint64_t seed) {
  RealGrid g(side);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : g.values()) v = n(rng);
  return g;
}

template <auto Kernel>
void structure_function(benchmark::State& state) {
  const auto g = random_grid(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(g, 64));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

template <auto Kernel>
void bilinear_window(benchmark::State& state) {
  const auto source = random_grid(2048, 2);
  RealGrid out(static_cast<std::size_t>(state.range(0)));
  double offset = 0.0;
  for (auto _ : state) {
    Kernel(source, 10.25 + offset, 3.5 + offset, out);
    offset += 0.01;
    benchmark::ClobberMemory();
  }
}

template <auto Kernel>
void matvec(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  std::vector<double> m(rows * 40, 0.5), x(40, 1.0), y(rows);
  for (auto _ : state) {
    Kernel(m, x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Kernel>
void phasor_overlap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> phase(n, 0.3);
  std::vector<std::complex<double>> mode(n, {0.5, 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(phase, mode));
}

template <auto Kernel>
void spectral_multiply(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  ComplexGrid grid(side, {1.0, 0.5});
  const auto filter = random_grid(side, 3);
  for (auto _ : state) {
    Kernel(grid, filter);
    benchmark::ClobberMemory();
  }
}

}  // namespace

BENCHMARK(structure_function<kernels::serial::structure_function>)->Arg(256)->Arg(1024);
BENCHMARK(structure_function<kernels::omp::structure_function>)->Arg(256)->Arg(1024);
BENCHMARK(bilinear_window<kernels::serial::bilinear_window>)->Arg(64)->Arg(512);
BENCHMARK(bilinear_window<kernels::omp::bilinear_window>)->Arg(64)->Arg(512);
BENCHMARK(matvec<kernels::serial::matvec>)->Arg(3208)->Arg(51000);
BENCHMARK(matvec<kernels::omp::matvec>)->Arg(3208)->Arg(51000);
BENCHMARK(phasor_overlap<kernels::serial::phasor_overlap>)->Arg(3208)->Arg(200000);
BENCHMARK(phasor_overlap<kernels::omp::phasor_overlap>)->Arg(3208)->Arg(200000);
BENCHMARK(spectral_multiply<kernels::serial::multiply>)->Arg(256)->Arg(2048);
BENCHMARK(spectral_multiply<kernels::omp::multiply>)->Arg(256)->Arg(2048);

BENCHMARK_MAIN();
