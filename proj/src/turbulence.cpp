#include "mspgd/turbulence.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mspgd/errors.hpp"
#include "mspgd/fft.hpp"
#include "mspgd/kernels.hpp"
#include "mspgd/rng.hpp"

namespace mspgd::turbulence {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Von Karman phase PSD in rad^2 per (cycles/m)^2.
double phase_psd(double f2, double r0, double outer_scale) {
  const double l0_term = std::isinf(outer_scale) ? 0.0 : 1.0 / (outer_scale * outer_scale);
  const double denom = f2 + l0_term;
  if (denom <= 0.0) return 0.0;
  return 0.023 * std::pow(r0, -5.0 / 3.0) * std::pow(denom, -11.0 / 6.0);
}

// Mean PSD over a square frequency cell. Near the origin the spectrum is so
// steep that the center value badly undercounts the cell's power.
double cell_averaged_psd(double fx, double fy, double width, double r0, double outer_scale) {
  constexpr int kSub = 16;
  double acc = 0.0;
  for (int i = 0; i < kSub; ++i) {
    const double uy = fy + ((i + 0.5) / kSub - 0.5) * width;
    for (int k = 0; k < kSub; ++k) {
      const double ux = fx + ((k + 0.5) / kSub - 0.5) * width;
      acc += phase_psd(ux * ux + uy * uy, r0, outer_scale);
    }
  }
  return acc / (kSub * kSub);
}

void add_subharmonics(RealGrid& phase, const ScreenSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.grid_size;
  const double screen_size = spec.pixel_pitch * static_cast<double>(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealGrid low(n, 0.0);
  std::vector<std::complex<double>> ex(n);
  std::vector<std::complex<double>> ey(n);
  for (int level = 1; level <= spec.subharmonic_levels; ++level) {
    const double df = 1.0 / (std::pow(3.0, level) * screen_size);
    for (int iy = -1; iy <= 1; ++iy) {
      for (int ix = -1; ix <= 1; ++ix) {
        if (ix == 0 && iy == 0) continue;
        const double fx = ix * df;
        const double fy = iy * df;
        const double amp = std::sqrt(cell_averaged_psd(fx, fy, df, spec.r0, spec.outer_scale)) * df;
        const double g1 = gauss(rng);
        const double g2 = gauss(rng);
        const std::complex<double> coeff(g1 * amp, g2 * amp);
        for (std::size_t k = 0; k < n; ++k) {
          const double pos = (static_cast<double>(k) - static_cast<double>(n) / 2.0) * spec.pixel_pitch;
          ex[k] = std::polar(1.0, kTwoPi * fx * pos);
          ey[k] = std::polar(1.0, kTwoPi * fy * pos);
        }
#pragma omp parallel for schedule(static)
        for (std::size_t r = 0; r < n; ++r) {
          const std::complex<double> row_coeff = coeff * ey[r];
          for (std::size_t c = 0; c < n; ++c) low(r, c) += (row_coeff * ex[c]).real();
        }
      }
    }
  }
  for (std::size_t k = 0; k < phase.size(); ++k) phase[k] += low[k];
}

void remove_mean(RealGrid& g) {
  double mean = 0.0;
  for (double v : g.values()) mean += v;
  mean /= static_cast<double>(g.size());
  for (double& v : g.values()) v -= mean;
}

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

}  // namespace

PhaseScreen generate_screen(const ScreenSpec& spec) {
  if (spec.grid_size < 2 || spec.grid_size % 2 != 0) {
    throw ConfigError("generate_screen: grid size must be even and >= 2");
  }
  if (!(spec.r0 > 0.0) || !(spec.pixel_pitch > 0.0) || !(spec.wavelength > 0.0)) {
    throw ConfigError("generate_screen: r0, pixel pitch and wavelength must be positive");
  }
  if (!(spec.outer_scale > 0.0)) throw ConfigError("generate_screen: outer scale must be positive");
  const double size = spec.pixel_pitch * static_cast<double>(spec.grid_size);
  if (spec.aperture_diameter > 0.0 && size < 4.0 * spec.aperture_diameter) {
    throw ConfigError("generate_screen: screen (" + std::to_string(size) + " m) smaller than 4 apertures (" +
                      std::to_string(4.0 * spec.aperture_diameter) + " m)");
  }

  const std::size_t n = spec.grid_size;
  const double df = 1.0 / size;
  auto rng = make_rng(spec.seed, Stream::kScreen);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RealGrid filter(n);
  ComplexGrid spectrum(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double fy = (r < n / 2 ? static_cast<double>(r) : static_cast<double>(r) - static_cast<double>(n)) * df;
    for (std::size_t c = 0; c < n; ++c) {
      const double fx = (c < n / 2 ? static_cast<double>(c) : static_cast<double>(c) - static_cast<double>(n)) * df;
      filter(r, c) = (r == 0 && c == 0) ? 0.0 : std::sqrt(phase_psd(fx * fx + fy * fy, spec.r0, spec.outer_scale)) * df;
      const double g1 = gauss(rng);
      const double g2 = gauss(rng);
      spectrum(r, c) = {g1, g2};
    }
  }
  kernels::omp::multiply(spectrum, filter);
  Fft2d fft(n);
  fft.backward(spectrum);

  PhaseScreen screen;
  screen.phase = RealGrid(n);
  for (std::size_t k = 0; k < screen.phase.size(); ++k) screen.phase[k] = spectrum[k].real();
  if (spec.subharmonic_levels > 0) add_subharmonics(screen.phase, spec, rng);
  remove_mean(screen.phase);

  screen.pixel_pitch = spec.pixel_pitch;
  screen.r0 = spec.r0;
  screen.wavelength_ref = spec.wavelength;
  screen.outer_scale = spec.outer_scale;
  screen.seed = spec.seed;
  return screen;
}

double kolmogorov_structure_function(double separation, double r0) {
  return 6.88 * std::pow(separation / r0, 5.0 / 3.0);
}

double scale_r0(double r0_ref, double wavelength_ref, double wavelength_target) {
  if (!(wavelength_ref > 0.0) || !(wavelength_target > 0.0)) {
    throw std::domain_error("scale_r0: wavelengths must be positive");
  }
  return r0_ref * std::pow(wavelength_target / wavelength_ref, 6.0 / 5.0);
}

PhaseScreen translate(const PhaseScreen& screen, double shift_rows, double shift_cols) {
  PhaseScreen out = screen;
  // out(r, c) = in(r - shift_rows, c - shift_cols)
  kernels::serial::bilinear_window(screen.phase, snap(-shift_rows), snap(-shift_cols), out.phase);
  return out;
}

double Wind::speed() const { return std::hypot(vx, vy); }

FrozenFlow::FrozenFlow(std::shared_ptr<const PhaseScreen> screen, std::size_t window_side, const Wind& heading)
    : screen_(std::move(screen)), window_side_(window_side) {
  if (!screen_) throw std::invalid_argument("FrozenFlow: null screen");
  if (window_side_ == 0 || window_side_ > screen_->phase.side()) {
    throw ConfigError("FrozenFlow: aperture window larger than the phase screen");
  }
  // The window reads upstream, so positive wind walks it toward index 0.
  const auto room = static_cast<double>(screen_->phase.side() - window_side_);
  row_ = heading.vy > 0.0 ? room : 0.0;
  col_ = heading.vx > 0.0 ? room : 0.0;
}

void FrozenFlow::evolve(const Wind& wind, double dt) {
  const double pitch = screen_->pixel_pitch;
  const double dr = wind.vy * dt / pitch;
  const double dc = wind.vx * dt / pitch;
  // phi(x, t) = phi0(x - v t): the window reads the screen upstream.
  row_ = snap(row_ - dr);
  col_ = snap(col_ - dc);
  travelled_rows_ += std::abs(dr);
  travelled_cols_ += std::abs(dc);
  const auto room = static_cast<double>(screen_->phase.side() - window_side_);
  if (travelled_rows_ > room || travelled_cols_ > room) wrapped_ = true;
}

void FrozenFlow::window(RealGrid& out) const {
  if (out.side() != window_side_) out = RealGrid(window_side_);
  kernels::serial::bilinear_window(screen_->phase, row_, col_, out);
}

RealGrid FrozenFlow::window() const {
  RealGrid out(window_side_);
  window(out);
  return out;
}

std::array<double, 2> average_tilt_angle(const RealGrid& window, double pixel_pitch, double wavelength) {
  const std::size_t n = window.side();
  const double half = static_cast<double>(n) / 2.0;
  auto inside = [&](std::size_t r, std::size_t c) {
    const double x = (static_cast<double>(c) + 0.5) / half - 1.0;
    const double y = (static_cast<double>(r) + 0.5) / half - 1.0;
    return x * x + y * y <= 1.0;
  };
  double gx = 0.0;
  double gy = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (!inside(r, c)) continue;
      if (c + 1 < n && inside(r, c + 1)) {
        gx += window(r, c + 1) - window(r, c);
        ++nx;
      }
      if (r + 1 < n && inside(r + 1, c)) {
        gy += window(r + 1, c) - window(r, c);
        ++ny;
      }
    }
  }
  const double scale = wavelength / (kTwoPi * pixel_pitch);
  return {nx ? scale * gx / static_cast<double>(nx) : 0.0, ny ? scale * gy / static_cast<double>(ny) : 0.0};
}

std::vector<std::array<double, 2>> angle_of_arrival_series(const AngleOfArrivalSetup& setup, std::size_t n_samples,
                                                           double sample_rate) {
  if (!(sample_rate > 0.0)) throw ConfigError("angle_of_arrival_series: sample rate must be positive");
  if (setup.aperture_pixels < 4) throw ConfigError("angle_of_arrival_series: aperture needs >= 4 pixels");
  ScreenSpec spec;
  spec.r0 = setup.r0;
  spec.outer_scale = setup.outer_scale;
  spec.grid_size = setup.screen_pixels;
  spec.pixel_pitch = setup.aperture_diameter / static_cast<double>(setup.aperture_pixels);
  spec.wavelength = setup.wavelength;
  spec.seed = setup.seed;
  spec.aperture_diameter = setup.aperture_diameter;
  // A long series is stitched from independent screens, each crossed once
  // without touching its periodic seam. A single screen would either repeat
  // itself or, over a path only a few screens long, lose the large-scale tilt
  // that the sample mean absorbs.
  std::uint64_t segment = 0;
  auto next_flow = [&] {
    spec.seed = setup.seed ^ (segment++ * 0x9E3779B97F4A7C15ull);
    return FrozenFlow(std::make_shared<const PhaseScreen>(generate_screen(spec)), setup.aperture_pixels, setup.wind);
  };
  FrozenFlow flow = next_flow();
  RealGrid win(setup.aperture_pixels);
  std::vector<std::array<double, 2>> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    flow.window(win);
    out.push_back(average_tilt_angle(win, spec.pixel_pitch, setup.wavelength));
    if (i + 1 == n_samples) break;
    FrozenFlow next = flow;
    next.evolve(setup.wind, 1.0 / sample_rate);
    flow = next.wrapped() ? next_flow() : std::move(next);
  }
  return out;
}

std::vector<std::array<double, 2>> centroids_to_angles(const std::vector<std::array<double, 2>>& centroids,
                                                       double focal_length) {
  if (!(focal_length > 0.0)) throw std::domain_error("centroids_to_angles: focal length must be positive");
  std::vector<std::array<double, 2>> out;
  out.reserve(centroids.size());
  for (const auto& c : centroids) out.push_back({c[0] / focal_length, c[1] / focal_length});
  return out;
}

double angle_of_arrival_stdev(const std::vector<std::array<double, 2>>& angles) {
  if (angles.size() < 2) throw NumericalError("angle_of_arrival_stdev: need at least two samples");
  double var_sum = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    double mean = 0.0;
    for (const auto& a : angles) mean += a[axis];
    mean /= static_cast<double>(angles.size());
    double ss = 0.0;
    for (const auto& a : angles) ss += (a[axis] - mean) * (a[axis] - mean);
    var_sum += ss / static_cast<double>(angles.size() - 1);
  }
  return std::sqrt(var_sum / 2.0);
}

FriedEstimate estimate_r0(double delta_alpha, double aperture_diameter, double wavenumber) {
  if (!(aperture_diameter > 0.0) || !(wavenumber > 0.0) || delta_alpha < 0.0 || std::isnan(delta_alpha)) {
    throw std::domain_error("estimate_r0: inputs must be positive");
  }
  if (delta_alpha == 0.0) throw NoTurbulenceError();
  const double r0 = 3.18 * std::pow(wavenumber, -6.0 / 5.0) * std::pow(aperture_diameter, -1.0 / 5.0) *
                    std::pow(delta_alpha, -6.0 / 5.0);
  return {r0, aperture_diameter / r0};
}

double delta_alpha_for_r0(double r0, double aperture_diameter, double wavenumber) {
  // delta_alpha^(6/5) = 3.18 k^(-6/5) D^(-1/5) / r0
  return std::pow(3.18 * std::pow(wavenumber, -6.0 / 5.0) * std::pow(aperture_diameter, -1.0 / 5.0) / r0, 5.0 / 6.0);
}

void write_screen(const PhaseScreen& screen, const std::string& path) {
  {
    std::ofstream bin(path, std::ios::binary | std::ios::trunc);
    if (!bin) throw std::runtime_error("write_screen: cannot open " + path);
    for (double v : screen.phase.values()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      char bytes[8];
      std::memcpy(bytes, &bits, 8);
      bin.write(bytes, 8);
    }
  }
  std::ofstream hdr(path + ".hdr", std::ios::trunc);
  hdr << std::setprecision(17);
  hdr << "grid_size = " << screen.phase.side() << "\n"
      << "pixel_pitch = " << screen.pixel_pitch << "\n"
      << "r0 = " << screen.r0 << "\n"
      << "wavelength = " << screen.wavelength_ref << "\n"
      << "outer_scale = " << screen.outer_scale << "\n"
      << "seed = " << screen.seed << "\n";
}

PhaseScreen read_screen(const std::string& path) {
  std::ifstream hdr(path + ".hdr");
  if (!hdr) throw std::runtime_error("read_screen: missing header " + path + ".hdr");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  PhaseScreen s;
  const std::size_t n = std::stoull(kv.at("grid_size"));
  s.pixel_pitch = std::stod(kv.at("pixel_pitch"));
  s.r0 = std::stod(kv.at("r0"));
  s.wavelength_ref = std::stod(kv.at("wavelength"));
  s.outer_scale = std::stod(kv.at("outer_scale"));
  s.seed = std::stoull(kv.at("seed"));
  s.phase = RealGrid(n);
  std::ifstream bin(path, std::ios::binary);
  for (double& v : s.phase.values()) {
    char bytes[8];
    if (!bin.read(bytes, 8)) throw std::runtime_error("read_screen: truncated " + path);
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  return s;
}

}  // namespace mspgd::turbulence
