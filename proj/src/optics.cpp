#include "mspgd/optics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mspgd/errors.hpp"
#include "mspgd/kernels.hpp"

namespace mspgd::optics {
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t pad_offset(const PupilSampling& s) { return (s.padded_side() - s.pupil_pixels) / 2; }

void check_sampling(const PupilSampling& s) {
  if (!(s.aperture_diameter > 0.0) || s.pupil_pixels < 16 || s.pad_factor < 1) {
    throw ConfigError("pupil sampling: need aperture > 0, >= 16 pupil pixels, pad factor >= 1");
  }
  if (s.pupil_pixels % 2 != 0) throw ConfigError("pupil sampling: pupil pixel count must be even");
}

}  // namespace

// The outer ring sits outside the clear aperture so that edge-heavy modes
// (coma, spherical) are reachable with Gaussian influences.
constexpr double kOuterRingRadius = 1.2;

std::vector<std::array<double, 2>> ring_layout(std::size_t count) {
  if (count == 0) throw ConfigError("ring_layout: actuator count must be positive");
  std::vector<std::size_t> rings;
  if (count == 40) {
    rings = {1, 8, 12, 19};
  } else {
    rings.push_back(1);
    std::size_t placed = 1;
    for (std::size_t k = 1; placed < count; ++k) {
      const std::size_t n = std::min(6 * k, count - placed);
      rings.push_back(n);
      placed += n;
    }
  }
  std::vector<std::array<double, 2>> out;
  const double ring_count = static_cast<double>(rings.size() - 1);
  for (std::size_t k = 0; k < rings.size(); ++k) {
    const double radius = ring_count > 0 ? kOuterRingRadius * static_cast<double>(k) / ring_count : 0.0;
    for (std::size_t i = 0; i < rings[k]; ++i) {
      const double angle = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(rings[k]);
      out.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
  }
  return out;
}

DeformableMirror::DeformableMirror(const MirrorParams& params, std::size_t grid_size)
    : params_(params), geometry_(grid_size), positions_(ring_layout(params.actuator_count)) {
  if (!(params.influence_sigma > 0.0) || !(params.voltage_gain > 0.0) || !(params.voltage_limit > 0.0)) {
    throw ConfigError("DeformableMirror: sigma, gain and voltage limit must be positive");
  }
  const std::size_t rings = params.actuator_count == 40 ? 3 : [&] {
    std::size_t placed = 1, k = 0;
    while (placed < params.actuator_count) placed += 6 * (++k);
    return k;
  }();
  spacing_ = rings > 0 ? kOuterRingRadius / static_cast<double>(rings) : 1.0;

  const auto idx = geometry_.indices();
  const std::size_t na = positions_.size();
  influence_.resize(idx.size() * na);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double x = geometry_.x(idx[k] % grid_size);
    const double y = geometry_.y(idx[k] / grid_size);
    for (std::size_t j = 0; j < na; ++j) influence_[k * na + j] = influence(j, x, y);
  }
}

double DeformableMirror::influence(std::size_t j, double x, double y) const {
  const double sigma = params_.influence_sigma * spacing_;
  const double dx = x - positions_[j][0];
  const double dy = y - positions_[j][1];
  return params_.voltage_gain * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

MirrorCommand DeformableMirror::clamp(std::span<const double> voltages) const {
  MirrorCommand cmd{{voltages.begin(), voltages.end()}, 0};
  const double lim = params_.voltage_limit;
  for (double& v : cmd.voltages) {
    if (v > lim) {
      v = lim;
      ++cmd.saturated;
    } else if (v < -lim) {
      v = -lim;
      ++cmd.saturated;
    }
  }
  return cmd;
}

void DeformableMirror::packed_phase(std::span<const double> voltages, std::span<double> out) const {
  if (voltages.size() != actuator_count()) throw std::invalid_argument("dm phase: voltage count mismatch");
  kernels::serial::matvec(influence_, voltages, out);
}

RealGrid dm_phase(const DeformableMirror& dm, std::span<const double> voltages) {
  std::vector<double> packed(dm.geometry().count());
  dm.packed_phase(voltages, packed);
  return dm.geometry().unpack(packed);
}

std::vector<double> ModalMap::voltages(std::span<const double> coefficients) const {
  if (coefficients.size() != mode_count()) throw ConfigError("ModalMap: coefficient count does not match M");
  std::vector<double> u(actuator_count(), 0.0);
  for (Eigen::Index n = 0; n < matrix.rows(); ++n) {
    const double a = coefficients[static_cast<std::size_t>(n)];
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) u[static_cast<std::size_t>(j)] += a * matrix(n, j);
  }
  return u;
}

ModalMap ModalMap::identity(std::size_t actuator_count) {
  ModalMap m;
  const auto n = static_cast<Eigen::Index>(actuator_count);
  m.matrix = Eigen::MatrixXd::Identity(n, n);
  m.fit_residuals.assign(actuator_count, 0.0);
  m.condition_number = 1.0;
  return m;
}

ModalMap fit_modal_map(const DeformableMirror& dm, const zernike::ZernikeBasis& basis) {
  if (!(dm.geometry() == basis.geometry())) {
    throw ConfigError("fit_modal_map: mirror and basis grids differ");
  }
  const auto rows = static_cast<Eigen::Index>(dm.geometry().count());
  const auto cols = static_cast<Eigen::Index>(dm.actuator_count());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> F(
      dm.influence_matrix().data(), rows, cols);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double s_max = s(0);
  const double s_min = s(s.size() - 1);
  const double cond = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
  if (!(cond < 1e10)) {
    throw NumericalError("fit_modal_map: influence matrix is ill-conditioned (condition number " +
                         std::to_string(cond) + ")");
  }
  // Tikhonov-filtered pseudo-inverse.
  const double lambda = 1e-4 * s_max;
  const Eigen::VectorXd filt = s.array() / (s.array().square() + lambda * lambda);
  const Eigen::MatrixXd pinv = svd.matrixV() * filt.asDiagonal() * svd.matrixU().transpose();

  const auto& Z = basis.packed();
  ModalMap map;
  map.condition_number = cond;
  map.noll_indices.assign(basis.noll_indices().begin(), basis.noll_indices().end());
  map.matrix = (pinv * Z).transpose();
  const Eigen::MatrixXd reproduced = F * map.matrix.transpose();
  for (Eigen::Index n = 0; n < Z.cols(); ++n) {
    const double err = (reproduced.col(n) - Z.col(n)).norm();
    const double ref = Z.col(n).norm();
    const double rel = ref > 0.0 ? err / ref : 0.0;
    map.fit_residuals.push_back(rel);
    if (rel > 0.5) map.poorly_reproduced.push_back(static_cast<std::size_t>(n));
  }
  return map;
}

ComplexGrid pupil_field(const RealGrid& screen_phase, const RealGrid& dm_correction, std::array<double, 2> tilt,
                        const PupilSampling& sampling, double wavelength) {
  check_sampling(sampling);
  const std::size_t n = sampling.pupil_pixels;
  if (screen_phase.side() != n || dm_correction.side() != n) {
    throw std::invalid_argument("pupil_field: phase maps do not match the pupil sampling");
  }
  const DiskGeometry geo(n);
  const double k = 2.0 * kPi / wavelength;
  const double half_d = sampling.aperture_diameter / 2.0;
  ComplexGrid out(n, {0.0, 0.0});
  for (std::size_t idx : geo.indices()) {
    const double x = geo.x(idx % n) * half_d;
    const double y = geo.y(idx / n) * half_d;
    const double phi = screen_phase[idx] - dm_correction[idx] + k * (tilt[0] * x + tilt[1] * y);
    out[idx] = std::polar(1.0, phi);
  }
  return out;
}

FocalField focal_field(const ComplexGrid& pupil, const PupilSampling& sampling, double focal_length,
                       double wavelength) {
  check_sampling(sampling);
  if (pupil.side() != sampling.pupil_pixels) throw std::invalid_argument("focal_field: pupil size mismatch");
  // Airy core diameter in focal pixels is 2.44 * pad_factor.
  if (2.44 * static_cast<double>(sampling.pad_factor) < 8.0) {
    throw ConfigError("focal_field: pad factor " + std::to_string(sampling.pad_factor) +
                      " leaves fewer than 8 pixels across the Airy core");
  }
  const std::size_t big = sampling.padded_side();
  const std::size_t off = pad_offset(sampling);
  ComplexGrid g(big, {0.0, 0.0});
  for (std::size_t r = 0; r < pupil.side(); ++r) {
    for (std::size_t c = 0; c < pupil.side(); ++c) g(r + off, c + off) = pupil(r, c);
  }
  shift_half(g);
  Fft2d(big).forward(g);
  shift_half(g);
  const double norm = 1.0 / static_cast<double>(big);
  for (auto& v : g.values()) v *= norm;
  return {std::move(g), wavelength * focal_length / (static_cast<double>(big) * sampling.pixel_pitch())};
}

double coupling_efficiency(const ComplexGrid& field, const ComplexGrid& mode) {
  if (field.side() != mode.side()) throw std::invalid_argument("coupling_efficiency: grid mismatch");
  std::complex<double> overlap{0.0, 0.0};
  double pe = 0.0;
  double pm = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    overlap += field[k] * std::conj(mode[k]);
    pe += std::norm(field[k]);
    pm += std::norm(mode[k]);
  }
  if (!(pe > 0.0) || !(pm > 0.0)) throw NumericalError("coupling_efficiency: zero-power field");
  return std::norm(overlap) / (pe * pm);
}

ComplexGrid fiber_mode(const PupilSampling& sampling, const FiberModel& fiber) {
  check_sampling(sampling);
  if (!(fiber.mode_field_radius > 0.0)) throw ConfigError("fiber_mode: mode field radius must be positive");
  const std::size_t big = sampling.padded_side();
  const double dxf = fiber.wavelength * fiber.focal_length / (static_cast<double>(big) * sampling.pixel_pitch());
  const double w2 = fiber.mode_field_radius * fiber.mode_field_radius;
  const double half = static_cast<double>(big) / 2.0;
  ComplexGrid mode(big);
  for (std::size_t r = 0; r < big; ++r) {
    const double ky = static_cast<double>(r) - half;
    for (std::size_t c = 0; c < big; ++c) {
      const double kx = static_cast<double>(c) - half;
      const double rr = (kx * kx + ky * ky) * dxf * dxf;
      // The pupil center sits half a pixel off the DFT origin, which puts a
      // linear phase of pi k / N on every on-axis focal field.
      mode(r, c) = std::polar(std::exp(-rr / w2), kPi * (kx + ky) / static_cast<double>(big));
    }
  }
  return mode;
}

ModeRadius optimize_mode_radius(const PupilSampling& sampling, const FiberModel& fiber) {
  check_sampling(sampling);
  const std::size_t n = sampling.pupil_pixels;
  const RealGrid zero(n, 0.0);
  const ComplexGrid flat = pupil_field(zero, zero, {0.0, 0.0}, sampling, fiber.wavelength);
  const FocalField focal = focal_field(flat, sampling, fiber.focal_length, fiber.wavelength);

  auto eta_at = [&](double w) {
    FiberModel f = fiber;
    f.mode_field_radius = w;
    return coupling_efficiency(focal.field, fiber_mode(sampling, f));
  };
  const double scale = fiber.wavelength * fiber.focal_length / sampling.aperture_diameter;
  ModeRadius out;
  out.bracket_lo = 0.2 * scale;
  out.bracket_hi = 2.0 * scale;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = out.bracket_lo;
  double b = out.bracket_hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = eta_at(c);
  double fd = eta_at(d);
  while (b - a > 1e-6 * scale) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = eta_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = eta_at(d);
    }
  }
  out.radius = 0.5 * (a + b);
  out.eta = eta_at(out.radius);
  return out;
}

FiberCoupler::FiberCoupler(const PupilSampling& sampling, const FiberModel& fiber)
    : sampling_(sampling), fiber_(fiber), geometry_(sampling.pupil_pixels), focal_mode_(fiber_mode(sampling, fiber)) {
  const std::size_t big = sampling.padded_side();
  ComplexGrid g = focal_mode_;
  for (const auto& v : g.values()) mode_norm2_ += std::norm(v);
  shift_half(g);
  Fft2d(big).backward(g);
  shift_half(g);
  const double norm = 1.0 / static_cast<double>(big);
  const std::size_t off = pad_offset(sampling);
  const std::size_t n = sampling.pupil_pixels;
  const double k = 2.0 * kPi / fiber.wavelength;
  const double half_d = sampling.aperture_diameter / 2.0;
  for (std::size_t idx : geometry_.indices()) {
    const std::size_t r = idx / n;
    const std::size_t c = idx % n;
    pupil_mode_.push_back(g(r + off, c + off) * norm);
    tilt_x_.push_back(k * geometry_.x(c) * half_d);
    tilt_y_.push_back(k * geometry_.y(r) * half_d);
  }
}

double FiberCoupler::eta_from_phase(std::span<const double> packed_phase) const {
  const std::complex<double> overlap = kernels::serial::phasor_overlap(packed_phase, pupil_mode_);
  return std::norm(overlap) / (static_cast<double>(pupil_mode_.size()) * mode_norm2_);
}

double FiberCoupler::eta_from_field(const ComplexGrid& pupil) const {
  return coupling_efficiency(focal_field(pupil, sampling_, fiber_.focal_length, fiber_.wavelength).field, focal_mode_);
}

}  // namespace mspgd::optics
