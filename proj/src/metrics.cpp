#include "mspgd/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "mspgd/errors.hpp"

namespace mspgd::metrics {

double mean(std::span<const double> series) {
  if (series.empty()) throw NumericalError("mean of an empty series");
  double acc = 0.0;
  for (double v : series) acc += v;
  return acc / static_cast<double>(series.size());
}

double stdev(std::span<const double> series) {
  if (series.size() < 2) throw NumericalError("stdev needs at least two samples");
  const double m = mean(series);
  double ss = 0.0;
  for (double v : series) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(series.size() - 1));
}

double improvement_db(std::span<const double> open, std::span<const double> closed) {
  if (open.empty() || closed.empty()) throw NumericalError("improvement_db: empty series");
  const double mo = mean(open);
  const double mc = mean(closed);
  if (!(mo > 0.0) || !(mc > 0.0)) throw NumericalError("improvement_db: undefined for non-positive means");
  return 10.0 * std::log10(mc / mo);
}

double rsd(std::span<const double> series) {
  if (series.size() < 2) throw NumericalError("rsd: need at least two samples");
  const double m = mean(series);
  if (!(m > 0.0)) throw NumericalError("rsd: undefined for non-positive mean");
  return 100.0 * stdev(series) / m;
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram histogram(std::span<const double> series, std::size_t bin_count, double hi) {
  if (bin_count < 2) throw std::invalid_argument("histogram: bin_count must be >= 2");
  Histogram h;
  h.lo = 0.0;
  h.hi = hi > 0.0 ? hi : 1.0;
  h.counts.assign(bin_count, 0);
  const double width = h.bin_width();
  for (double v : series) {
    auto bin = static_cast<long long>(std::floor((v - h.lo) / width));
    bin = std::clamp<long long>(bin, 0, static_cast<long long>(bin_count) - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  return h;
}

Histogram histogram(std::span<const double> series, std::size_t bin_count) {
  double hi = 0.0;
  for (double v : series) hi = std::max(hi, v);
  return histogram(series, bin_count, hi);
}

double quantile(std::span<const double> series, double q) {
  if (series.empty()) throw NumericalError("quantile of an empty series");
  std::vector<double> v(series.begin(), series.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double interquartile_range(std::span<const double> series) {
  return quantile(series, 0.75) - quantile(series, 0.25);
}

RunSummary summarize(const std::string& scenario, double d_over_r0, std::span<const double> open,
                     std::span<const double> closed, double duration, std::vector<std::uint64_t> seeds,
                     std::size_t bins) {
  RunSummary s;
  s.scenario = scenario;
  s.d_over_r0 = d_over_r0;
  s.mean_eta_open = mean(open);
  s.mean_eta_closed = mean(closed);
  s.improvement_db = improvement_db(open, closed);
  s.rsd_open = rsd(open);
  s.rsd_closed = rsd(closed);
  double hi = 0.0;
  for (double v : open) hi = std::max(hi, v);
  for (double v : closed) hi = std::max(hi, v);
  s.histogram_open = histogram(open, bins, hi);
  s.histogram_closed = histogram(closed, bins, hi);
  s.duration = duration;
  s.seeds = std::move(seeds);
  return s;
}

namespace {
std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? ";" : "") + std::to_string(seeds[i]);
  return out;
}
}  // namespace

std::string to_key_value(const RunSummary& s) {
  std::string out;
  out += fmt::format("scenario = {}\n", s.scenario);
  out += fmt::format("d_over_r0 = {}\n", s.d_over_r0);
  out += fmt::format("mean_eta_open = {}\n", s.mean_eta_open);
  out += fmt::format("mean_eta_closed = {}\n", s.mean_eta_closed);
  out += fmt::format("improvement_db = {}\n", s.improvement_db);
  out += fmt::format("rsd_open = {}\n", s.rsd_open);
  out += fmt::format("rsd_closed = {}\n", s.rsd_closed);
  out += fmt::format("duration = {}\n", s.duration);
  out += fmt::format("seeds = {}\n", seed_list(s.seeds));
  return out;
}

std::string csv_header() {
  return "scenario,d_over_r0,mean_eta_open,mean_eta_closed,improvement_db,rsd_open,rsd_closed,duration,seeds\n";
}

std::string to_csv_row(const RunSummary& s) {
  return fmt::format("{},{},{},{},{},{},{},{},{}\n", s.scenario, s.d_over_r0, s.mean_eta_open, s.mean_eta_closed,
                     s.improvement_db, s.rsd_open, s.rsd_closed, s.duration, seed_list(s.seeds));
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_center,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) out += fmt::format("{},{}\n", h.bin_center(i), h.counts[i]);
  return out;
}

}  // namespace mspgd::metrics
