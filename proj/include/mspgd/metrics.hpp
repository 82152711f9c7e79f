#pragma once

// Statistics over coupling-efficiency series: dB improvement, relative
// standard deviation, histograms and the open/closed run summary.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mspgd::metrics {

double mean(std::span<const double> series);

/// Sample (n - 1) standard deviation.
double stdev(std::span<const double> series);

/// 10 log10(mean(closed) / mean(open)). Throws NumericalError for empty
/// series or non-positive means.
double improvement_db(std::span<const double> open, std::span<const double> closed);

/// 100 * stdev / mean, percent. Throws NumericalError for fewer than two
/// samples or a non-positive mean.
double rsd(std::span<const double> series);

struct Histogram {
  double lo = 0;
  double hi = 0;
  std::vector<std::uint64_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
  std::uint64_t total() const;
};

/// Uniform bins over [0, max(series)]. The maximum lands in the last bin.
/// bin_count must be >= 2.
Histogram histogram(std::span<const double> series, std::size_t bin_count);

/// Same bins over an explicit [0, hi] range.
Histogram histogram(std::span<const double> series, std::size_t bin_count, double hi);

double quantile(std::span<const double> series, double q);
double interquartile_range(std::span<const double> series);

struct RunSummary {
  std::string scenario;
  double d_over_r0 = 0;
  double mean_eta_open = 0;
  double mean_eta_closed = 0;
  double improvement_db = 0;
  double rsd_open = 0;
  double rsd_closed = 0;
  Histogram histogram_open;
  Histogram histogram_closed;
  double duration = 0;
  std::vector<std::uint64_t> seeds;
};

/// Builds a summary from raw series; histograms share [0, max of both].
RunSummary summarize(const std::string& scenario, double d_over_r0, std::span<const double> open,
                     std::span<const double> closed, double duration, std::vector<std::uint64_t> seeds,
                     std::size_t bins = 40);

/// "key = value" lines.
std::string to_key_value(const RunSummary& s);
std::string csv_header();
std::string to_csv_row(const RunSummary& s);
/// Two columns: bin_center,count.
std::string histogram_csv(const Histogram& h);

}  // namespace mspgd::metrics
