#pragma once

// Minimal self-contained SVG plots. Each plot comes with a CSV holding
// exactly the numbers drawn.

#include <span>
#include <string>
#include <vector>

#include "mspgd/metrics.hpp"

namespace mspgd::svg {

struct Plot {
  std::string svg;
  std::string csv;
};

struct Column {
  std::string label;
  std::vector<double> values;
};

/// Line traces sharing one x axis. CSV columns: x_label, then one per trace.
Plot trace_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                std::span<const double> x, std::span<const Column> traces);

struct NamedHistogram {
  std::string label;
  metrics::Histogram histogram;
};

/// Step outlines of histograms over identical bins, drawn as probability
/// (count / total). CSV columns: bin_center, then one probability per histogram.
/// Throws std::invalid_argument when the bins differ.
Plot histogram_plot(const std::string& title, const std::string& x_label, std::span<const NamedHistogram> hists);

}  // namespace mspgd::svg
