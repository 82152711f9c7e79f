#include "mspgd/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mspgd::svg {
namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
constexpr std::array<const char*, 4> kColors{"#c0392b", "#1f5fa8", "#2e8b57", "#7d3c98"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

// Axis box, five ticks per axis, labels and title.
void draw_axes(fmt::memory_buffer& out, const Frame& f, const std::string& title, const std::string& xl,
               const std::string& yl) {
  auto put = [&](fmt::string_view format, auto&&... args) {
    fmt::vformat_to(std::back_inserter(out), format, fmt::make_format_args(args...));
  };
  put("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  put("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  put("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", kWidth / 2, escape(title));
  put("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft, kTop,
      kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    put("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", f.px(xv), kHeight - kBottom + 16, xv);
    put("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6, f.py(yv) + 4, yv);
  }
  put("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (kLeft + kWidth - kRight) / 2, kHeight - 15,
      escape(xl));
  put("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
      (kTop + kHeight - kBottom) / 2, (kTop + kHeight - kBottom) / 2, escape(yl));
}

void draw_legend(fmt::memory_buffer& out, std::size_t index, const std::string& label) {
  const double y = kTop + 16 + 16 * static_cast<double>(index);
  const double x = kWidth - kRight - 150;
  fmt::format_to(std::back_inserter(out),
                 "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>"
                 "<text x=\"{}\" y=\"{}\">{}</text>\n",
                 x, y - 4, x + 20, y - 4, kColors[index % kColors.size()], x + 26, y, escape(label));
}

std::string csv_field(const std::string& s) {
  return s.find_first_of(",\"\n") == std::string::npos ? s : "\"" + s + "\"";
}

}  // namespace

Plot trace_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                std::span<const double> x, std::span<const Column> traces) {
  for (const auto& t : traces) {
    if (t.values.size() != x.size()) throw std::invalid_argument("trace_plot: trace length differs from x");
  }
  Frame f{0, 1, 0, 1};
  if (!x.empty()) {
    f.x0 = *std::min_element(x.begin(), x.end());
    f.x1 = *std::max_element(x.begin(), x.end());
  }
  double top = 0;
  for (const auto& t : traces) {
    for (double v : t.values) top = std::max(top, v);
  }
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
  f.y1 = top > 0 ? top * 1.05 : 1.0;

  fmt::memory_buffer out;
  draw_axes(out, f, title, x_label, y_label);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    fmt::format_to(std::back_inserter(out), "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"0.8\" points=\"",
                   kColors[k % kColors.size()]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      fmt::format_to(std::back_inserter(out), "{:.2f},{:.2f} ", f.px(x[i]), f.py(traces[k].values[i]));
    }
    fmt::format_to(std::back_inserter(out), "\"/>\n");
    draw_legend(out, k, traces[k].label);
  }
  fmt::format_to(std::back_inserter(out), "</svg>\n");

  fmt::memory_buffer csv;
  fmt::format_to(std::back_inserter(csv), "{}", csv_field(x_label));
  for (const auto& t : traces) fmt::format_to(std::back_inserter(csv), ",{}", csv_field(t.label));
  fmt::format_to(std::back_inserter(csv), "\n");
  for (std::size_t i = 0; i < x.size(); ++i) {
    fmt::format_to(std::back_inserter(csv), "{:.9g}", x[i]);
    for (const auto& t : traces) fmt::format_to(std::back_inserter(csv), ",{:.9g}", t.values[i]);
    fmt::format_to(std::back_inserter(csv), "\n");
  }
  return {fmt::to_string(out), fmt::to_string(csv)};
}

Plot histogram_plot(const std::string& title, const std::string& x_label, std::span<const NamedHistogram> hists) {
  if (hists.empty()) throw std::invalid_argument("histogram_plot: nothing to draw");
  const auto& ref = hists.front().histogram;
  for (const auto& h : hists) {
    if (h.histogram.counts.size() != ref.counts.size() || h.histogram.lo != ref.lo || h.histogram.hi != ref.hi) {
      throw std::invalid_argument("histogram_plot: histograms must share bins");
    }
  }
  std::vector<std::vector<double>> prob;
  double top = 0;
  for (const auto& h : hists) {
    const double total = static_cast<double>(std::max<std::uint64_t>(h.histogram.total(), 1));
    auto& p = prob.emplace_back();
    for (auto c : h.histogram.counts) {
      p.push_back(static_cast<double>(c) / total);
      top = std::max(top, p.back());
    }
  }
  Frame f{ref.lo, ref.hi > ref.lo ? ref.hi : ref.lo + 1, 0, top > 0 ? top * 1.05 : 1.0};

  fmt::memory_buffer out;
  draw_axes(out, f, title, x_label, "probability");
  for (std::size_t k = 0; k < hists.size(); ++k) {
    fmt::format_to(std::back_inserter(out), "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"",
                   kColors[k % kColors.size()]);
    for (std::size_t i = 0; i < prob[k].size(); ++i) {
      const double left = ref.lo + static_cast<double>(i) * ref.bin_width();
      fmt::format_to(std::back_inserter(out), "{:.2f},{:.2f} {:.2f},{:.2f} ", f.px(left), f.py(prob[k][i]),
                     f.px(left + ref.bin_width()), f.py(prob[k][i]));
    }
    fmt::format_to(std::back_inserter(out), "\"/>\n");
    draw_legend(out, k, hists[k].label);
  }
  fmt::format_to(std::back_inserter(out), "</svg>\n");

  fmt::memory_buffer csv;
  fmt::format_to(std::back_inserter(csv), "bin_center");
  for (const auto& h : hists) fmt::format_to(std::back_inserter(csv), ",{}", csv_field(h.label));
  fmt::format_to(std::back_inserter(csv), "\n");
  for (std::size_t i = 0; i < ref.counts.size(); ++i) {
    fmt::format_to(std::back_inserter(csv), "{:.9g}", ref.bin_center(i));
    for (const auto& p : prob) fmt::format_to(std::back_inserter(csv), ",{:.9g}", p[i]);
    fmt::format_to(std::back_inserter(csv), "\n");
  }
  return {fmt::to_string(out), fmt::to_string(csv)};
}

}  // namespace mspgd::svg
