#include "ser/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ser::svg {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void open_svg(std::ostringstream& out, int w, int h) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
}

}  // namespace

std::string loss_curves(const nn::History& history) {
  if (history.rows.empty()) throw std::invalid_argument("loss_curves: empty history");
  const int width = 640, height = 400;
  const double left = 60, right = 20, top = 20, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  const auto& rows = history.rows;
  const std::size_t n = rows.size();
  double lo = rows[0].train_loss, hi = rows[0].train_loss;
  for (const auto& r : rows) {
    lo = std::min({lo, r.train_loss, r.val_loss});
    hi = std::max({hi, r.train_loss, r.val_loss});
  }
  if (hi <= lo) hi = lo + 1.0;

  auto x_at = [&](std::size_t i) {
    if (n == 1) return left + plot_w / 2;
    return left + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto y_at = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream out;
  open_svg(out, width, height);
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  // axes
  out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\""
      << fmt(left) << "\" y2=\"" << fmt(top + plot_h)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + plot_h)
      << "\" x2=\"" << fmt(left + plot_w) << "\" y2=\"" << fmt(top + plot_h)
      << "\" stroke=\"black\"/>\n";

  // one tick per epoch, numeric labels thinned to ~10
  std::size_t label_every = (n + 9) / 10;
  if (label_every == 0) label_every = 1;
  for (std::size_t i = 0; i < n; ++i) {
    double x = x_at(i);
    out << "<line class=\"tick\" x1=\"" << fmt(x) << "\" y1=\""
        << fmt(top + plot_h) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(top + plot_h + 5) << "\" stroke=\"black\"/>\n";
    if (i % label_every == 0 || i == n - 1) {
      out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h + 18)
          << "\" font-size=\"10\" text-anchor=\"middle\">" << rows[i].epoch
          << "</text>\n";
    }
  }
  // y ticks: min/mid/max
  for (int k = 0; k <= 2; ++k) {
    double v = lo + (hi - lo) * k / 2.0;
    double y = y_at(v);
    out << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << fmt(left) << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + 3)
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }

  out << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\""
      << fmt(height - 12) << "\" font-size=\"12\" text-anchor=\"middle\">"
      << "epoch</text>\n";
  out << "<text x=\"14\" y=\"" << fmt(top + plot_h / 2)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fmt(top + plot_h / 2) << ")\">loss</text>\n";

  auto emit_poly = [&](const char* cls, const char* color, bool val) {
    out << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      double v = val ? rows[i].val_loss : rows[i].train_loss;
      if (i) out << ' ';
      out << fmt(x_at(i)) << ',' << fmt(y_at(v));
    }
    out << "\"/>\n";
  };
  emit_poly("train", "#1f77b4", false);
  emit_poly("val", "#d62728", true);

  // legend
  out << "<rect x=\"" << fmt(left + plot_w - 110) << "\" y=\"" << fmt(top + 6)
      << "\" width=\"12\" height=\"3\" fill=\"#1f77b4\"/>\n";
  out << "<text x=\"" << fmt(left + plot_w - 94) << "\" y=\"" << fmt(top + 11)
      << "\" font-size=\"10\">train loss</text>\n";
  out << "<rect x=\"" << fmt(left + plot_w - 110) << "\" y=\"" << fmt(top + 20)
      << "\" width=\"12\" height=\"3\" fill=\"#d62728\"/>\n";
  out << "<text x=\"" << fmt(left + plot_w - 94) << "\" y=\"" << fmt(top + 25)
      << "\" font-size=\"10\">val loss</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string heatmap(const Tensor& m) {
  if (m.ndim() != 2 || m.empty()) throw std::invalid_argument("heatmap: need a non-empty matrix");
  const std::size_t rows = m.rows(), cols = m.cols();
  const int cell = 4;
  const int width = static_cast<int>(cols) * cell;
  const int height = static_cast<int>(rows) * cell;

  double lo = m.data[0], hi = m.data[0];
  for (double v : m.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span = hi - lo;
  if (span <= 0) span = 1.0;

  std::ostringstream out;
  open_svg(out, width, height);
  for (std::size_t r = 0; r < rows; ++r) {
    // row 0 at the bottom, like a spectrogram with frequency increasing upward
    int y = static_cast<int>(rows - 1 - r) * cell;
    for (std::size_t c = 0; c < cols; ++c) {
      int g = static_cast<int>(std::lround(255.0 * (m(r, c) - lo) / span));
      g = std::clamp(g, 0, 255);
      out << "<rect x=\"" << static_cast<int>(c) * cell << "\" y=\"" << y
          << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string waveform(const std::vector<double>& samples, int max_points) {
  if (samples.empty()) throw std::invalid_argument("waveform: empty signal");
  if (max_points < 2) throw std::invalid_argument("waveform: max_points must be >= 2");
  const int width = 800, height = 200;
  const std::size_t n = samples.size();
  std::size_t stride = (n + max_points - 1) / static_cast<std::size_t>(max_points);
  if (stride == 0) stride = 1;
  const std::size_t points = (n + stride - 1) / stride;

  std::ostringstream out;
  open_svg(out, width, height);
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<line x1=\"0\" y1=\"" << height / 2 << "\" x2=\"" << width
      << "\" y2=\"" << height / 2 << "\" stroke=\"#cccccc\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
  for (std::size_t p = 0, i = 0; i < n; i += stride, ++p) {
    double v = std::clamp(samples[i], -1.0, 1.0);
    double x = points == 1 ? width / 2.0
                           : static_cast<double>(width) * static_cast<double>(p) /
                                 static_cast<double>(points - 1);
    double y = height / 2.0 - v * (height / 2.0 - 10.0);
    if (p) out << ' ';
    out << fmt(x) << ',' << fmt(y);
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

}  // namespace ser::svg
