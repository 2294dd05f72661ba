#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "imbalkit/report.hpp"

namespace imbalkit {
namespace {

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

std::string header(double width, double height, const std::string& title) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  return out.str();
}

// White to dark blue.
std::string shade(double v) {
  v = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  auto channel = [&](double full, double dark) { return static_cast<int>(std::lround(full + (dark - full) * v)); };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(255, 8), channel(255, 48), channel(255, 107));
  return buf;
}

}  // namespace

std::string roc_svg(const std::vector<RocSeries>& series, const std::string& title) {
  const double left = 60, top = 36, size = 360, legend_x = left + size + 24;
  const double width = legend_x + 260, height = top + size + 56;
  std::ostringstream out;
  out << header(width, height, title);
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(size) << "\" height=\"" << num(size)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double f = i / 5.0;
    double x = left + f * size, y = top + size - f * size;
    out << "<line x1=\"" << num(x) << "\" y1=\"" << num(top + size) << "\" x2=\"" << num(x) << "\" y2=\""
        << num(top + size + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(x) << "\" y=\"" << num(top + size + 18) << "\" text-anchor=\"middle\" font-size=\"10\">"
        << num(f).substr(0, 3) << "</text>\n"
        << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left) << "\" y2=\"" << num(y)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
        << num(f).substr(0, 3) << "</text>\n";
  }
  out << "<text x=\"" << num(left + size / 2) << "\" y=\"" << num(top + size + 38)
      << "\" text-anchor=\"middle\" font-size=\"12\">False positive rate</text>\n"
      << "<text x=\"16\" y=\"" << num(top + size / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << num(top + size / 2) << ")\">True positive rate</text>\n"
      << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + size) << "\" x2=\"" << num(left + size) << "\" y2=\""
      << num(top) << "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& c = series[s].curve;
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.fpr.size(); ++i) {
      if (i) out << ' ';
      out << num(left + c.fpr[i] * size) << ',' << num(top + size - c.tpr[i] * size);
    }
    out << "\"/>\n";
    double ly = top + 10 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << num(legend_x) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(legend_x + 20) << "\" y2=\""
        << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n"
        << "<text x=\"" << num(legend_x + 26) << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\">"
        << xml_escape(series[s].name) << " (AUC " << num(series[s].auc * 100.0).substr(0, 5) << "%)</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_svg(const std::vector<std::string>& names, const Eigen::MatrixXd& values,
                        const std::string& title) {
  const double cell = 26, label = 170;
  const double n = static_cast<double>(names.size());
  const double width = label + n * cell + 20, height = label + n * cell + 20;
  std::ostringstream out;
  out << header(width, height, title);
  for (std::size_t i = 0; i < names.size(); ++i) {
    double pos = label + static_cast<double>(i) * cell;
    out << "<text x=\"" << num(label - 6) << "\" y=\"" << num(pos + cell / 2 + 4)
        << "\" text-anchor=\"end\" font-size=\"10\">" << xml_escape(names[i]) << "</text>\n"
        << "<text x=\"" << num(pos + cell / 2 + 4) << "\" y=\"" << num(label - 6)
        << "\" text-anchor=\"start\" font-size=\"10\" transform=\"rotate(-90 " << num(pos + cell / 2 + 4) << ' '
        << num(label - 6) << ")\">" << xml_escape(names[i]) << "</text>\n";
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      double x = label + static_cast<double>(c) * cell, y = label + static_cast<double>(r) * cell;
      double v = values(r, c);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell) << "\" height=\"" << num(cell)
          << "\" fill=\"" << shade(v) << "\" stroke=\"white\"/>\n"
          << "<text x=\"" << num(x + cell / 2) << "\" y=\"" << num(y + cell / 2 + 3)
          << "\" text-anchor=\"middle\" font-size=\"8\" fill=\"" << (v > 0.55 ? "white" : "black") << "\">"
          << num(v).substr(0, 4) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string bar_svg(const std::vector<std::string>& labels, const std::vector<double>& values,
                    const std::string& title) {
  const double label = 180, span = 380, bar = 18, top = 36;
  const double width = label + span + 80, height = top + bar * static_cast<double>(labels.size()) + 30;
  double lo = 0.0, hi = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  auto xpos = [&](double v) { return label + (v - lo) / (hi - lo) * span; };
  std::ostringstream out;
  out << header(width, height, title);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double v = std::isfinite(values[i]) ? values[i] : 0.0;
    double y = top + bar * static_cast<double>(i);
    double x0 = xpos(std::min(0.0, v)), x1 = xpos(std::max(0.0, v));
    out << "<text x=\"" << num(label - 6) << "\" y=\"" << num(y + bar / 2 + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << xml_escape(labels[i]) << "</text>\n"
        << "<rect x=\"" << num(x0) << "\" y=\"" << num(y + 2) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(bar - 4) << "\" fill=\"" << (v < 0 ? "#d62728" : "#1f77b4") << "\"/>\n"
        << "<text x=\"" << num(x1 + 4) << "\" y=\"" << num(y + bar / 2 + 4) << "\" font-size=\"10\">"
        << short_number(v) << "</text>\n";
  }
  double zero = xpos(0.0);
  out << "<line x1=\"" << num(zero) << "\" y1=\"" << num(top) << "\" x2=\"" << num(zero) << "\" y2=\""
      << num(height - 30) << "\" stroke=\"black\"/>\n"
      << "</svg>\n";
  return out.str();
}

}  // namespace imbalkit
