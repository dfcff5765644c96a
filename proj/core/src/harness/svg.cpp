#include "fluidrl/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fluidrl {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

// Largest "nice" step (1, 2 or 5 times a power of ten) giving at most ~6
// ticks over the range.
double nice_step(double range) {
  if (range <= 0) return 1.0;
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step;
  if (frac <= 1.0)
    step = 1.0;
  else if (frac <= 2.0)
    step = 2.0;
  else if (frac <= 5.0)
    step = 5.0;
  else
    step = 10.0;
  return step * mag;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi <= lo) {
      hi = lo + 1.0;
      return;
    }
    const double p = (hi - lo) * 0.05;
    lo -= p;
    hi += p;
  }
};

}  // namespace

const char* chart_color(int i) {
  static const char* kColors[] = {"#3366cc", "#dc3912", "#109618", "#ff9900",
                                  "#990099", "#0099c6", "#dd4477", "#66aa00"};
  return kColors[((i % 8) + 8) % 8];
}

SvgChart::SvgChart(int width, int height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {}

void SvgChart::set_axis_labels(std::string x_label, std::string y_label) {
  x_label_ = std::move(x_label);
  y_label_ = std::move(y_label);
}

void SvgChart::add_line(const std::vector<double>& x,
                        const std::vector<double>& y, const std::string& color,
                        const std::string& label) {
  if (x.size() != y.size()) throw std::runtime_error("chart: x/y size mismatch");
  series_.push_back({0, x, y, {}, color, label});
  if (!label.empty()) legend_.emplace_back(label, color);
}

void SvgChart::add_band(const std::vector<double>& x,
                        const std::vector<double>& lo,
                        const std::vector<double>& hi,
                        const std::string& color) {
  if (x.size() != lo.size() || x.size() != hi.size())
    throw std::runtime_error("chart: band size mismatch");
  series_.push_back({1, x, lo, hi, color, ""});
}

void SvgChart::add_scatter(const std::vector<double>& x,
                           const std::vector<double>& y,
                           const std::string& color,
                           const std::string& label) {
  if (x.size() != y.size()) throw std::runtime_error("chart: x/y size mismatch");
  series_.push_back({2, x, y, {}, color, label});
  if (!label.empty()) legend_.emplace_back(label, color);
}

void SvgChart::add_bar(const std::string& label, double value,
                       const std::string& color) {
  bars_.push_back({label, value, color});
}

void SvgChart::add_legend(const std::string& label, const std::string& color) {
  legend_.emplace_back(label, color);
}

std::string SvgChart::render() const {
  const double ml = 66, mr = 18, mt = 40, mb = 52;
  const double pw = width_ - ml - mr;
  const double ph = height_ - mt - mb;

  Range xr, yr;
  bool any = false;
  if (!bars_.empty()) {
    yr.lo = 0.0;
    yr.hi = 0.0;
    for (const Bar& b : bars_) yr.include(b.value);
    any = true;
  } else {
    bool first = true;
    for (const Series& s : series_) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (first) {
          xr.lo = xr.hi = s.x[i];
          yr.lo = yr.hi = s.y[i];
          first = false;
          any = true;
        }
        xr.include(s.x[i]);
        yr.include(s.y[i]);
        if (s.kind == 1) yr.include(s.y2[i]);
      }
    }
  }
  if (!any) {
    xr = Range{};
    yr = Range{};
  }
  xr.pad();
  yr.pad();

  auto px = [&](double v) { return ml + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double v) { return mt + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
      << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << " "
      << height_ << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << width_ / 2.0 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"15\" fill=\"#222\">" << esc(title_) << "</text>\n";

  // y grid and ticks
  const double ys = nice_step(yr.hi - yr.lo);
  for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi + ys * 1e-9; v += ys) {
    const double y = py(v);
    out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw
        << "\" y2=\"" << y << "\" stroke=\"#e3e3e3\"/>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#444\">" << num(v)
        << "</text>\n";
  }
  if (bars_.empty()) {
    const double xs = nice_step(xr.hi - xr.lo);
    for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + xs * 1e-9;
         v += xs) {
      const double x = px(v);
      out << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x
          << "\" y2=\"" << mt + ph << "\" stroke=\"#eeeeee\"/>\n";
      out << "<text x=\"" << x << "\" y=\"" << mt + ph + 16
          << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#444\">"
          << num(v) << "</text>\n";
    }
  }

  // frame
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#888\"/>\n";

  if (!bars_.empty()) {
    const double n = static_cast<double>(bars_.size());
    const double slot = pw / n;
    const double bw = slot * 0.68;
    const double zero = py(std::clamp(0.0, yr.lo, yr.hi));
    for (std::size_t i = 0; i < bars_.size(); ++i) {
      const Bar& b = bars_[i];
      const double cx = ml + slot * (static_cast<double>(i) + 0.5);
      const double yv = py(b.value);
      const double top = std::min(yv, zero);
      const double h = std::fabs(zero - yv);
      out << "<rect x=\"" << cx - bw / 2 << "\" y=\"" << top << "\" width=\""
          << bw << "\" height=\"" << h << "\" fill=\"" << b.color
          << "\" fill-opacity=\"0.85\"/>\n";
      out << "<text x=\"" << cx << "\" y=\"" << mt + ph + 16
          << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#444\">"
          << esc(b.label) << "</text>\n";
      out << "<text x=\"" << cx << "\" y=\"" << top - 4
          << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"#333\">"
          << num(b.value) << "</text>\n";
    }
  }

  for (const Series& s : series_) {
    if (s.kind == 1) {
      out << "<polygon points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << px(s.x[i]) << "," << py(s.y2[i]) << " ";
      for (std::size_t i = s.x.size(); i-- > 0;)
        out << px(s.x[i]) << "," << py(s.y[i]) << " ";
      out << "\" fill=\"" << s.color << "\" fill-opacity=\"0.16\" "
          << "stroke=\"none\"/>\n";
    } else if (s.kind == 0) {
      out << "<polyline points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << px(s.x[i]) << "," << py(s.y[i]) << " ";
      out << "\" fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.8\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
            << "\" r=\"2.6\" fill=\"" << s.color
            << "\" fill-opacity=\"0.65\"/>\n";
    }
  }

  // axis labels
  if (!x_label_.empty())
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 10
        << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"#222\">"
        << esc(x_label_) << "</text>\n";
  if (!y_label_.empty())
    out << "<text x=\"16\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"#222\" "
        << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">"
        << esc(y_label_) << "</text>\n";

  // legend, top right inside the frame
  double ly = mt + 14;
  for (const auto& [label, color] : legend_) {
    const double lx = ml + pw - 150;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\""
        << lx + 22 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"3\"/>\n";
    out << "<text x=\"" << lx + 28 << "\" y=\"" << ly
        << "\" font-size=\"11\" fill=\"#222\">" << esc(label) << "</text>\n";
    ly += 16;
  }

  out << "</svg>\n";
  return out.str();
}

void SvgChart::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("chart: cannot write " + path);
  out << render();
  if (!out) throw std::runtime_error("chart: write failed for " + path);
}

}  // namespace fluidrl
