#pragma once

#include <string>
#include <vector>

namespace fluidrl {

// Stable eight-color cycle for chart series.
const char* chart_color(int i);

// Minimal self-contained SVG chart writer. Either xy mode (lines, bands,
// scatter marks) or bar mode (categorical x), not both in one chart. Axis
// ranges fit the data; bar charts always include zero.
class SvgChart {
 public:
  SvgChart(int width, int height, std::string title);

  void set_axis_labels(std::string x_label, std::string y_label);

  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& color, const std::string& label = "");
  // Translucent vertical band between lo and hi, typically mean +- std.
  void add_band(const std::vector<double>& x, const std::vector<double>& lo,
                const std::vector<double>& hi, const std::string& color);
  void add_scatter(const std::vector<double>& x, const std::vector<double>& y,
                   const std::string& color, const std::string& label = "");
  void add_bar(const std::string& label, double value,
               const std::string& color);
  // Extra legend entry without data, for shared bar colors.
  void add_legend(const std::string& label, const std::string& color);

  std::string render() const;
  void save(const std::string& path) const;

 private:
  struct Series {
    int kind;  // 0 line, 1 band, 2 scatter
    std::vector<double> x, y, y2;
    std::string color;
    std::string label;
  };
  struct Bar {
    std::string label;
    double value;
    std::string color;
  };

  int width_, height_;
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<Bar> bars_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

}  // namespace fluidrl
