#include "fdw/common/svg.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace fdw::svg {

namespace {

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

}  // namespace

std::string bar_chart(const std::string& title, const std::vector<double>& values,
                      const std::vector<std::string>& labels) {
  if (values.empty()) throw std::invalid_argument("svg: empty bar chart");
  if (!labels.empty() && labels.size() != values.size())
    throw std::invalid_argument("svg: label/value count mismatch");
  const int bar_w = 24, gap = 6, chart_h = 200, margin = 40;
  const int width = margin * 2 + (int)values.size() * (bar_w + gap);
  const int height = chart_h + margin * 2;
  const double peak = std::max(*std::max_element(values.begin(), values.end()), 1e-12);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int h = (int)(values[i] / peak * chart_h);
    const int x = margin + (int)i * (bar_w + gap);
    const int y = margin + chart_h - h;
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w << "\" height=\"" << h
        << "\" fill=\"#b03a2e\"/>\n";
    if (!labels.empty())
      out << "<text x=\"" << x << "\" y=\"" << margin + chart_h + 14 << "\" font-size=\"9\">"
          << escape(labels[i]) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const std::vector<double>& values) {
  const std::size_t rows = row_labels.size(), cols = col_labels.size();
  if (rows == 0 || cols == 0 || values.size() != rows * cols)
    throw std::invalid_argument("svg: heatmap shape mismatch");
  const int cell = 18, left = 90, top = 40;
  const int width = left + (int)cols * cell + 10;
  const int height = top + (int)rows * cell + 30;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<text x=\"10\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (std::size_t r = 0; r < rows; ++r) {
    out << "<text x=\"4\" y=\"" << top + (int)r * cell + 13 << "\" font-size=\"9\">"
        << escape(row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = std::clamp(values[r * cols + c], 0.0, 1.0);
      const int g = 255 - (int)(v * 255.0);
      out << "<rect x=\"" << left + (int)c * cell << "\" y=\"" << top + (int)r * cell
          << "\" width=\"" << cell - 1 << "\" height=\"" << cell - 1 << "\" fill=\"rgb(255,"
          << g << "," << g << ")\"/>\n";
    }
  }
  for (std::size_t c = 0; c < cols; ++c)
    out << "<text x=\"" << left + (int)c * cell << "\" y=\"" << top + (int)rows * cell + 14
        << "\" font-size=\"8\">" << escape(col_labels[c]) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace fdw::svg
