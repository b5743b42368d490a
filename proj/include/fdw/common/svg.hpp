#pragma once

#include <string>
#include <vector>

namespace fdw::svg {

/// Minimal self-contained SVG bar chart; values are scaled to the tallest
/// bar.
std::string bar_chart(const std::string& title, const std::vector<double>& values,
                      const std::vector<std::string>& labels);

/// Row-major heatmap with a linear white-to-red ramp over [0,1].
std::string heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const std::vector<double>& values);

}  // namespace fdw::svg
