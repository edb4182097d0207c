#pragma once

#include <string>
#include <utility>
#include <vector>

namespace forester {

// Small deterministic SVG renderers for the report. All coordinates are
// formatted with fixed precision so output is byte-stable.

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

// values[series][group]
std::string svg_grouped_bar_chart(const std::string& title,
                                  const std::vector<std::string>& group_labels,
                                  const std::vector<std::string>& series_labels,
                                  const std::vector<std::vector<double>>& values);

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series);

std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points,
                        bool identity_line);

} // namespace forester
