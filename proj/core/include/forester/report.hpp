#pragma once

#include <string>

#include "forester/train.hpp"

namespace forester {

struct ReportSpec {
    enum class Format { Markdown, Html };

    std::string path;
    Format format = Format::Markdown;
    int top_n = 10;
    std::string sort_metric;  // empty = the output's training sort metric
    std::string split = "test";
};

// Writes the report to spec.path and returns that path. Markdown output
// places charts in a "<stem>_assets" sidecar directory; HTML output is a
// single self-contained file with inline SVG.
std::string generate_report(const TrainOutput& output, const ReportSpec& spec);

} // namespace forester
