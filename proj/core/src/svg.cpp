#include "forester/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace forester {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                          "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

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

std::string open_svg(const std::string& title) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
                      "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) +
                      " " + num(kHeight) + "\" font-family=\"sans-serif\">\n";
    out += "<rect width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(kWidth / 2) +
           "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
           "</text>\n";
    return out;
}

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
    double from = 0.0;
    double to = 1.0;

    double operator()(double v) const {
        if (hi == lo) return (from + to) / 2.0;
        return from + (v - lo) / (hi - lo) * (to - from);
    }
};

// "nice" tick step covering the range with about 5 ticks
std::vector<double> ticks(double lo, double hi) {
    if (hi <= lo) return {lo};
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12; t += step)
        out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
    return out;
}

std::string axes(const Scale& x, const Scale& y, const std::string& x_label,
                 const std::string& y_label) {
    std::string out;
    const double bottom = kHeight - kMarginBottom;
    out += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(bottom) + "\" x2=\"" +
           num(kWidth - kMarginRight) + "\" y2=\"" + num(bottom) +
           "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(kMarginTop) + "\" x2=\"" +
           num(kMarginLeft) + "\" y2=\"" + num(bottom) + "\" stroke=\"black\"/>\n";
    for (double t : ticks(x.lo, x.hi)) {
        const double px = x(t);
        out += "<line x1=\"" + num(px) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(px) +
               "\" y2=\"" + num(bottom + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(px) + "\" y=\"" + num(bottom + 18) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    for (double t : ticks(y.lo, y.hi)) {
        const double py = y(t);
        out += "<line x1=\"" + num(kMarginLeft - 5) + "\" y1=\"" + num(py) + "\" x2=\"" +
               num(kMarginLeft) + "\" y2=\"" + num(py) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(kMarginLeft - 8) + "\" y=\"" + num(py + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    out += "<text x=\"" + num((kMarginLeft + kWidth - kMarginRight) / 2) + "\" y=\"" +
           num(kHeight - 10) + "\" text-anchor=\"middle\" font-size=\"12\">" +
           escape(x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + num((kMarginTop + bottom) / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
           num((kMarginTop + bottom) / 2) + ")\">" + escape(y_label) + "</text>\n";
    return out;
}

} // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
    std::string out = open_svg(title);
    const std::size_t n = values.size();
    double lo = 0.0, hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1.0;
    Scale x{lo, hi, kMarginLeft + 140.0, kWidth - kMarginRight};
    const double top = kMarginTop;
    const double bottom = kHeight - kMarginBottom;
    const double band = (bottom - top) / std::max<std::size_t>(1, n);

    for (double t : ticks(lo, hi)) {
        out += "<line x1=\"" + num(x(t)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(x(t)) +
               "\" y2=\"" + num(bottom) + "\" stroke=\"#dddddd\"/>\n";
        out += "<text x=\"" + num(x(t)) + "\" y=\"" + num(bottom + 16) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double y0 = top + static_cast<double>(i) * band + band * 0.15;
        const double h = band * 0.7;
        const double x0 = std::min(x(0.0), x(values[i]));
        const double w = std::abs(x(values[i]) - x(0.0));
        out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(w) +
               "\" height=\"" + num(h) + "\" fill=\"" + kPalette[0] + "\"/>\n";
        out += "<text x=\"" + num(kMarginLeft + 134.0) + "\" y=\"" + num(y0 + h / 2 + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + escape(labels[i]) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string svg_grouped_bar_chart(const std::string& title,
                                  const std::vector<std::string>& group_labels,
                                  const std::vector<std::string>& series_labels,
                                  const std::vector<std::vector<double>>& values) {
    std::string out = open_svg(title);
    double lo = 0.0, hi = 0.0;
    for (const auto& row : values)
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi == lo) hi = lo + 1.0;
    const double top = kMarginTop;
    const double bottom = kHeight - kMarginBottom;
    Scale y{lo, hi, bottom, top};
    const std::size_t groups = group_labels.size();
    const std::size_t series = series_labels.size();
    const double band = (kWidth - kMarginLeft - kMarginRight) /
                        std::max<std::size_t>(1, groups);

    for (double t : ticks(lo, hi)) {
        out += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(y(t)) + "\" x2=\"" +
               num(kWidth - kMarginRight) + "\" y2=\"" + num(y(t)) +
               "\" stroke=\"#dddddd\"/>\n";
        out += "<text x=\"" + num(kMarginLeft - 8) + "\" y=\"" + num(y(t) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    for (std::size_t g = 0; g < groups; ++g) {
        const double gx = kMarginLeft + static_cast<double>(g) * band;
        const double bar = band * 0.8 / std::max<std::size_t>(1, series);
        for (std::size_t s = 0; s < series; ++s) {
            const double v = values[s][g];
            const double x0 = gx + band * 0.1 + static_cast<double>(s) * bar;
            const double y0 = std::min(y(0.0), y(v));
            const double h = std::abs(y(v) - y(0.0));
            out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" +
                   num(bar * 0.9) + "\" height=\"" + num(h) + "\" fill=\"" +
                   kPalette[s % 8] + "\"/>\n";
        }
        out += "<text x=\"" + num(gx + band / 2) + "\" y=\"" + num(bottom + 16) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + escape(group_labels[g]) +
               "</text>\n";
    }
    for (std::size_t s = 0; s < series; ++s) {
        const double lx = kWidth - kMarginRight - 110.0;
        const double ly = kMarginTop + static_cast<double>(s) * 16.0;
        out += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 9) +
               "\" width=\"10\" height=\"10\" fill=\"" + kPalette[s % 8] + "\"/>\n";
        out += "<text x=\"" + num(lx + 14) + "\" y=\"" + num(ly) +
               "\" font-size=\"11\">" + escape(series_labels[s]) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series) {
    std::string out = open_svg(title);
    double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
    bool first = true;
    for (const SvgSeries& s : series)
        for (const auto& [px, py] : s.points) {
            if (first) {
                xlo = xhi = px;
                ylo = yhi = py;
                first = false;
            }
            xlo = std::min(xlo, px);
            xhi = std::max(xhi, px);
            ylo = std::min(ylo, py);
            yhi = std::max(yhi, py);
        }
    if (xhi == xlo) xhi = xlo + 1.0;
    if (yhi == ylo) yhi = ylo + 1.0;
    Scale x{xlo, xhi, kMarginLeft, kWidth - kMarginRight};
    Scale y{ylo, yhi, kHeight - kMarginBottom, kMarginTop};
    out += axes(x, y, x_label, y_label);
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string path;
        for (std::size_t i = 0; i < series[s].points.size(); ++i) {
            path += (i == 0 ? "M" : "L") + num(x(series[s].points[i].first)) + " " +
                    num(y(series[s].points[i].second));
        }
        out += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + kPalette[s % 8] +
               "\" stroke-width=\"1.5\"/>\n";
        if (series.size() > 1) {
            const double ly = kMarginTop + static_cast<double>(s) * 16.0 + 8.0;
            out += "<rect x=\"" + num(kWidth - kMarginRight - 130.0) + "\" y=\"" +
                   num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
                   kPalette[s % 8] + "\"/>\n";
            out += "<text x=\"" + num(kWidth - kMarginRight - 114.0) + "\" y=\"" + num(ly) +
                   "\" font-size=\"11\">" + escape(series[s].label) + "</text>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points,
                        bool identity_line) {
    std::string out = open_svg(title);
    double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
    bool first = true;
    for (const auto& [px, py] : points) {
        if (first) {
            xlo = xhi = px;
            ylo = yhi = py;
            first = false;
        }
        xlo = std::min(xlo, px);
        xhi = std::max(xhi, px);
        ylo = std::min(ylo, py);
        yhi = std::max(yhi, py);
    }
    if (identity_line) {
        const double lo = std::min(xlo, ylo);
        const double hi = std::max(xhi, yhi);
        xlo = ylo = lo;
        xhi = yhi = hi;
    }
    if (xhi == xlo) xhi = xlo + 1.0;
    if (yhi == ylo) yhi = ylo + 1.0;
    Scale x{xlo, xhi, kMarginLeft, kWidth - kMarginRight};
    Scale y{ylo, yhi, kHeight - kMarginBottom, kMarginTop};
    out += axes(x, y, x_label, y_label);
    if (identity_line)
        out += "<line x1=\"" + num(x(xlo)) + "\" y1=\"" + num(y(xlo)) + "\" x2=\"" +
               num(x(xhi)) + "\" y2=\"" + num(y(xhi)) +
               "\" stroke=\"#aaaaaa\" stroke-dasharray=\"4 3\"/>\n";
    for (const auto& [px, py] : points)
        out += "<circle cx=\"" + num(x(px)) + "\" cy=\"" + num(y(py)) +
               "\" r=\"2.5\" fill=\"" + kPalette[0] + "\" fill-opacity=\"0.6\"/>\n";
    out += "</svg>\n";
    return out;
}

} // namespace forester
