#pragma once
//
// Minimal static SVG output: stacked line panels over a shared date axis and
// a correlation heatmap. Each plot has a sidecar CSV holding its data.
//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "nci/core.hpp"

namespace nci::plot {

struct Line {
    std::string name;
    std::vector<double> values;  // NaN = gap
};

inline std::string xml_escape(const std::string& s) {
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

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// One panel per line, each scaled to its own range.
inline void line_panels(std::ostream& out, const std::string& title, const std::vector<Date>& dates,
                        const std::vector<Line>& lines) {
    const double width = 900, panel = 160, left = 70, right = 20, top = 40, gap = 30;
    const double height = top + double(lines.size()) * (panel + gap) + 30;
    const double plot_w = width - left - right;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    const auto n = dates.size();
    auto x_of = [&](std::size_t i) { return left + (n > 1 ? plot_w * double(i) / double(n - 1) : plot_w / 2); };
    for (std::size_t p = 0; p < lines.size(); ++p) {
        const double y0 = top + double(p) * (panel + gap);
        double lo = INFINITY, hi = -INFINITY;
        for (double v : lines[p].values)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi == lo) hi = lo + 1;
        auto y_of = [&](double v) { return y0 + panel - panel * (v - lo) / (hi - lo); };
        out << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\"" << panel
            << "\" fill=\"none\" stroke=\"#999\"/>\n"
            << "<text x=\"" << left + 4 << "\" y=\"" << y0 + 13 << "\">" << xml_escape(lines[p].name) << "</text>\n"
            << "<text x=\"" << left - 4 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << num(hi) << "</text>\n"
            << "<text x=\"" << left - 4 << "\" y=\"" << y0 + panel << "\" text-anchor=\"end\">" << num(lo)
            << "</text>\n";
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < n && i < lines[p].values.size(); ++i) {
            const double v = lines[p].values[i];
            if (!std::isfinite(v)) {
                pen = false;
                continue;
            }
            path += (pen ? " L" : " M") + num(x_of(i)) + " " + num(y_of(v));
            pen = true;
        }
        out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colors[p % 6] << "\" stroke-width=\"1\"/>\n";
    }
    if (n > 0) {
        const double yb = top + double(lines.size()) * (panel + gap) - gap + 14;
        out << "<text x=\"" << left << "\" y=\"" << yb << "\">" << dates.front().str() << "</text>\n"
            << "<text x=\"" << width - right << "\" y=\"" << yb << "\" text-anchor=\"end\">" << dates.back().str()
            << "</text>\n";
    }
    out << "</svg>\n";
}

/// Square matrix of values in [-1, 1], blue (negative) to red (positive).
inline void heatmap(std::ostream& out, const std::string& title, const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& r) {
    const double cell = 60, left = 160, top = 50;
    const auto k = names.size();
    const double width = left + cell * double(k) + 20, height = top + cell * double(k) + 140;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
    auto color = [](double v) {
        v = std::clamp(std::isfinite(v) ? v : 0.0, -1.0, 1.0);
        const int fade = int(std::lround(255 * (1 - std::abs(v))));
        char buf[16];
        if (v >= 0) std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
        else std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < k; ++i) {
        const double y = top + cell * double(i);
        out << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
            << xml_escape(names[i]) << "</text>\n";
        for (std::size_t j = 0; j < k; ++j) {
            const double x = left + cell * double(j);
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << color(r[i][j]) << "\" stroke=\"white\"/>\n"
                << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\">"
                << num(r[i][j]) << "</text>\n";
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        const double x = left + cell * double(j) + cell / 2, y = top + cell * double(k) + 8;
        out << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(60 " << x << " " << y << ")\">"
            << xml_escape(names[j]) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace nci::plot
