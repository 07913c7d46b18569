#include "pinlab/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace pinlab {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string_view palette_colour(std::size_t i) noexcept {
    static constexpr std::array<std::string_view, 10> colours{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colours[i % colours.size()];
}

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x == 0 ? 0.0 : x);
    return buf;
}

struct Range {
    double lo = 0, hi = 1;

    void pad() {
        if (!(hi > lo)) {
            lo -= 1;
            hi += 1;
        }
        double const p = 0.05 * (hi - lo);
        lo -= p;
        hi += p;
    }
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::map<std::string, std::string> group_colours(std::set<std::string> const& groups) {
    std::map<std::string, std::string> out;
    std::size_t i = 0;
    for (auto const& g : groups) out[g] = std::string(palette_colour(i++));
    return out;
}

void legend(std::ostringstream& s, std::map<std::string, std::string> const& colours, double x, double y) {
    for (auto const& [g, c] : colours) {
        s << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"4\" fill=\"" << c << "\"/>\n";
        s << "<text x=\"" << fmt(x + 8) << "\" y=\"" << fmt(y + 4) << "\" font-size=\"10\">" << xml_escape(g)
          << "</text>\n";
        y += 14;
    }
}

}  // namespace

std::string render_ranking(std::vector<ModelAxisScore> scores, std::map<std::string, std::string> const& provider_of,
                           std::string_view title) {
    std::stable_sort(scores.begin(), scores.end(), [](auto const& a, auto const& b) { return a.pc1 > b.pc1; });

    std::set<std::string> groups;
    auto group = [&](std::string const& model) {
        auto it = provider_of.find(model);
        return it == provider_of.end() || it->second.empty() ? std::string("other") : it->second;
    };
    for (auto const& s : scores) groups.insert(group(s.model));
    auto const colours = group_colours(groups);

    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (auto const& s : scores)
        for (double v : {s.pc1, s.ci_low, s.ci_high})
            if (std::isfinite(v)) {
                r.lo = std::min(r.lo, v);
                r.hi = std::max(r.hi, v);
            }
    if (!std::isfinite(r.lo)) r = {-1, 1};
    r.pad();

    double const left = 220, plot_w = 400, top = 40, row_h = 14;
    double const height = top + row_h * double(scores.size()) + 40;
    double const width = left + plot_w + 140;

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" font-family=\"sans-serif\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << fmt(left) << "\" y=\"20\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
    if (r.lo < 0 && r.hi > 0) {
        double const x0 = r.map(0, left, left + plot_w);
        s << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(top - 6) << "\" x2=\"" << fmt(x0) << "\" y2=\""
          << fmt(top + row_h * double(scores.size())) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto const& m = scores[i];
        double const y = top + row_h * double(i) + row_h / 2;
        auto const& colour = colours.at(group(m.model));
        s << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y + 3) << "\" font-size=\"10\" text-anchor=\"end\">"
          << xml_escape(m.model) << "</text>\n";
        if (std::isfinite(m.ci_low) && std::isfinite(m.ci_high))
            s << "<line x1=\"" << fmt(r.map(m.ci_low, left, left + plot_w)) << "\" y1=\"" << fmt(y) << "\" x2=\""
              << fmt(r.map(m.ci_high, left, left + plot_w)) << "\" y2=\"" << fmt(y) << "\" stroke=\"" << colour
              << "\"/>\n";
        if (std::isfinite(m.pc1))
            s << "<circle cx=\"" << fmt(r.map(m.pc1, left, left + plot_w)) << "\" cy=\"" << fmt(y)
              << "\" r=\"3.5\" fill=\"" << colour << "\"/>\n";
    }
    double const axis_y = top + row_h * double(scores.size()) + 8;
    s << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(left + plot_w) << "\" y2=\""
      << fmt(axis_y) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double const v = r.lo + (r.hi - r.lo) * t / 4.0;
        double const x = r.map(v, left, left + plot_w);
        s << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(axis_y + 14) << "\" font-size=\"9\" text-anchor=\"middle\">"
          << fmt(v) << "</text>\n";
    }
    legend(s, colours, left + plot_w + 20, top);
    s << "</svg>\n";
    return s.str();
}

std::string render_scatter(std::vector<ScatterPoint> const& points, ScatterOptions const& options) {
    std::set<std::string> groups;
    for (auto const& p : points) groups.insert(p.group.empty() ? "other" : p.group);
    auto const colours = group_colours(groups);

    Range rx{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}, ry = rx;
    for (auto const& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
        rx.lo = std::min(rx.lo, p.x);
        rx.hi = std::max(rx.hi, p.x);
        ry.lo = std::min(ry.lo, p.y);
        ry.hi = std::max(ry.hi, p.y);
    }
    if (!std::isfinite(rx.lo)) rx = ry = {-1, 1};
    if (options.identity_line) {
        rx.lo = ry.lo = std::min(rx.lo, ry.lo);
        rx.hi = ry.hi = std::max(rx.hi, ry.hi);
    }
    rx.pad();
    ry.pad();

    double const left = 60, top = 40, w = 400, h = 400;
    auto X = [&](double v) { return rx.map(v, left, left + w); };
    auto Y = [&](double v) { return ry.map(v, top + h, top); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(left + w + 140) << "\" height=\""
      << fmt(top + h + 50) << "\" font-family=\"sans-serif\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << fmt(left) << "\" y=\"20\" font-size=\"13\">" << xml_escape(options.title) << "</text>\n";
    s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (options.zero_line && ry.lo < 0 && ry.hi > 0)
        s << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(Y(0)) << "\" x2=\"" << fmt(left + w) << "\" y2=\""
          << fmt(Y(0)) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    if (options.identity_line)
        s << "<line x1=\"" << fmt(X(rx.lo)) << "\" y1=\"" << fmt(Y(rx.lo)) << "\" x2=\"" << fmt(X(rx.hi))
          << "\" y2=\"" << fmt(Y(rx.hi)) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    for (auto const& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
        s << "<circle cx=\"" << fmt(X(p.x)) << "\" cy=\"" << fmt(Y(p.y)) << "\" r=\"3.5\" fill=\""
          << colours.at(p.group.empty() ? "other" : p.group) << "\"><title>" << xml_escape(p.label)
          << "</title></circle>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        double const vx = rx.lo + (rx.hi - rx.lo) * t / 4.0, vy = ry.lo + (ry.hi - ry.lo) * t / 4.0;
        s << "<text x=\"" << fmt(X(vx)) << "\" y=\"" << fmt(top + h + 14) << "\" font-size=\"9\" text-anchor=\"middle\">"
          << fmt(vx) << "</text>\n";
        s << "<text x=\"" << fmt(left - 4) << "\" y=\"" << fmt(Y(vy) + 3) << "\" font-size=\"9\" text-anchor=\"end\">"
          << fmt(vy) << "</text>\n";
    }
    s << "<text x=\"" << fmt(left + w / 2) << "\" y=\"" << fmt(top + h + 34)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << xml_escape(options.x_label) << "</text>\n";
    s << "<text x=\"14\" y=\"" << fmt(top + h / 2) << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fmt(top + h / 2) << ")\">" << xml_escape(options.y_label) << "</text>\n";
    legend(s, colours, left + w + 20, top);
    s << "</svg>\n";
    return s.str();
}

}  // namespace pinlab
