#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pinlab/axis.hpp"

namespace pinlab {

/// Escape &, <, >, " and ' for XML text and attributes.
std::string xml_escape(std::string_view s);

/// Fixed palette colour for the i-th group.
std::string_view palette_colour(std::size_t i) noexcept;

/// Horizontal ranked dot-and-whisker chart, descending by pc1, coloured by
/// provider (`provider_of` maps model slug -> provider; missing -> "other").
std::string render_ranking(std::vector<ModelAxisScore> scores, std::map<std::string, std::string> const& provider_of,
                           std::string_view title = "PC1 score (95% bootstrap CI)");

struct ScatterPoint {
    std::string label;
    std::string group;
    double x = 0;
    double y = 0;
};

struct ScatterOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool identity_line = false;
    bool zero_line = false;
};

std::string render_scatter(std::vector<ScatterPoint> const& points, ScatterOptions const& options);

}  // namespace pinlab
