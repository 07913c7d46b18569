#include "doctest.h"

#include <cstdlib>

#include "pinlab/svg.hpp"
#include "support.hpp"

using namespace pinlab;

namespace {

std::vector<ModelAxisScore> sample_scores() {
    return {{"openai/gpt-a", -0.4, -0.9, 0.1, kMissing, kMissing},
            {"anthropic/claude-b", 1.3, 0.8, 1.9, kMissing, kMissing},
            {"local<x>", 0.2, -0.1, 0.6, kMissing, kMissing},
            {"meta/llama-c", -1.1, -1.6, -0.5, kMissing, kMissing}};
}

std::map<std::string, std::string> providers() {
    return {{"openai/gpt-a", "openai"}, {"anthropic/claude-b", "anthropic"}, {"meta/llama-c", "meta"}};
}

}  // namespace

TEST_CASE("ranking chart matches the golden file") {
    auto const svg = render_ranking(sample_scores(), providers());
    auto const path = support::golden("ranking.svg");
    if (std::getenv("PINLAB_BLESS") || !std::filesystem::exists(path)) {
        support::spit(path, svg);
        MESSAGE("wrote " << path.string());
    }
    CHECK(svg == support::slurp(path));
}

TEST_CASE("ranking rows are sorted descending and labels escaped") {
    auto const svg = render_ranking(sample_scores(), providers());
    auto const b = svg.find("anthropic/claude-b"), l = svg.find("local&lt;x&gt;"), a = svg.find("openai/gpt-a"),
               c = svg.find("meta/llama-c");
    REQUIRE(b != std::string::npos);
    REQUIRE(l != std::string::npos);
    CHECK(b < l);
    CHECK(l < a);
    CHECK(a < c);
    CHECK(svg.find("local<x>") == std::string::npos);
    CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("one model renders") {
    auto const svg = render_ranking({{"solo", 0.0, 0.0, 0.0, kMissing, kMissing}}, {});
    CHECK(svg.find("solo") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}

TEST_CASE("scatter and escaping") {
    CHECK(xml_escape("a&b<'\">") == "a&amp;b&lt;&apos;&quot;&gt;");
    CHECK(palette_colour(0) != palette_colour(1));
    auto const svg = render_scatter({{"m1", "g", 0, 1}, {"m2", "g", 1, 0}}, {"t", "x", "y", true, true});
    CHECK(svg.find("<line") != std::string::npos);
    CHECK(render_scatter({}, {}).find("<svg") == 0);
}
