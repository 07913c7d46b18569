#include "doctest.h"

#include "pinlab/errors.hpp"
#include "pinlab/itembank.hpp"
#include "support.hpp"

using namespace pinlab;

namespace {

std::size_t occurrences(std::string const& hay, std::string const& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

std::string bank_with_positions(std::initializer_list<int> positions) {
    std::string s = "[questionnaire]\nid = Q\nabbrev = Q\nfull_name = Q\nscale_min = 1\nscale_max = 5\n";
    int i = 0;
    for (int p : positions)
        s += "\n[item]\nid = Q_" + std::to_string(++i) + "\nposition = " + std::to_string(p) + "\ntext = item " +
             std::to_string(i) + "\n";
    return s;
}

}  // namespace

TEST_CASE("minimal bank") {
    auto const b = load_item_bank(support::fixture("minimal.bank"));
    REQUIRE(b.questionnaires().size() == 1);
    auto const& q = b.questionnaire("IMP");
    CHECK(q.scale.min_value == 1);
    CHECK(q.scale.max_value == 4);
    CHECK_FALSE(q.pre_prompt.has_value());
    CHECK(q.items.at(0).text == "I often act on the spur of the moment");
}

TEST_CASE("SWLS bank") {
    auto const b = load_item_bank(support::fixture("swls.bank"));
    auto const& q = b.questionnaire("SWLS");
    CHECK(q.items.size() == 5);
    CHECK(q.scale.min_value == 1);
    CHECK(q.scale.max_value == 7);
    CHECK(q.scale.anchor_labels.size() == 3);
    CHECK(q.pre_prompt->find('\n') != std::string::npos);
    auto [item, owner] = b.find_item("SWLS_3");
    REQUIRE(item);
    CHECK(owner->questionnaire_id == "SWLS");
    CHECK(b.find_item("nope").first == nullptr);
    CHECK_THROWS_AS(b.questionnaire("nope"), LookupError);
}

TEST_CASE("positions must be contiguous from 1") {
    CHECK_NOTHROW(parse_item_bank(bank_with_positions({1, 2, 3})));
    CHECK_THROWS_AS(parse_item_bank(bank_with_positions({1, 2, 4})), ValidationError);
    CHECK_THROWS_AS(parse_item_bank(bank_with_positions({1, 1})), ValidationError);
}

TEST_CASE("invalid scale and duplicate ids are rejected") {
    std::string bad_scale = bank_with_positions({1});
    bad_scale.replace(bad_scale.find("scale_max = 5"), 13, "scale_max = 1");
    CHECK_THROWS_AS(parse_item_bank(bad_scale), ValidationError);

    std::string dup = bank_with_positions({1, 2});
    dup.replace(dup.find("id = Q_2"), 8, "id = Q_1");
    CHECK_THROWS_AS(parse_item_bank(dup), ValidationError);
}

TEST_CASE("parse errors carry the line number") {
    std::string const text = "[questionnaire]\nid = Q\nthis line is junk\n";
    try {
        parse_item_bank(text);
        FAIL("expected ParseError");
    } catch (ParseError const& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("serialize round-trips") {
    for (auto const* name : {"minimal.bank", "swls.bank"}) {
        auto const b = load_item_bank(support::fixture(name));
        CHECK(parse_item_bank(serialize_item_bank(b)) == b);
    }
}

TEST_CASE("rendered prompts match goldens") {
    auto const b = load_item_bank(support::fixture("swls.bank"));
    auto const& q = b.questionnaire("SWLS");
    struct {
        ConditionId id;
        char const* file;
    } const cases[] = {{ConditionId::neutral, "prompt_neutral.txt"},
                       {ConditionId::llm_analog, "prompt_llm_analog.txt"},
                       {ConditionId::human_simulation, "prompt_human_simulation.txt"}};
    for (auto const& c : cases) {
        CAPTURE(c.file);
        CHECK(render_prompt(q.items[0], q, PromptCondition::bundled(c.id)) == support::slurp(support::golden(c.file)));
    }

    auto const m = load_item_bank(support::fixture("minimal.bank"));
    auto const& mq = m.questionnaire("IMP");
    auto const p = render_prompt(mq.items[0], mq, PromptCondition::bundled(ConditionId::neutral));
    CHECK(p == support::slurp(support::golden("prompt_neutral_no_preprompt.txt")));
    CHECK(p.find("Questionnaire Instructions") == std::string::npos);
}

TEST_CASE("prompt content properties") {
    auto const b = load_item_bank(support::fixture("swls.bank"));
    auto const& q = b.questionnaire("SWLS");
    for (auto id : {ConditionId::neutral, ConditionId::llm_analog, ConditionId::human_simulation})
        for (auto const& it : q.items) {
            auto const p = render_prompt(it, q, PromptCondition::bundled(id));
            CHECK(occurrences(p, it.text) == 1);
            CHECK(p.find('<') == std::string::npos);
        }
    auto const hs = render_prompt(q.items[0], q, PromptCondition::bundled(ConditionId::human_simulation));
    CHECK(hs.find("prototypical human") != std::string::npos);
}

TEST_CASE("custom templates are checked") {
    auto const b = load_item_bank(support::fixture("minimal.bank"));
    auto const& q = b.questionnaire("IMP");
    auto const t = PromptCondition::custom(ConditionId::neutral, "<scale>\n<item>");
    CHECK(render_prompt(q.items[0], q, t) == "1--4\n" + q.items[0].text);
    CHECK_THROWS_AS(PromptCondition::custom(ConditionId::neutral, "<scale> <item> <mood>"), RenderError);
    CHECK_THROWS_AS(PromptCondition::custom(ConditionId::neutral, "<item> <item> <scale>"), RenderError);
}

TEST_CASE("condition names") {
    CHECK(to_string(ConditionId::llm_analog) == "llm_analog");
    CHECK(parse_condition("human_simulation") == ConditionId::human_simulation);
    CHECK_FALSE(parse_condition("other").has_value());
}
