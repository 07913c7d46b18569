#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pinlab {

struct ResponseScale {
    int min_value = 1;
    int max_value = 5;
    /// Ordered (value, label) pairs; optional verbal anchors.
    std::vector<std::pair<int, std::string>> anchor_labels;

    bool contains(long long v) const noexcept { return v >= min_value && v <= max_value; }
    double midpoint() const noexcept { return 0.5 * (min_value + max_value); }
    int span() const noexcept { return max_value - min_value; }

    friend bool operator==(ResponseScale const&, ResponseScale const&) = default;
};

struct Item {
    std::string item_id;
    std::string questionnaire_id;
    std::string text;
    int position = 0;

    friend bool operator==(Item const&, Item const&) = default;
};

struct Questionnaire {
    std::string questionnaire_id;
    std::string abbrev;
    std::string full_name;
    std::string domain_tag;
    std::optional<std::string> pre_prompt;
    ResponseScale scale;
    std::vector<Item> items;

    friend bool operator==(Questionnaire const&, Questionnaire const&) = default;
};

/// Validated, immutable collection of questionnaires.
class ItemBank {
public:
    ItemBank() = default;
    /// Validates every invariant; throws ValidationError naming the field.
    explicit ItemBank(std::vector<Questionnaire> questionnaires);

    std::vector<Questionnaire> const& questionnaires() const noexcept { return questionnaires_; }
    Questionnaire const& questionnaire(std::string_view id) const;
    Questionnaire const* find_questionnaire(std::string_view id) const noexcept;
    /// Item and its owning questionnaire; nullptr pair when unknown.
    std::pair<Item const*, Questionnaire const*> find_item(std::string_view item_id) const noexcept;
    std::size_t item_count() const noexcept;

    friend bool operator==(ItemBank const&, ItemBank const&) = default;

private:
    std::vector<Questionnaire> questionnaires_;
};

enum class ConditionId { neutral, llm_analog, human_simulation };

std::string_view to_string(ConditionId c) noexcept;
std::optional<ConditionId> parse_condition(std::string_view s) noexcept;

struct PromptCondition {
    ConditionId condition_id = ConditionId::neutral;
    std::string template_text;

    /// One of the three bundled templates.
    static PromptCondition bundled(ConditionId id);
    /// A user-supplied template; validated for placeholder counts.
    static PromptCondition custom(ConditionId id, std::string template_text);
};

/// Parse the line-oriented bank format. Throws ParseError (with line) or ValidationError.
ItemBank parse_item_bank(std::string_view text);
ItemBank load_item_bank(std::filesystem::path const& path);

/// Canonical text form; parse_item_bank(serialize_item_bank(b)) == b.
std::string serialize_item_bank(ItemBank const& bank);

/// "min--max" followed by one "value = label" line per anchor.
std::string render_scale(ResponseScale const& scale);

std::string render_prompt(Item const& item, Questionnaire const& questionnaire, PromptCondition const& condition);

}  // namespace pinlab
