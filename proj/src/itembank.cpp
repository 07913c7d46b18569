#include "pinlab/itembank.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pinlab/errors.hpp"

namespace pinlab {

namespace {

#include "prompt_templates.inc"

constexpr std::string_view kTripleQuote = R"(""")";

std::string_view trim(std::string_view s) {
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto const e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

int parse_int(std::string_view v, std::size_t line, std::string_view key) {
    int out = 0;
    auto const* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("expected integer for '" + std::string(key) + "', got '" + std::string(v) + "'", line);
    return out;
}

struct Field {
    std::string value;
    std::size_t line;
};

struct Section {
    enum Kind { questionnaire, item } kind;
    std::size_t line;
    std::multimap<std::string, Field> fields;

    Field const* get(std::string const& key) const {
        auto it = fields.find(key);
        return it == fields.end() ? nullptr : &it->second;
    }
    Field const& require(std::string const& key) const {
        if (auto const* f = get(key)) return *f;
        throw ParseError("missing required key '" + key + "'", line);
    }
};

std::vector<Section> lex(std::string_view text) {
    static std::set<std::string> const questionnaire_keys = {"id",        "abbrev",    "full_name", "domain",
                                                             "scale_min", "scale_max", "anchor",    "pre_prompt"};
    static std::set<std::string> const item_keys = {"id", "questionnaire", "position", "text"};

    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= text.size();) {
        auto const nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }

    std::vector<Section> sections;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::size_t const lineno = i + 1;
        auto const line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line == "[questionnaire]")
                sections.push_back({Section::questionnaire, lineno, {}});
            else if (line == "[item]")
                sections.push_back({Section::item, lineno, {}});
            else
                throw ParseError("unknown section header " + std::string(line), lineno);
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
        if (sections.empty()) throw ParseError("field outside of a section", lineno);
        std::string const key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));

        auto& sec = sections.back();
        auto const& allowed = sec.kind == Section::questionnaire ? questionnaire_keys : item_keys;
        if (!allowed.contains(key)) throw ParseError("unknown key '" + key + "'", lineno);
        if (key != "anchor" && sec.get(key)) throw ParseError("duplicate key '" + key + "'", lineno);

        std::string full;
        if (value.starts_with(kTripleQuote)) {
            auto rest = value.substr(kTripleQuote.size());
            if (rest.size() >= kTripleQuote.size() && rest.ends_with(kTripleQuote)) {
                full = rest.substr(0, rest.size() - kTripleQuote.size());
            } else {
                if (!trim(rest).empty()) throw ParseError("text after opening triple quote", lineno);
                std::vector<std::string_view> body;
                std::size_t j = i + 1;
                for (; j < lines.size(); ++j) {
                    auto raw = lines[j];
                    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
                    if (trim(raw) == kTripleQuote) break;
                    body.push_back(raw);
                }
                if (j == lines.size()) throw ParseError("unterminated triple-quoted value", lineno);
                for (std::size_t k = 0; k < body.size(); ++k) {
                    if (k) full += '\n';
                    full += body[k];
                }
                i = j;
            }
        } else {
            full = value;
        }
        sec.fields.emplace(key, Field{std::move(full), lineno});
    }
    return sections;
}

void validate_questionnaire(Questionnaire& q) {
    if (q.questionnaire_id.empty()) throw ValidationError("questionnaire_id", "must be non-empty");
    auto const& s = q.scale;
    if (!(s.min_value < s.max_value))
        throw ValidationError("scale", q.questionnaire_id + ": min_value must be below max_value");
    std::set<int> seen;
    for (auto const& [v, label] : s.anchor_labels) {
        if (v < s.min_value || v > s.max_value)
            throw ValidationError("anchor_labels", q.questionnaire_id + ": anchor " + std::to_string(v) + " outside scale");
        if (!seen.insert(v).second)
            throw ValidationError("anchor_labels", q.questionnaire_id + ": duplicate anchor " + std::to_string(v));
    }
    std::sort(q.scale.anchor_labels.begin(), q.scale.anchor_labels.end());
    if (q.items.empty()) throw ValidationError("items", q.questionnaire_id + ": at least one item required");
    std::stable_sort(q.items.begin(), q.items.end(), [](Item const& a, Item const& b) { return a.position < b.position; });
    for (std::size_t k = 0; k < q.items.size(); ++k) {
        auto const& it = q.items[k];
        if (it.questionnaire_id != q.questionnaire_id)
            throw ValidationError("questionnaire_id", it.item_id + " does not reference " + q.questionnaire_id);
        if (it.text.empty()) throw ValidationError("text", it.item_id + ": item text must be non-empty");
        if (it.position != int(k) + 1)
            throw ValidationError("position", q.questionnaire_id + ": positions must form 1.." +
                                                  std::to_string(q.items.size()) + ", found " +
                                                  std::to_string(it.position) + " at slot " + std::to_string(k + 1));
    }
}

}  // namespace

ItemBank::ItemBank(std::vector<Questionnaire> questionnaires) : questionnaires_(std::move(questionnaires)) {
    std::set<std::string> ids, abbrevs, item_ids;
    for (auto& q : questionnaires_) {
        validate_questionnaire(q);
        if (!ids.insert(q.questionnaire_id).second)
            throw ValidationError("questionnaire_id", "duplicate questionnaire '" + q.questionnaire_id + "'");
        // One version per instrument: a second questionnaire with the same abbreviation is rejected.
        if (!q.abbrev.empty() && !abbrevs.insert(lower(q.abbrev)).second)
            throw ValidationError("abbrev", "duplicate instrument '" + q.abbrev + "'");
        for (auto const& it : q.items) {
            if (it.item_id.empty()) throw ValidationError("item_id", "must be non-empty");
            if (!item_ids.insert(it.item_id).second)
                throw ValidationError("item_id", "duplicate item id '" + it.item_id + "'");
        }
    }
}

Questionnaire const& ItemBank::questionnaire(std::string_view id) const {
    if (auto const* q = find_questionnaire(id)) return *q;
    throw LookupError("unknown questionnaire '" + std::string(id) + "'");
}

Questionnaire const* ItemBank::find_questionnaire(std::string_view id) const noexcept {
    for (auto const& q : questionnaires_)
        if (q.questionnaire_id == id) return &q;
    return nullptr;
}

std::pair<Item const*, Questionnaire const*> ItemBank::find_item(std::string_view item_id) const noexcept {
    for (auto const& q : questionnaires_)
        for (auto const& it : q.items)
            if (it.item_id == item_id) return {&it, &q};
    return {nullptr, nullptr};
}

std::size_t ItemBank::item_count() const noexcept {
    std::size_t n = 0;
    for (auto const& q : questionnaires_) n += q.items.size();
    return n;
}

std::string_view to_string(ConditionId c) noexcept {
    switch (c) {
    case ConditionId::neutral: return "neutral";
    case ConditionId::llm_analog: return "llm_analog";
    case ConditionId::human_simulation: return "human_simulation";
    }
    return "neutral";
}

std::optional<ConditionId> parse_condition(std::string_view s) noexcept {
    if (s == "neutral") return ConditionId::neutral;
    if (s == "llm_analog") return ConditionId::llm_analog;
    if (s == "human_simulation") return ConditionId::human_simulation;
    return std::nullopt;
}

namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

void check_template(std::string_view t) {
    if (count_occurrences(t, "<scale>") != 1) throw RenderError("template must contain <scale> exactly once");
    if (count_occurrences(t, "<item>") != 1) throw RenderError("template must contain <item> exactly once");
    for (std::size_t pos = t.find('<'); pos != std::string_view::npos; pos = t.find('<', pos + 1)) {
        auto const close = t.find('>', pos);
        if (close == std::string_view::npos) break;
        auto const name = t.substr(pos + 1, close - pos - 1);
        bool const token = !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
            return std::islower(c) || c == '-' || c == '_';
        });
        if (token && name != "scale" && name != "item" && name != "pre-prompt")
            throw RenderError("unknown placeholder <" + std::string(name) + ">");
    }
}

}  // namespace

PromptCondition PromptCondition::bundled(ConditionId id) {
    switch (id) {
    case ConditionId::neutral: return {id, kNeutralTemplate};
    case ConditionId::llm_analog: return {id, kLlmAnalogTemplate};
    case ConditionId::human_simulation: return {id, kHumanSimulationTemplate};
    }
    return {id, kNeutralTemplate};
}

PromptCondition PromptCondition::custom(ConditionId id, std::string template_text) {
    check_template(template_text);
    return {id, std::move(template_text)};
}

std::string render_scale(ResponseScale const& scale) {
    std::string out = std::to_string(scale.min_value) + "--" + std::to_string(scale.max_value);
    for (auto const& [v, label] : scale.anchor_labels) out += "\n" + std::to_string(v) + " = " + label;
    return out;
}

std::string render_prompt(Item const& item, Questionnaire const& questionnaire, PromptCondition const& condition) {
    std::string_view t = condition.template_text;
    check_template(t);

    std::string body;
    if (questionnaire.pre_prompt) {
        body = t;
    } else {
        // Drop every line that carries the pre-prompt placeholder.
        for (std::size_t start = 0; start < t.size();) {
            auto nl = t.find('\n', start);
            auto const end = nl == std::string_view::npos ? t.size() : nl + 1;
            auto const line = t.substr(start, end - start);
            if (line.find("<pre-prompt>") == std::string_view::npos) body += line;
            start = end;
        }
    }

    std::string const scale = render_scale(questionnaire.scale);
    std::string out;
    out.reserve(body.size() + item.text.size() + scale.size());
    std::string_view const view = body;
    for (std::size_t i = 0; i < view.size();) {
        auto const rest = view.substr(i);
        if (rest.starts_with("<scale>")) {
            out += scale;
            i += 7;
        } else if (rest.starts_with("<item>")) {
            out += item.text;
            i += 6;
        } else if (rest.starts_with("<pre-prompt>")) {
            out += *questionnaire.pre_prompt;
            i += 12;
        } else {
            out += view[i++];
        }
    }
    return out;
}

ItemBank parse_item_bank(std::string_view text) {
    auto const sections = lex(text);
    std::vector<Questionnaire> qs;
    std::map<std::string, std::size_t> index;
    for (auto const& sec : sections) {
        if (sec.kind == Section::questionnaire) {
            Questionnaire q;
            q.questionnaire_id = sec.require("id").value;
            if (auto const* f = sec.get("abbrev")) q.abbrev = f->value;
            if (auto const* f = sec.get("full_name")) q.full_name = f->value;
            if (auto const* f = sec.get("domain")) q.domain_tag = f->value;
            if (auto const* f = sec.get("pre_prompt")) q.pre_prompt = f->value;
            auto const& mn = sec.require("scale_min");
            auto const& mx = sec.require("scale_max");
            q.scale.min_value = parse_int(mn.value, mn.line, "scale_min");
            q.scale.max_value = parse_int(mx.value, mx.line, "scale_max");
            auto [lo, hi] = sec.fields.equal_range("anchor");
            for (auto it = lo; it != hi; ++it) {
                auto const& f = it->second;
                auto const colon = f.value.find(':');
                if (colon == std::string::npos) throw ParseError("anchor must be 'value: label'", f.line);
                int const v = parse_int(trim(std::string_view(f.value).substr(0, colon)), f.line, "anchor");
                q.scale.anchor_labels.emplace_back(v, std::string(trim(std::string_view(f.value).substr(colon + 1))));
            }
            if (index.contains(q.questionnaire_id))
                throw ValidationError("questionnaire_id", "duplicate questionnaire '" + q.questionnaire_id + "'");
            index[q.questionnaire_id] = qs.size();
            qs.push_back(std::move(q));
        } else {
            if (qs.empty()) throw ParseError("[item] before any [questionnaire]", sec.line);
            Item it;
            it.item_id = sec.require("id").value;
            it.text = sec.require("text").value;
            auto const& pos = sec.require("position");
            it.position = parse_int(pos.value, pos.line, "position");
            if (auto const* f = sec.get("questionnaire")) {
                auto found = index.find(f->value);
                if (found == index.end()) throw ParseError("item references unknown questionnaire '" + f->value + "'", f->line);
                it.questionnaire_id = f->value;
                qs[found->second].items.push_back(std::move(it));
            } else {
                it.questionnaire_id = qs.back().questionnaire_id;
                qs.back().items.push_back(std::move(it));
            }
        }
    }
    return ItemBank(std::move(qs));
}

ItemBank load_item_bank(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open item bank " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_item_bank(ss.str());
}

namespace {

void emit(std::string& out, std::string_view key, std::string_view value) {
    bool const multiline = value.find('\n') != std::string_view::npos || trim(value) != value;
    if (multiline) {
        out += std::string(key) + " = \"\"\"\n" + std::string(value) + "\n\"\"\"\n";
    } else {
        out += std::string(key) + " = " + std::string(value) + "\n";
    }
}

}  // namespace

std::string serialize_item_bank(ItemBank const& bank) {
    std::string out;
    for (auto const& q : bank.questionnaires()) {
        out += "[questionnaire]\n";
        emit(out, "id", q.questionnaire_id);
        if (!q.abbrev.empty()) emit(out, "abbrev", q.abbrev);
        if (!q.full_name.empty()) emit(out, "full_name", q.full_name);
        if (!q.domain_tag.empty()) emit(out, "domain", q.domain_tag);
        emit(out, "scale_min", std::to_string(q.scale.min_value));
        emit(out, "scale_max", std::to_string(q.scale.max_value));
        for (auto const& [v, label] : q.scale.anchor_labels) emit(out, "anchor", std::to_string(v) + ": " + label);
        if (q.pre_prompt) emit(out, "pre_prompt", *q.pre_prompt);
        out += "\n";
        for (auto const& it : q.items) {
            out += "[item]\n";
            emit(out, "id", it.item_id);
            emit(out, "position", std::to_string(it.position));
            emit(out, "text", it.text);
            out += "\n";
        }
    }
    return out;
}

}  // namespace pinlab
