#include "pinlab/cleaning.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "pinlab/csv.hpp"
#include "pinlab/errors.hpp"

namespace pinlab {

std::string_view to_string(ParseStatus s) noexcept {
    switch (s) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::missing_unparseable: return "missing_unparseable";
    case ParseStatus::missing_out_of_range: return "missing_out_of_range";
    }
    return "ok";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim_ws(std::string_view s) {
    auto const b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n\f\v") - b + 1);
}

ParsedValue classify(std::string_view digits, bool negative, ResponseScale const& scale) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{}) return {std::nullopt, ParseStatus::missing_out_of_range};
    if (negative) v = -v;
    return {v, scale.contains(v) ? ParseStatus::ok : ParseStatus::missing_out_of_range};
}

}  // namespace

ParsedValue parse_response(std::string_view text, ResponseScale const& scale) {
    auto const t = trim_ws(text);
    if (!t.empty()) {
        std::size_t start = (t[0] == '+' || t[0] == '-') ? 1 : 0;
        if (start < t.size() && std::all_of(t.begin() + long(start), t.end(), is_digit))
            return classify(t.substr(start), t[0] == '-', scale);
    }
    auto const first = std::find_if(t.begin(), t.end(), is_digit);
    if (first == t.end()) return {std::nullopt, ParseStatus::missing_unparseable};
    auto const last = std::find_if_not(first, t.end(), is_digit);
    return classify(std::string_view(&*first, std::size_t(last - first)), false, scale);
}

std::optional<Eigen::Index> ResponseTable::row_of(std::string_view slug) const {
    auto it = std::lower_bound(models.begin(), models.end(), slug,
                               [](ModelSpec const& m, std::string_view s) { return m.slug < s; });
    if (it == models.end() || it->slug != slug) return std::nullopt;
    return Eigen::Index(it - models.begin());
}

std::optional<Eigen::Index> ResponseTable::col_of(std::string_view item_id) const {
    auto it = std::lower_bound(item_ids.begin(), item_ids.end(), item_id);
    if (it == item_ids.end() || *it != item_id) {
        // Tables produced by select_items need not be sorted.
        auto lin = std::find(item_ids.begin(), item_ids.end(), item_id);
        if (lin == item_ids.end()) return std::nullopt;
        return Eigen::Index(lin - item_ids.begin());
    }
    return Eigen::Index(it - item_ids.begin());
}

Vector ResponseTable::item(std::string_view item_id) const {
    auto const c = col_of(item_id);
    if (!c) throw LookupError("unknown item '" + std::string(item_id) + "'");
    return values.col(*c);
}

ResponseTable ResponseTable::select_items(std::vector<std::string> const& ids) const {
    ResponseTable out;
    out.condition_id = condition_id;
    out.models = models;
    out.item_ids = ids;
    out.values.resize(values.rows(), Eigen::Index(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) out.values.col(Eigen::Index(j)) = item(ids[j]);
    return out;
}

ResponseTable collect_responses(ResponseLog const& log, ItemBank const& bank, std::string_view condition_id,
                                std::optional<std::string_view> questionnaire_id) {
    if (questionnaire_id && !bank.find_questionnaire(*questionnaire_id))
        throw LookupError("unknown questionnaire '" + std::string(*questionnaire_id) + "'");

    // Last ok record per cell wins; non-ok records only register the model.
    std::map<std::string, ModelSpec> models;
    std::map<std::pair<std::string, std::string>, std::string> texts;
    std::set<std::string> items;
    for (auto const& r : log.records) {
        if (r.condition_id != condition_id) continue;
        auto [item, q] = bank.find_item(r.item_id);
        if (!item) continue;
        if (questionnaire_id && q->questionnaire_id != *questionnaire_id) continue;
        models.emplace(r.model.slug, r.model);
        items.insert(r.item_id);
        if (r.status == ResponseStatus::ok) texts[{r.model.slug, r.item_id}] = r.text;
    }
    if (questionnaire_id)
        for (auto const& it : bank.questionnaire(*questionnaire_id).items) items.insert(it.item_id);

    ResponseTable t;
    t.condition_id = std::string(condition_id);
    for (auto const& [slug, m] : models) t.models.push_back(m);
    t.item_ids.assign(items.begin(), items.end());
    t.values = Matrix::Constant(Eigen::Index(t.models.size()), Eigen::Index(t.item_ids.size()), kMissing);
    for (auto const& [key, text] : texts) {
        auto const row = t.row_of(key.first);
        auto const col = t.col_of(key.second);
        auto const parsed = parse_response(text, bank.find_item(key.second).second->scale);
        if (parsed.ok()) t.values(*row, *col) = double(*parsed.value);
    }
    return t;
}

ResponseTable merge_tables(std::vector<ResponseTable> const& parts) {
    ResponseTable out;
    std::map<std::string, ModelSpec> models;
    std::set<std::string> items;
    for (auto const& p : parts) {
        if (out.condition_id.empty()) out.condition_id = p.condition_id;
        for (auto const& m : p.models) models.emplace(m.slug, m);
        items.insert(p.item_ids.begin(), p.item_ids.end());
    }
    for (auto const& [slug, m] : models) out.models.push_back(m);
    out.item_ids.assign(items.begin(), items.end());
    out.values = Matrix::Constant(Eigen::Index(out.models.size()), Eigen::Index(out.item_ids.size()), kMissing);
    for (auto const& p : parts)
        for (std::size_t i = 0; i < p.models.size(); ++i) {
            auto const row = *out.row_of(p.models[i].slug);
            for (std::size_t j = 0; j < p.item_ids.size(); ++j) {
                double const v = p.values(Eigen::Index(i), Eigen::Index(j));
                if (!is_missing(v)) out.values(row, *out.col_of(p.item_ids[j])) = v;
            }
        }
    return out;
}

std::vector<std::string> ResponseMatrix::model_slugs() const {
    std::vector<std::string> out;
    for (auto const& m : models) out.push_back(m.slug);
    return out;
}

ResponseMatrix apply_exclusion_rules(ResponseTable const& raw, std::string questionnaire_id) {
    ResponseMatrix m;
    m.questionnaire_id = std::move(questionnaire_id);
    m.condition_id = raw.condition_id;

    auto const n_models = raw.values.rows();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < raw.values.cols(); ++j) {
        bool const any = (raw.values.col(j).array() == raw.values.col(j).array()).any();
        if (any)
            cols.push_back(j);
        else
            m.dropped_items.push_back({raw.item_ids[std::size_t(j)], "no_responses"});
    }

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n_models; ++i) {
        std::size_t missing = 0;
        for (auto j : cols) missing += is_missing(raw.values(i, j));
        if (missing == 0)
            rows.push_back(i);
        else
            m.dropped_models.push_back({raw.models[std::size_t(i)].slug, "listwise_missing:" + std::to_string(missing)});
    }

    std::vector<Eigen::Index> kept;
    for (auto j : cols) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto i : rows) {
            lo = std::min(lo, raw.values(i, j));
            hi = std::max(hi, raw.values(i, j));
        }
        if (!rows.empty() && hi > lo)
            kept.push_back(j);
        else
            m.dropped_items.push_back({raw.item_ids[std::size_t(j)], "zero_variance"});
    }

    m.values.resize(Eigen::Index(rows.size()), Eigen::Index(kept.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m.models.push_back(raw.models[std::size_t(rows[r])]);
        for (std::size_t c = 0; c < kept.size(); ++c) m.values(Eigen::Index(r), Eigen::Index(c)) = raw.values(rows[r], kept[c]);
    }
    for (auto j : kept) m.item_ids.push_back(raw.item_ids[std::size_t(j)]);
    m.viable = m.models.size() >= kMinViableModels && !m.item_ids.empty();
    return m;
}

ResponseMatrix build_matrix(ResponseLog const& log, ItemBank const& bank, std::string_view questionnaire_id,
                            std::string_view condition_id) {
    auto const raw = collect_responses(log, bank, condition_id, questionnaire_id);
    return apply_exclusion_rules(raw, std::string(questionnaire_id));
}

std::vector<OobRecord> out_of_range_records(ResponseLog const& log, ItemBank const& bank) {
    std::vector<OobRecord> out;
    for (auto const& r : log.records) {
        if (r.status != ResponseStatus::ok) continue;
        auto [item, q] = bank.find_item(r.item_id);
        if (!item) continue;
        auto const parsed = parse_response(r.text, q->scale);
        if (parsed.status == ParseStatus::missing_out_of_range && parsed.value)
            out.push_back({r.model.slug, q->questionnaire_id, r.item_id, r.condition_id, *parsed.value});
    }
    std::stable_sort(out.begin(), out.end(), [](OobRecord const& a, OobRecord const& b) {
        return std::tie(a.model, a.item, a.condition) < std::tie(b.model, b.item, b.condition);
    });
    return out;
}

std::size_t write_oob_report(ResponseLog const& log, ItemBank const& bank, std::filesystem::path const& path) {
    auto const recs = out_of_range_records(log, bank);
    std::vector<csv::Row> rows{{"model", "questionnaire", "item", "condition", "value"}};
    for (auto const& r : recs) rows.push_back({r.model, r.questionnaire, r.item, r.condition, std::to_string(r.value)});
    csv::write_file(path, rows);
    return recs.size();
}

}  // namespace pinlab
