#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pinlab/itembank.hpp"
#include "pinlab/response_log.hpp"
#include "pinlab/stats.hpp"

namespace pinlab {

enum class ParseStatus { ok, missing_unparseable, missing_out_of_range };

std::string_view to_string(ParseStatus s) noexcept;

struct ParsedValue {
    /// Parsed candidate. Retained for out-of-range values so they can be reported.
    std::optional<long long> value;
    ParseStatus status = ParseStatus::missing_unparseable;

    bool ok() const noexcept { return status == ParseStatus::ok; }
};

/// Pure-integer text parses directly; otherwise the first run of digits anywhere
/// in the text is the candidate. Total and deterministic.
ParsedValue parse_response(std::string_view text, ResponseScale const& scale);

/// Parsed in-range responses for one condition before any deletion. NaN marks a
/// missing cell. Rows sorted by model slug, columns by item id.
struct ResponseTable {
    std::string condition_id;
    std::vector<ModelSpec> models;
    std::vector<std::string> item_ids;
    Matrix values;

    std::optional<Eigen::Index> row_of(std::string_view slug) const;
    std::optional<Eigen::Index> col_of(std::string_view item_id) const;
    /// Responses to one item across models, NaN where missing.
    Vector item(std::string_view item_id) const;
    /// Restrict to a subset of item columns (in the given order).
    ResponseTable select_items(std::vector<std::string> const& ids) const;
};

/// Collect parsed responses for a condition. When `questionnaire_id` is given only
/// that questionnaire's items are included (all of them, responded or not);
/// otherwise every bank item that has at least one record is included.
ResponseTable collect_responses(ResponseLog const& log, ItemBank const& bank, std::string_view condition_id,
                                std::optional<std::string_view> questionnaire_id = std::nullopt);

/// Union of several tables of the same condition over models and items.
ResponseTable merge_tables(std::vector<ResponseTable> const& parts);

struct Dropped {
    std::string id;
    std::string reason;

    friend bool operator==(Dropped const&, Dropped const&) = default;
};

inline constexpr std::size_t kMinViableModels = 5;

struct ResponseMatrix {
    std::string questionnaire_id;
    std::string condition_id;
    std::vector<ModelSpec> models;
    std::vector<std::string> item_ids;
    Matrix values;
    std::vector<Dropped> dropped_items;
    std::vector<Dropped> dropped_models;
    bool viable = false;

    std::vector<std::string> model_slugs() const;
};

/// Item-level exclusions on a raw table: items nobody answered, then listwise
/// deletion of models, then zero-variance items, then the minimum-N rule.
ResponseMatrix apply_exclusion_rules(ResponseTable const& raw, std::string questionnaire_id);

ResponseMatrix build_matrix(ResponseLog const& log, ItemBank const& bank, std::string_view questionnaire_id,
                            std::string_view condition_id);

struct OobRecord {
    std::string model;
    std::string questionnaire;
    std::string item;
    std::string condition;
    long long value;
};

std::vector<OobRecord> out_of_range_records(ResponseLog const& log, ItemBank const& bank);

/// CSV `model,questionnaire,item,condition,value`, sorted by model then item. Returns row count.
std::size_t write_oob_report(ResponseLog const& log, ItemBank const& bank, std::filesystem::path const& path);

}  // namespace pinlab
