#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace pinlab {

struct ModelSpec {
    std::string provider;
    std::string slug;

    friend auto operator<=>(ModelSpec const&, ModelSpec const&) = default;
};

/// Provider inferred from an "provider/model" slug; empty when there is no prefix.
std::string provider_from_slug(std::string_view slug);

enum class ResponseStatus { ok, transport_failed, exhausted_retries };

std::string_view to_string(ResponseStatus s) noexcept;
ResponseStatus parse_status(std::string_view s);

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view s);

struct RawResponse {
    ModelSpec model;
    std::string item_id;
    std::string condition_id;
    std::string text;
    ResponseStatus status = ResponseStatus::ok;
    int attempts = 0;
    Timestamp timestamp{};

    friend bool operator==(RawResponse const&, RawResponse const&) = default;
};

/// In-memory view of a response log. On disk: one JSON object per line with
/// fields model, provider, item_id, condition, status, attempts, timestamp, text.
struct ResponseLog {
    std::vector<RawResponse> records;

    static ResponseLog load(std::filesystem::path const& path);
    /// Concatenation of several log files, in argument order.
    static ResponseLog load_all(std::vector<std::filesystem::path> const& paths);
    void save(std::filesystem::path const& path) const;
};

std::string encode_record(RawResponse const& r);
RawResponse decode_record(std::string_view line, std::size_t lineno = 0);

/// Append-only, serialized log sink. Each record is flushed as it is written.
class LogWriter {
public:
    explicit LogWriter(std::filesystem::path path);
    void append(RawResponse const& r);

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mu_;
};

using CellKey = std::tuple<std::string, std::string, std::string>;  // model slug, item id, condition

inline CellKey cell_key(RawResponse const& r) { return {r.model.slug, r.item_id, r.condition_id}; }

}  // namespace pinlab
