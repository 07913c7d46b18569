#include "pinlab/response_log.hpp"

#include <ctime>
#include <sstream>

#include "json.hpp"

#include "pinlab/errors.hpp"

namespace pinlab {

using ordered_json = nlohmann::ordered_json;

std::string provider_from_slug(std::string_view slug) {
    auto const slash = slug.find('/');
    return slash == std::string_view::npos ? std::string{} : std::string(slug.substr(0, slash));
}

std::string_view to_string(ResponseStatus s) noexcept {
    switch (s) {
    case ResponseStatus::ok: return "ok";
    case ResponseStatus::transport_failed: return "transport_failed";
    case ResponseStatus::exhausted_retries: return "exhausted_retries";
    }
    return "ok";
}

ResponseStatus parse_status(std::string_view s) {
    if (s == "ok") return ResponseStatus::ok;
    if (s == "transport_failed") return ResponseStatus::transport_failed;
    if (s == "exhausted_retries") return ResponseStatus::exhausted_retries;
    throw ParseError("unknown status '" + std::string(s) + "'", 0);
}

std::string format_timestamp(Timestamp t) {
    auto const secs = std::chrono::floor<std::chrono::seconds>(t);
    auto const ms = (t - secs).count();
    std::time_t const tt = std::chrono::system_clock::to_time_t(secs);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, int(ms));
    return buf;
}

Timestamp parse_timestamp(std::string_view s) {
    int y, mo, d, h, mi, sec, ms = 0;
    std::string const str(s);
    if (std::sscanf(str.c_str(), "%d-%d-%dT%d:%d:%d.%dZ", &y, &mo, &d, &h, &mi, &sec, &ms) < 6)
        throw ParseError("bad timestamp '" + str + "'", 0);
    using namespace std::chrono;
    auto const days = sys_days{year{y} / month{unsigned(mo)} / day{unsigned(d)}};
    return time_point_cast<milliseconds>(days + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms});
}

std::string encode_record(RawResponse const& r) {
    ordered_json j;
    j["model"] = r.model.slug;
    j["provider"] = r.model.provider;
    j["item_id"] = r.item_id;
    j["condition"] = r.condition_id;
    j["status"] = std::string(to_string(r.status));
    j["attempts"] = r.attempts;
    j["timestamp"] = format_timestamp(r.timestamp);
    j["text"] = r.text;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

RawResponse decode_record(std::string_view line, std::size_t lineno) {
    try {
        auto const j = nlohmann::json::parse(line);
        RawResponse r;
        r.model.slug = j.at("model").get<std::string>();
        r.model.provider = j.contains("provider") ? j["provider"].get<std::string>() : provider_from_slug(r.model.slug);
        r.item_id = j.at("item_id").get<std::string>();
        r.condition_id = j.at("condition").get<std::string>();
        r.status = parse_status(j.at("status").get<std::string>());
        r.attempts = j.at("attempts").get<int>();
        r.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
        r.text = j.at("text").get<std::string>();
        return r;
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(std::string("malformed log record: ") + e.what(), lineno);
    } catch (ParseError const& e) {
        throw ParseError(e.what(), lineno);
    }
}

ResponseLog ResponseLog::load(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open log " + path.string());
    ResponseLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        log.records.push_back(decode_record(line, lineno));
    }
    return log;
}

ResponseLog ResponseLog::load_all(std::vector<std::filesystem::path> const& paths) {
    ResponseLog all;
    for (auto const& p : paths) {
        auto part = load(p);
        all.records.insert(all.records.end(), std::make_move_iterator(part.records.begin()),
                           std::make_move_iterator(part.records.end()));
    }
    return all;
}

void ResponseLog::save(std::filesystem::path const& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write log " + path.string());
    for (auto const& r : records) out << encode_record(r) << '\n';
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

LogWriter::LogWriter(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open log for append: " + path_.string());
}

void LogWriter::append(RawResponse const& r) {
    auto const line = encode_record(r) + '\n';
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
    if (!out_) throw IoError("log write failed: " + path_.string());
}

}  // namespace pinlab
