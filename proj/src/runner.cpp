#include "pinlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "pinlab/errors.hpp"

namespace pinlab {

using nlohmann::json;

std::chrono::milliseconds BackoffPolicy::ceiling(int retry_index) const {
    double const raw = double(base.count()) * std::pow(factor, double(retry_index));
    return std::chrono::milliseconds(static_cast<long long>(std::min(raw, double(cap.count()))));
}

void SurveyPlan::validate() const {
    if (!(temperature >= 0)) throw ValidationError("temperature", "must be >= 0");
    if (concurrency_limit < 1) throw ValidationError("concurrency_limit", "must be >= 1");
    if (max_retries < 0) throw ValidationError("max_retries", "must be >= 0");
    if (endpoint_url.empty()) throw ValidationError("endpoint_url", "must be set");
    std::set<std::pair<std::string, std::string>> seen;
    for (auto const& m : models) {
        if (m.slug.empty()) throw ValidationError("models", "model slug must be non-empty");
        if (!seen.emplace(m.provider, m.slug).second)
            throw ValidationError("models", "duplicate model " + m.provider + "/" + m.slug);
    }
}

SurveyPlan load_plan(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open plan " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (json::exception const& e) {
        throw ParseError(std::string("plan: ") + e.what(), 0);
    }
    try {
        SurveyPlan plan;
        plan.endpoint_url = j.at("endpoint_url").get<std::string>();
        std::filesystem::path bank = j.at("bank").get<std::string>();
        if (bank.is_relative()) bank = path.parent_path() / bank;
        plan.bank = load_item_bank(bank);
        for (auto const& m : j.at("models")) {
            if (m.is_string()) {
                auto const slug = m.get<std::string>();
                plan.models.push_back({provider_from_slug(slug), slug});
            } else {
                plan.models.push_back({m.value("provider", std::string{}), m.at("slug").get<std::string>()});
            }
        }
        for (auto const& c : j.value("conditions", json::array({"neutral"}))) {
            auto const id = parse_condition(c.get<std::string>());
            if (!id) throw ValidationError("conditions", "unknown condition " + c.get<std::string>());
            plan.conditions.push_back(*id);
        }
        plan.temperature = j.value("temperature", 1.0);
        plan.max_retries = j.value("max_retries", 5);
        plan.concurrency_limit = j.value("concurrency_limit", 4);
        if (j.contains("backoff")) {
            auto const& b = j["backoff"];
            plan.backoff.base = std::chrono::milliseconds(b.value("base_ms", 1000));
            plan.backoff.factor = b.value("factor", 2.0);
            plan.backoff.cap = std::chrono::milliseconds(b.value("cap_ms", 60000));
        }
        plan.validate();
        return plan;
    } catch (json::exception const& e) {
        throw ParseError(std::string("plan: ") + e.what(), 0);
    }
}

std::string chat_request_body(std::string const& slug, double temperature, std::string const& prompt) {
    nlohmann::ordered_json j;
    j["model"] = slug;
    j["temperature"] = temperature;
    j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
    return j.dump();
}

std::optional<std::string> extract_assistant_text(std::string const& body) {
    auto const j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto const choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
    auto const& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content")) return std::nullopt;
    auto const& content = first["message"]["content"];
    if (content.is_null()) return std::string{};
    if (!content.is_string()) return std::nullopt;
    return content.get<std::string>();
}

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(std::string const& url) {
    auto const scheme_end = url.find("://");
    auto const host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto const slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

std::mt19937_64& jitter_rng() {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    return rng;
}

void backoff_sleep(BackoffPolicy const& policy, int retry_index) {
    auto const ceiling = policy.ceiling(retry_index).count();
    if (ceiling <= 0) return;
    std::uniform_int_distribution<long long> dist(0, ceiling);
    std::this_thread::sleep_for(std::chrono::milliseconds(dist(jitter_rng())));
}

std::string api_key_for(SurveyPlan const& plan) {
    if (plan.api_key) return *plan.api_key;
    if (char const* env = std::getenv("PINLAB_API_KEY")) return env;
    return {};
}

Timestamp now() { return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()); }

}  // namespace

RawResponse administer(SurveyPlan const& plan, ModelSpec const& model, std::string const& prompt) {
    auto const endpoint = split_url(plan.endpoint_url);
    auto const body = chat_request_body(model.slug, plan.temperature, prompt);
    auto const key = api_key_for(plan);

    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    RawResponse out;
    out.model = model;
    std::string last_error;
    for (int attempt = 0; attempt <= plan.max_retries; ++attempt) {
        if (attempt > 0) backoff_sleep(plan.backoff, attempt - 1);
        out.attempts = attempt + 1;

        httplib::Client client(endpoint.origin);
        client.set_connection_timeout(std::chrono::seconds(30));
        client.set_read_timeout(plan.request_timeout);
        client.set_write_timeout(std::chrono::seconds(60));
        auto res = client.Post(endpoint.path, headers, body, "application/json");

        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        int const status = res->status;
        if (status >= 200 && status < 300) {
            if (auto text = extract_assistant_text(res->body)) {
                out.text = std::move(*text);
                out.status = ResponseStatus::ok;
                out.timestamp = now();
                return out;
            }
            last_error = "malformed completion body";
            continue;
        }
        last_error = "HTTP " + std::to_string(status) + ": " + res->body;
        bool const retryable = status == 429 || status >= 500;
        if (!retryable) {
            out.status = ResponseStatus::transport_failed;
            out.text = last_error;
            out.timestamp = now();
            return out;
        }
    }
    out.status = ResponseStatus::exhausted_retries;
    out.text = last_error;
    out.timestamp = now();
    return out;
}

ResponseLog run_survey(SurveyPlan const& plan, std::filesystem::path const& log_path) {
    plan.validate();

    ResponseLog log;
    if (std::filesystem::exists(log_path)) log = ResponseLog::load(log_path);
    std::set<CellKey> done;
    for (auto const& r : log.records)
        if (r.status == ResponseStatus::ok) done.insert(cell_key(r));

    struct Cell {
        ModelSpec const* model;
        ConditionId condition;
        Item const* item;
        Questionnaire const* questionnaire;
    };
    std::vector<Cell> cells;
    for (auto const& m : plan.models)
        for (auto c : plan.conditions)
            for (auto const& q : plan.bank.questionnaires())
                for (auto const& it : q.items)
                    if (!done.contains(CellKey{m.slug, it.item_id, std::string(to_string(c))}))
                        cells.push_back({&m, c, &it, &q});

    LogWriter writer(log_path);
    std::vector<RawResponse> fresh(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        while (!abort.load()) {
            auto const i = next.fetch_add(1);
            if (i >= cells.size()) return;
            auto const& cell = cells[i];
            try {
                auto const prompt = render_prompt(*cell.item, *cell.questionnaire, PromptCondition::bundled(cell.condition));
                auto r = administer(plan, *cell.model, prompt);
                r.item_id = cell.item->item_id;
                r.condition_id = std::string(to_string(cell.condition));
                writer.append(r);
                fresh[i] = std::move(r);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                abort.store(true);
                return;
            }
        }
    };

    auto const n_workers = std::min<std::size_t>(std::size_t(plan.concurrency_limit), cells.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& r : fresh) log.records.push_back(std::move(r));
    return log;
}

}  // namespace pinlab
