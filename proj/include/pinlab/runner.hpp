#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pinlab/itembank.hpp"
#include "pinlab/response_log.hpp"

namespace pinlab {

/// Exponential backoff with full jitter: sleep ~ U(0, min(cap, base * factor^k)).
struct BackoffPolicy {
    std::chrono::milliseconds base{1000};
    double factor = 2.0;
    std::chrono::milliseconds cap{60000};

    std::chrono::milliseconds ceiling(int retry_index) const;
};

struct SurveyPlan {
    std::vector<ModelSpec> models;
    std::vector<ConditionId> conditions;
    ItemBank bank;
    double temperature = 1.0;
    int max_retries = 5;
    int concurrency_limit = 4;
    std::string endpoint_url;
    BackoffPolicy backoff;
    std::chrono::seconds request_timeout{300};
    /// Bearer token; falls back to the PINLAB_API_KEY environment variable when unset.
    std::optional<std::string> api_key;

    void validate() const;
};

/// Plan file (JSON): endpoint_url, bank (path relative to the plan file), models
/// (list of {provider, slug} or bare slugs), conditions, temperature, max_retries,
/// concurrency_limit, optional backoff {base_ms, factor, cap_ms}.
SurveyPlan load_plan(std::filesystem::path const& path);

/// Byte-stable chat-completions request body.
std::string chat_request_body(std::string const& slug, double temperature, std::string const& prompt);

/// Text of the first choice's message; nullopt when the body is not a chat-completions reply.
std::optional<std::string> extract_assistant_text(std::string const& body);

/// One prompt, one model, with retries. item_id and condition_id are left empty.
RawResponse administer(SurveyPlan const& plan, ModelSpec const& model, std::string const& prompt);

/// Administers every (model x condition x item) cell not already logged as ok,
/// appending to `log_path` as results arrive. Returns the complete log.
ResponseLog run_survey(SurveyPlan const& plan, std::filesystem::path const& log_path);

}  // namespace pinlab
