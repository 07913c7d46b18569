#include "doctest.h"

#include "pinlab/cleaning.hpp"
#include "pinlab/csv.hpp"
#include "support.hpp"

using namespace pinlab;

namespace {

RawResponse rec(std::string slug, std::string item, std::string text, std::string cond = "neutral",
                ResponseStatus st = ResponseStatus::ok) {
    RawResponse r;
    r.model = {provider_from_slug(slug), slug};
    r.item_id = std::move(item);
    r.condition_id = std::move(cond);
    r.text = std::move(text);
    r.status = st;
    r.attempts = 1;
    return r;
}

ItemBank swls() { return load_item_bank(support::fixture("swls.bank")); }

/// Log of `grid[model][item]` texts for SWLS_1.. items.
ResponseLog grid_log(std::vector<std::vector<std::string>> const& grid) {
    ResponseLog log;
    for (std::size_t m = 0; m < grid.size(); ++m)
        for (std::size_t i = 0; i < grid[m].size(); ++i)
            log.records.push_back(rec("p/m" + std::to_string(m), "SWLS_" + std::to_string(i + 1), grid[m][i]));
    return log;
}

}  // namespace

TEST_CASE("parse corpus is classified exactly") {
    auto const rows = csv::read_file(support::fixture("parse_corpus.csv"));
    REQUIRE(rows.size() > 50);
    std::size_t correct = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto const& r = rows[i];
        ResponseScale scale{std::stoi(r[1]), std::stoi(r[2]), {}};
        auto const got = parse_response(r[0], scale);
        bool const status_ok = to_string(got.status) == r[3];
        bool const value_ok = r[4].empty() ? !got.value.has_value() : (got.value && *got.value == std::stoll(r[4]));
        CAPTURE(r[0]);
        CHECK(status_ok);
        CHECK(value_ok);
        correct += status_ok && value_ok;
    }
    CHECK(correct == rows.size() - 1);
}

TEST_CASE("parser rules") {
    ResponseScale const s{1, 5, {}};
    CHECK(parse_response("4", s).value == 4);
    CHECK(parse_response("-2 disagree", s).value == 2);
    CHECK(parse_response("-2", s).status == ParseStatus::missing_out_of_range);
    CHECK(parse_response("3.5", s).value == 3);
    CHECK(parse_response("I would say 2, maybe 3", s).value == 2);
    CHECK(parse_response("none", s).status == ParseStatus::missing_unparseable);
    CHECK(parse_response("", s).status == ParseStatus::missing_unparseable);
    auto const oob = parse_response("9", s);
    CHECK(oob.status == ParseStatus::missing_out_of_range);
    CHECK(oob.value == 9);
}

TEST_CASE("parser is total on arbitrary bytes") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 40);
    ResponseScale const s{1, 7, {}};
    for (int k = 0; k < 2000; ++k) {
        std::string t(static_cast<std::size_t>(len(rng)), '\0');
        for (auto& c : t) c = char(byte(rng));
        auto const a = parse_response(t, s);
        auto const b = parse_response(t, s);
        CHECK(a.status == b.status);
        CHECK(a.value == b.value);
        if (a.ok()) CHECK(s.contains(*a.value));
    }
}

TEST_CASE("complete responses give a full viable matrix") {
    std::vector<std::vector<std::string>> g;
    for (int m = 0; m < 6; ++m) g.push_back({std::to_string(1 + m), "2", std::to_string(7 - m), std::to_string(3 + m % 2), std::to_string(1 + m % 3)});
    auto const mat = build_matrix(grid_log(g), swls(), "SWLS", "neutral");
    CHECK(mat.viable);
    CHECK(mat.values.rows() == 6);
    CHECK(mat.values.cols() == 4);
    REQUIRE(mat.dropped_items.size() == 1);
    CHECK(mat.dropped_items[0] == Dropped{"SWLS_2", "zero_variance"});
    CHECK(mat.values(0, 0) == 1);
}

TEST_CASE("one unparseable response removes the model") {
    std::vector<std::vector<std::string>> g;
    for (int m = 0; m < 6; ++m) g.push_back({std::to_string(1 + m), std::to_string(2 + m % 2), "3", std::to_string(7 - m), "5"});
    g[2][1] = "I cannot answer";
    g[0][4] = "6";
    auto const mat = build_matrix(grid_log(g), swls(), "SWLS", "neutral");
    CHECK(mat.values.rows() == 5);
    REQUIRE(mat.dropped_models.size() == 1);
    CHECK(mat.dropped_models[0].id == "p/m2");
    CHECK(mat.viable);
}

TEST_CASE("fewer than five models is not viable") {
    std::vector<std::vector<std::string>> g;
    for (int m = 0; m < 4; ++m) g.push_back({std::to_string(1 + m), std::to_string(2 + m % 2), "3", "4", "5"});
    CHECK_FALSE(build_matrix(grid_log(g), swls(), "SWLS", "neutral").viable);
}

TEST_CASE("unanswered items are dropped before listwise deletion") {
    std::vector<std::vector<std::string>> g;
    for (int m = 0; m < 6; ++m) g.push_back({std::to_string(1 + m), std::to_string(2 + m % 2), "x", std::to_string(7 - m), "5"});
    auto const mat = build_matrix(grid_log(g), swls(), "SWLS", "neutral");
    CHECK(mat.values.rows() == 6);
    CHECK(std::find(mat.dropped_items.begin(), mat.dropped_items.end(), Dropped{"SWLS_3", "no_responses"}) !=
          mat.dropped_items.end());
}

TEST_CASE("failed transport records count as missing") {
    std::vector<std::vector<std::string>> g;
    for (int m = 0; m < 6; ++m) g.push_back({std::to_string(1 + m), std::to_string(2 + m % 2), "3", "4", std::to_string(m % 3 + 1)});
    auto log = grid_log(g);
    log.records[0].status = ResponseStatus::exhausted_retries;
    auto const mat = build_matrix(log, swls(), "SWLS", "neutral");
    CHECK(mat.values.rows() == 5);
    CHECK(build_matrix(log, swls(), "SWLS", "llm_analog").values.rows() == 0);
}

TEST_CASE("out-of-range report") {
    support::TempDir dir("oob");
    ResponseLog one;
    one.records.push_back(rec("p/a", "SWLS_1", "9"));
    CHECK(write_oob_report(one, swls(), dir / "one.csv") == 1);
    auto const rows = csv::read_file(dir / "one.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == csv::Row{"p/a", "SWLS", "SWLS_1", "neutral", "9"});

    ResponseLog none;
    none.records.push_back(rec("p/a", "SWLS_1", "3"));
    none.records.push_back(rec("p/a", "SWLS_2", "nothing"));
    CHECK(write_oob_report(none, swls(), dir / "none.csv") == 0);
    CHECK(csv::read_file(dir / "none.csv").size() == 1);

    ResponseLog three;
    three.records.push_back(rec("p/z", "SWLS_2", "8"));
    three.records.push_back(rec("p/a", "SWLS_3", "0"));
    three.records.push_back(rec("p/a", "SWLS_1", "12"));
    CHECK(write_oob_report(three, swls(), dir / "three.csv") == 3);
    auto const t = csv::read_file(dir / "three.csv");
    CHECK(t[1][0] == "p/a");
    CHECK(t[1][2] == "SWLS_1");
    CHECK(t[2][2] == "SWLS_3");
    CHECK(t[3][0] == "p/z");
}

TEST_CASE("exclusion rules are idempotent") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix v = support::normal_matrix(8, 6, rng).array().round();
        std::bernoulli_distribution miss(0.08);
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            for (Eigen::Index j = 0; j < v.cols(); ++j)
                if (miss(rng)) v(i, j) = kMissing;
        v.col(5).setConstant(2);
        auto const once = apply_exclusion_rules(support::make_table(v), "Q");
        ResponseTable again;
        again.condition_id = once.condition_id;
        again.models = once.models;
        again.item_ids = once.item_ids;
        again.values = once.values;
        auto const twice = apply_exclusion_rules(again, "Q");
        CHECK(twice.values == once.values);
        CHECK(twice.item_ids == once.item_ids);
        CHECK(twice.dropped_items.empty());
        CHECK(twice.dropped_models.empty());
    }
}

TEST_CASE("collect_responses spans every bank item when no questionnaire is given") {
    auto const log = grid_log({{"1", "2"}, {"3", "4"}});
    auto const t = collect_responses(log, swls(), "neutral");
    CHECK(t.item_ids == std::vector<std::string>{"SWLS_1", "SWLS_2"});
    CHECK(t.item("SWLS_2")(1) == 4);
    auto const q = collect_responses(log, swls(), "neutral", "SWLS");
    CHECK(q.item_ids.size() == 5);
    CHECK(std::isnan(q.item("SWLS_5")(0)));
}
