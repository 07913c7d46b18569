#include "doctest.h"

#include "pinlab/axis.hpp"
#include "pinlab/cleaning.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/synth.hpp"
#include "support.hpp"

using namespace pinlab;

namespace {

PinocchioTable pi_table(Population const& pop) {
    return pinocchio_scores(collect_responses(pop.neutral, pop.bank, "neutral"),
                            collect_responses(pop.human_simulation, pop.bank, "human_simulation"));
}

double median(std::vector<double> v) { return percentile(std::move(v), 50); }

}  // namespace

TEST_CASE("responses are in scale and parse cleanly") {
    SynthConfig cfg;
    cfg.n_models = 20;
    auto const pop = generate_population(cfg);
    CHECK(pop.bank.item_count() == 60);
    CHECK(pop.bank.questionnaires().size() == 6);
    CHECK(pop.neutral.records.size() == 20 * 60);
    CHECK(pop.human_simulation.records.size() == 20 * 60);
    for (auto const* log : {&pop.neutral, &pop.human_simulation})
        for (auto const& r : log->records) {
            auto const p = parse_response(r.text, cfg.scale);
            CHECK(p.ok());
        }
    CHECK(pop.truth.traits.size() == 20);
    CHECK(pop.truth.loadings.size() == 60);
}

TEST_CASE("generation is byte-identical for a seed") {
    support::TempDir a("synA"), b("synB");
    SynthConfig cfg;
    cfg.n_models = 12;
    write_population(generate_population(cfg), cfg, a.path);
    write_population(generate_population(cfg), cfg, b.path);
    for (auto const* f : {"bank.txt", "neutral.jsonl", "human_simulation.jsonl", "ground_truth.csv", "vectors.txt", "freq.txt"}) {
        CAPTURE(f);
        auto const x = support::slurp(a / f);
        CHECK_FALSE(x.empty());
        CHECK(x == support::slurp(b / f));
    }
    cfg.seed = 8;
    write_population(generate_population(cfg), cfg, b.path);
    CHECK(support::slurp(a / "neutral.jsonl") != support::slurp(b / "neutral.jsonl"));
    CHECK(load_item_bank(a / "bank.txt").item_count() == 60);
}

TEST_CASE("without loadings both conditions have comparable variance") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.n_experiential_items = 0;
        cfg.n_reactive_items = 0;
        cfg.n_neutral_items = 60;
        cfg.hs_noise_sd = cfg.noise_sd;
        auto const t = pi_table(generate_population(cfg));
        std::vector<double> pis;
        for (auto const& r : t.rows)
            if (r.included) pis.push_back(r.pi);
        REQUIRE(pis.size() == 60);
        double const m = median(pis);
        CAPTURE(seed);
        CHECK(m >= 0.8);
        CHECK(m <= 1.25);
    }
}

TEST_CASE("experiential items show larger variance ratios") {
    SynthConfig cfg;
    auto const pop = generate_population(cfg);
    auto const t = pi_table(pop);
    std::vector<double> exp, neu;
    for (std::size_t i = 0; i < pop.truth.item_ids.size(); ++i) {
        auto const* row = t.find(pop.truth.item_ids[i]);
        REQUIRE(row);
        if (!row->included) continue;
        if (pop.truth.item_classes[i] == ItemClass::experiential) exp.push_back(row->pi);
        if (pop.truth.item_classes[i] == ItemClass::neutral) neu.push_back(row->pi);
    }
    CHECK(median(exp) > median(neu));
    CHECK(median(exp) > 1.5);
}

TEST_CASE("config validation and loading") {
    SynthConfig cfg;
    cfg.n_models = 3;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    support::TempDir dir("syncfg");
    support::spit(dir / "c.json", R"({"n_models": 30, "seed": 11, "scale": {"min": 1, "max": 7}})");
    auto const c = load_synth_config(dir / "c.json");
    CHECK(c.n_models == 30);
    CHECK(c.seed == 11);
    CHECK(c.scale.max_value == 7);
    CHECK(c.n_reactive_items == 10);
}
