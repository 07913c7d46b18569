#include "doctest.h"

#include "pinlab/storage.hpp"
#include "pinlab/synth.hpp"
#include "support.hpp"

using namespace pinlab;

TEST_CASE("sha256 of a known string") {
    support::TempDir dir("sha");
    support::spit(dir / "abc", "abc");
    CHECK(storage::sha256_file(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("clean outputs and solutions round-trip exactly") {
    SynthConfig cfg;
    cfg.n_models = 25;
    auto const pop = generate_population(cfg);
    ResponseLog log = pop.neutral;
    log.records.insert(log.records.end(), pop.human_simulation.records.begin(), pop.human_simulation.records.end());

    support::TempDir dir("store");
    auto const sum = storage::write_clean_outputs(dir / "clean", log, pop.bank);
    CHECK(sum.matrices == 12);
    CHECK(sum.viable == 12);
    CHECK(sum.oob_rows == 0);

    auto const mats = storage::read_matrices(dir / "clean", "neutral");
    REQUIRE(mats.size() == 6);
    auto const direct = build_matrix(log, pop.bank, mats[0].questionnaire_id, "neutral");
    CHECK(mats[0].values == direct.values);
    CHECK(mats[0].item_ids == direct.item_ids);
    CHECK(mats[0].viable);

    auto const raw = storage::read_raw_responses(dir / "clean", "human_simulation");
    CHECK(raw.item_ids.size() == 60);
    CHECK(raw.models.size() == 25);

    auto const items = storage::read_items(dir / "clean" / "items.csv");
    CHECK(items.size() == 60);

    auto const sol = primary_factor_solution(mats[0], {.pa_iterations = 20, .seed = 3});
    storage::write_solution(dir / "sol", sol);
    auto const back = storage::read_solution(dir / "sol", sol.questionnaire_id, "neutral");
    CHECK(back.pattern == sol.pattern);
    CHECK(back.factor_corr == sol.factor_corr);
    CHECK(back.scores == sol.scores);
    CHECK(back.item_ids == sol.item_ids);
    CHECK(back.model_slugs == sol.model_slugs);
    CHECK(back.method == sol.method);
    CHECK(back.primary_index == sol.primary_index);
    CHECK(back.flags == sol.flags);
    CHECK(back.seed == 3);
    CHECK(storage::read_solutions(dir / "sol", "neutral").size() == 1);
    CHECK(storage::read_solutions(dir / "sol", "llm_analog").empty());
}
