#include "doctest.h"

#include <chrono>

#include "json.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/report.hpp"
#include "pinlab/synth.hpp"
#include "support.hpp"

using namespace pinlab;
namespace fs = std::filesystem;

namespace {

/// Synthetic population on disk plus a pipeline config pointing at it.
struct Fixture {
    support::TempDir dir{"report"};
    PipelineConfig config;

    explicit Fixture(SynthConfig syn = {}, bool with_hs = true) {
        write_population(generate_population(syn), syn, dir / "pop");
        config.bank = dir / "pop/bank.txt";
        config.logs["neutral"] = {dir / "pop/neutral.jsonl"};
        if (with_hs) config.logs["human_simulation"] = {dir / "pop/human_simulation.jsonl"};
        config.out = dir / "out";
        config.seed = 5;
        config.n_boot = 100;
        config.pa_iterations = 30;
        config.top_n = 30;
        config.negative_keywords = {"distress", "fear", "sad"};
        config.ssd = SsdSettings{dir / "pop/vectors.txt", dir / "pop/freq.txt", 5, 10};
    }
};

std::map<std::string, std::string> hashes(ReportBundle const& b) {
    std::map<std::string, std::string> out;
    for (auto const& a : b.artifacts) out[a.path] = a.sha256;
    return out;
}

StageRecord stage(ReportBundle const& b, std::string const& name) {
    for (auto const& s : b.stages)
        if (s.name == name) return s;
    FAIL("no stage " << name);
    return {};
}

}  // namespace

TEST_CASE("synthetic end-to-end run produces the core tables") {
    Fixture f;
    auto const t0 = std::chrono::steady_clock::now();
    auto const b = run_pipeline(f.config);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::minutes(2));

    for (auto const* s : {"clean", "efa", "pinocchio", "axis", "loading_shift", "clusters", "item_axis", "valence", "ssd"})
        CHECK_MESSAGE(stage(b, s).status == "completed", s);
    CHECK(stage(b, "condition_shift").status == "skipped");

    for (auto const* p : {"tables/axis_scores.csv", "tables/pinocchio_items.csv", "tables/clusters.csv",
                          "tables/loading_shift.csv", "tables/ssd_fit.csv", "figures/ranking.svg", "manifest.json"})
        CHECK_MESSAGE(fs::exists(b.root / p), p);

    auto const m = nlohmann::json::parse(support::slurp(b.manifest));
    CHECK(m.at("tool") == "pinlab");
    CHECK(m.at("artifacts").size() == b.artifacts.size());
    for (auto const& a : b.artifacts) CHECK(storage::sha256_file(b.root / a.path) == a.sha256);
}

TEST_CASE("runs are reproducible and can be replayed from the manifest") {
    Fixture f;
    auto const first = run_pipeline(f.config);

    auto second_cfg = f.config;
    second_cfg.out = f.dir / "out2";
    auto const second = run_pipeline(second_cfg);
    CHECK(hashes(first) == hashes(second));

    auto replay = load_pipeline_config(first.manifest);
    CHECK(replay.seed == f.config.seed);
    CHECK(replay.n_boot == f.config.n_boot);
    auto const again = run_pipeline(replay);
    CHECK(again.root == first.root);
    CHECK(hashes(again) == hashes(first));

    auto par = f.config;
    par.out = f.dir / "out3";
    par.jobs = 4;
    CHECK(hashes(run_pipeline(par)) == hashes(first));
}

TEST_CASE("without human simulation responses the variance-ratio stages are skipped") {
    Fixture f({}, false);
    auto const b = run_pipeline(f.config);
    auto const p = stage(b, "pinocchio");
    CHECK(p.status == "skipped");
    CHECK(p.note.find("human_simulation") != std::string::npos);
    CHECK(stage(b, "axis").status == "completed");
    CHECK(stage(b, "clusters").status == "skipped");
    CHECK(stage(b, "loading_shift").status == "skipped");
    CHECK_FALSE(fs::exists(b.root / "tables/pinocchio_items.csv"));
}

TEST_CASE("a failing stage is recorded before the error propagates") {
    SynthConfig syn;
    syn.n_questionnaires = 1;
    Fixture f(syn);
    CHECK_THROWS_AS(run_pipeline(f.config), PreconditionError);
    auto const m = nlohmann::json::parse(support::slurp(f.config.out / "manifest.json"));
    bool failed = false;
    for (auto const& s : m.at("stages"))
        if (s.at("name") == "axis") failed = s.at("status") == "failed";
    CHECK(failed);
}

TEST_CASE("a non-empty output directory without a manifest is refused") {
    Fixture f;
    support::spit(f.config.out / "keep.txt", "mine");
    CHECK_THROWS_AS(run_pipeline(f.config), PreconditionError);
    CHECK(support::slurp(f.config.out / "keep.txt") == "mine");
}

TEST_CASE("config parsing") {
    support::TempDir dir("cfg");
    auto const c = parse_pipeline_config(R"({"bank": "b.txt", "logs": {"neutral": "n.jsonl",
        "human_simulation": ["h1.jsonl", "h2.jsonl"]}, "seed": 3, "axis": {"n_boot": 50},
        "clusters": {"top_n": 20, "k_max": 6}, "valence": {"negative": ["sad"]}})",
                                         dir.path);
    CHECK(c.bank == dir / "b.txt");
    CHECK(c.logs.at("human_simulation").size() == 2);
    CHECK(c.seed == 3);
    CHECK(c.n_boot == 50);
    CHECK(c.top_n == 20);
    CHECK(c.k_max == 6);
    CHECK(c.out == dir / "report");
    CHECK(c.negative_keywords == std::vector<std::string>{"sad"});
    CHECK_FALSE(c.ssd.has_value());

    auto const round = parse_pipeline_config(c.to_json(), "/elsewhere");
    CHECK(round.to_json() == c.to_json());

    CHECK_THROWS_AS(parse_pipeline_config("{not json", dir.path), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(R"({"logs": {}})", dir.path), ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(R"({"bank": "b", "logs": {"happy": "x"}})", dir.path), ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(R"({"bank": "b", "logs": {}, "axis": {"n_boot": 0}})", dir.path),
                    ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(R"({"bank": "b", "logs": {}, "ssd": {"vectors": "v"}})", dir.path),
                    ValidationError);
}
