// pinlab command-line driver. Each subcommand maps onto one pipeline stage and
// reads/writes the on-disk formats in pinlab/storage.hpp.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/report.hpp"
#include "pinlab/runner.hpp"
#include "pinlab/svg.hpp"
#include "pinlab/synth.hpp"

namespace fs = std::filesystem;
using namespace pinlab;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 1;

    std::uint64_t seed_or(std::uint64_t d) const { return seed.value_or(d); }
    fs::path out_dir() const {
        if (out.empty()) throw PreconditionError("--out is required");
        return out;
    }
};

bool has_solutions(fs::path const& dir, std::string const& cond) {
    auto const tail = "__" + cond + ".solution.json";
    for (auto const& e : fs::directory_iterator(dir))
        if (e.path().filename().string().ends_with(tail)) return true;
    return false;
}

/// Persisted solutions from `solutions_dir` when it has them, otherwise EFA on the clean matrices.
std::vector<FactorSolution> solutions_in(fs::path const& clean_dir, std::string const& solutions_dir,
                                         std::string const& cond, Globals const& g) {
    if (!solutions_dir.empty() && has_solutions(solutions_dir, cond)) return storage::read_solutions(solutions_dir, cond);
    FactorOptions opt;
    opt.seed = g.seed_or(0);
    return solve_matrices(storage::read_matrices(clean_dir, cond), opt, g.jobs);
}

std::vector<storage::ItemInfo> items_in(fs::path const& dir) {
    if (fs::exists(dir / "items.csv")) return storage::read_items(dir / "items.csv");
    return {};
}

void print(Paths const& files) {
    for (auto const& f : files) std::cout << f.string() << '\n';
}

void write_text(fs::path const& path, std::string const& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
    std::cout << path.string() << '\n';
}

std::string const N = "neutral", HS = "human_simulation", LA = "llm_analog";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Questionnaire survey and analysis pipeline for language models", "pinlab"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

    // bank validate
    auto* bank = app.add_subcommand("bank", "Item-bank utilities")->require_subcommand(1);
    auto* validate = bank->add_subcommand("validate", "Parse and validate an item bank");
    std::string bank_path;
    validate->add_option("path", bank_path)->required()->check(CLI::ExistingFile);
    validate->callback([&] {
        auto const b = load_item_bank(bank_path);
        for (auto const& q : b.questionnaires())
            std::cout << q.questionnaire_id << '\t' << q.items.size() << " items\t" << q.scale.min_value << '-'
                      << q.scale.max_value << '\t' << q.full_name << '\n';
        std::cout << b.questionnaires().size() << " questionnaires, " << b.item_count() << " items\n";
    });

    // run
    auto* run = app.add_subcommand("run", "Administer a survey plan against a chat-completions endpoint");
    std::string plan_path;
    run->add_option("--plan", plan_path)->required()->check(CLI::ExistingFile);
    run->callback([&] {
        auto const plan = load_plan(plan_path);
        auto const log = run_survey(plan, g.out_dir());
        std::size_t ok = 0;
        for (auto const& r : log.records) ok += r.status == ResponseStatus::ok;
        std::cout << log.records.size() << " records, " << ok << " ok\n";
    });

    // clean
    auto* clean = app.add_subcommand("clean", "Parse responses and build per-questionnaire matrices");
    std::vector<std::string> log_paths;
    std::string clean_bank;
    clean->add_option("--log", log_paths)->required()->check(CLI::ExistingFile);
    clean->add_option("--bank", clean_bank)->required()->check(CLI::ExistingFile);
    clean->callback([&] {
        std::vector<fs::path> paths(log_paths.begin(), log_paths.end());
        auto const sum = storage::write_clean_outputs(g.out_dir(), ResponseLog::load_all(paths), load_item_bank(clean_bank));
        std::cout << sum.matrices << " matrices (" << sum.viable << " viable), " << sum.oob_rows
                  << " out-of-range responses\n";
    });

    // efa
    auto* efa = app.add_subcommand("efa", "Factor-analyse every viable matrix");
    std::string matrices_dir;
    int pa_iterations = 200;
    efa->add_option("--matrices", matrices_dir)->required()->check(CLI::ExistingDirectory);
    efa->add_option("--pa-iterations", pa_iterations)->check(CLI::PositiveNumber);
    efa->callback([&] {
        FactorOptions opt;
        opt.seed = g.seed_or(0);
        opt.pa_iterations = pa_iterations;
        for (auto const* c : {&N, &HS, &LA})
            for (auto const& s : solve_matrices(storage::read_matrices(matrices_dir, *c), opt, g.jobs)) {
                storage::write_solution(g.out_dir(), s);
                std::cout << s.questionnaire_id << '\t' << s.condition_id << '\t' << to_string(s.method) << '\t'
                          << s.n_factors << " factors\n";
            }
    });

    // axis / pinocchio / clusters share their inputs
    std::string neutral_dir, hs_dir, la_dir, solutions_dir;
    int n_boot = 1000;
    std::size_t top_n = 80;
    auto inputs = [&](CLI::App* sc, bool hs_required) {
        sc->add_option("--neutral", neutral_dir, "Clean directory holding the neutral condition")
            ->required()
            ->check(CLI::ExistingDirectory);
        auto* hs = sc->add_option("--hs", hs_dir, "Clean directory holding the human_simulation condition")
                       ->check(CLI::ExistingDirectory);
        if (hs_required) hs->required();
        sc->add_option("--la", la_dir, "Clean directory holding the llm_analog condition")->check(CLI::ExistingDirectory);
        sc->add_option("--solutions", solutions_dir, "Output of `efa`; solved on the fly when absent")
            ->check(CLI::ExistingDirectory);
    };
    auto pinocchio_table = [&] {
        return pinocchio_scores(storage::read_raw_responses(neutral_dir, N), storage::read_raw_responses(hs_dir, HS));
    };

    auto* axis = app.add_subcommand("axis", "Global PCA axis with bootstrap CIs");
    inputs(axis, false);
    axis->add_option("--n-boot", n_boot)->check(CLI::PositiveNumber);
    axis->callback([&] {
        auto const out = g.out_dir();
        auto const neutral = solutions_in(neutral_dir, solutions_dir, N, g);
        std::optional<ResponseTable> raw;
        std::optional<PinocchioTable> table;
        if (!hs_dir.empty()) {
            raw = storage::read_raw_responses(neutral_dir, N);
            table = pinocchio_table();
        }
        auto const st = compute_axis(neutral, raw ? &*raw : nullptr, table ? &*table : nullptr, g.seed_or(0), n_boot);
        print(write_axis_tables(out, st));
        write_text(out / "ranking.svg", render_ranking(st.rows(), provider_map(st.axis.model_slugs)));
        if (!la_dir.empty()) {
            auto const cmp = compare_conditions(st.axis, neutral, solutions_in(la_dir, solutions_dir, LA, g), LA);
            print(write_condition_comparison(out, cmp, LA));
        }
    });

    auto* pinocchio = app.add_subcommand("pinocchio", "Item variance ratios between neutral and human simulation");
    inputs(pinocchio, true);
    pinocchio->callback([&] {
        auto const out = g.out_dir();
        auto const table = pinocchio_table();
        print(write_pinocchio_tables(out, table, items_in(neutral_dir)));
        auto const hs = solutions_in(hs_dir, solutions_dir, HS, g);
        if (hs.empty()) return;
        auto const neutral = solutions_in(neutral_dir, solutions_dir, N, g);
        print(write_loading_shift(out, loading_shift_analysis(table, neutral, hs)));
    });

    auto* clusters = app.add_subcommand("clusters", "Ward clustering of the top-pi items against PC1");
    inputs(clusters, true);
    clusters->add_option("--top-n", top_n)->check(CLI::PositiveNumber);
    clusters->callback([&] {
        auto const raw = storage::read_raw_responses(neutral_dir, N);
        auto const table = pinocchio_table();
        auto const st = compute_axis(solutions_in(neutral_dir, solutions_dir, N, g), &raw, &table, g.seed_or(0), 1);
        print(write_clusters(g.out_dir(), cluster_top_items(raw, table, st.axis.pc1(), top_n)));
    });

    // ssd
    auto* ssd = app.add_subcommand("ssd", "Semantic gradient of item texts against neutral loadings");
    std::string ssd_bank, loadings_dir;
    SsdSettings ssd_settings;
    std::string vectors, freq;
    ssd->add_option("--items", ssd_bank, "Item bank")->required()->check(CLI::ExistingFile);
    ssd->add_option("--loadings", loadings_dir, "Solution directory")->required()->check(CLI::ExistingDirectory);
    ssd->add_option("--vectors", vectors)->required()->check(CLI::ExistingFile);
    ssd->add_option("--freq", freq)->required()->check(CLI::ExistingFile);
    ssd->add_option("--k", ssd_settings.k)->check(CLI::PositiveNumber);
    ssd->add_option("--tail-n", ssd_settings.tail_n)->check(CLI::PositiveNumber);
    ssd->callback([&] {
        ssd_settings.vectors = vectors;
        ssd_settings.freq = freq;
        auto const b = load_item_bank(ssd_bank);
        std::vector<storage::ItemInfo> items;
        for (auto const& q : b.questionnaires())
            for (auto const& it : q.items) items.push_back({it.item_id, q.questionnaire_id, q.full_name, it.text});
        auto const st = compute_ssd(items, storage::read_solutions(loadings_dir, N), ssd_settings);
        print(write_ssd(g.out_dir(), st));
    });

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic population with planted structure");
    std::string synth_config;
    synth->add_option("--config", synth_config)->check(CLI::ExistingFile);
    synth->callback([&] {
        SynthConfig cfg = synth_config.empty() ? SynthConfig{} : load_synth_config(synth_config);
        if (g.seed) cfg.seed = *g.seed;
        cfg.validate();
        write_population(generate_population(cfg), cfg, g.out_dir());
        std::cout << "wrote " << g.out_dir().string() << '\n';
    });

    // report
    auto* report = app.add_subcommand("report", "Run the full pipeline from a config file or manifest");
    std::string config_path;
    report->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    report->callback([&] {
        auto cfg = load_pipeline_config(config_path);
        if (!g.out.empty()) cfg.out = fs::absolute(g.out);
        if (g.seed) cfg.seed = *g.seed;
        if (g.jobs > 1) cfg.jobs = g.jobs;
        auto const bundle = run_pipeline(cfg);
        for (auto const& s : bundle.stages)
            std::cout << s.name << '\t' << s.status << (s.note.empty() ? "" : "\t" + s.note) << '\n';
        std::cout << bundle.artifacts.size() << " artifacts, manifest " << bundle.manifest.string() << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        return app.exit(e);
    } catch (ParseError const& e) {
        std::cerr << "pinlab: parse error: " << e.what() << '\n';
        return 1;
    } catch (ValidationError const& e) {
        std::cerr << "pinlab: invalid: " << e.what() << '\n';
        return 1;
    } catch (std::exception const& e) {
        std::cerr << "pinlab: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
