#include "pinlab/report.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "json.hpp"

#include "pinlab/csv.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/svg.hpp"

namespace pinlab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> default_positive_keywords() {
    return {"satisfi", "happy", "joy", "content", "enjoy", "ideal", "love", "excit"};
}

FactorOptions PipelineConfig::factor_options() const {
    FactorOptions o;
    o.pa_iterations = pa_iterations;
    o.pa_percentile = pa_percentile;
    o.seed = seed;
    return o;
}

namespace {

ordered_json config_json(PipelineConfig const& c) {
    ordered_json j;
    j["bank"] = c.bank.string();
    ordered_json logs = ordered_json::object();
    for (auto const& [cond, paths] : c.logs) {
        ordered_json list = ordered_json::array();
        for (auto const& p : paths) list.push_back(p.string());
        logs[cond] = list;
    }
    j["logs"] = logs;
    j["out"] = c.out.string();
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["efa"] = {{"pa_iterations", c.pa_iterations}, {"pa_percentile", c.pa_percentile}};
    j["axis"] = {{"n_boot", c.n_boot}};
    j["clusters"] = {{"top_n", c.top_n}, {"k_max", c.k_max}};
    j["item_axis"] = {{"min_n", c.item_axis_min_n}};
    j["valence"] = {{"positive", c.positive_keywords}, {"negative", c.negative_keywords}};
    if (c.ssd)
        j["ssd"] = {{"vectors", c.ssd->vectors.string()},
                    {"freq", c.ssd->freq.string()},
                    {"k", c.ssd->k},
                    {"tail_n", c.ssd->tail_n},
                    {"a", c.ssd->a}};
    return j;
}

fs::path resolve(fs::path const& base, std::string const& p) {
    fs::path const path(p);
    return (path.is_absolute() ? path : fs::absolute(base / path)).lexically_normal();
}

template <typename T>
void read_opt(nlohmann::json const& obj, char const* key, T& into, std::string const& where) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (nlohmann::json::exception const& e) {
        throw ValidationError(where + "." + key, e.what());
    }
}

}  // namespace

std::string PipelineConfig::to_json() const { return config_json(*this).dump(2); }

PipelineConfig parse_pipeline_config(std::string const& text, fs::path const& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const& e) {
        throw ParseError(std::string("config: ") + e.what(), 0);
    }
    // A run manifest carries the resolved config under "config".
    if (j.is_object() && j.contains("config") && j.contains("artifacts")) j = j.at("config");
    if (!j.is_object()) throw ValidationError("config", "expected a JSON object");

    PipelineConfig c;
    if (!j.contains("bank")) throw ValidationError("bank", "required");
    c.bank = resolve(base_dir, j.at("bank").get<std::string>());
    if (!j.contains("logs") || !j.at("logs").is_object()) throw ValidationError("logs", "required object");
    for (auto const& [cond, v] : j.at("logs").items()) {
        if (!parse_condition(cond)) throw ValidationError("logs." + cond, "unknown condition");
        auto& paths = c.logs[cond];
        if (v.is_string())
            paths.push_back(resolve(base_dir, v.get<std::string>()));
        else if (v.is_array())
            for (auto const& p : v) paths.push_back(resolve(base_dir, p.get<std::string>()));
        else
            throw ValidationError("logs." + cond, "expected a path or a list of paths");
    }
    c.out = resolve(base_dir, j.value("out", std::string("report")));
    read_opt(j, "seed", c.seed, "config");
    read_opt(j, "jobs", c.jobs, "config");
    if (j.contains("efa")) {
        read_opt(j["efa"], "pa_iterations", c.pa_iterations, "efa");
        read_opt(j["efa"], "pa_percentile", c.pa_percentile, "efa");
    }
    if (j.contains("axis")) read_opt(j["axis"], "n_boot", c.n_boot, "axis");
    if (j.contains("clusters")) {
        read_opt(j["clusters"], "top_n", c.top_n, "clusters");
        read_opt(j["clusters"], "k_max", c.k_max, "clusters");
    }
    if (j.contains("item_axis")) read_opt(j["item_axis"], "min_n", c.item_axis_min_n, "item_axis");
    if (j.contains("valence")) {
        read_opt(j["valence"], "positive", c.positive_keywords, "valence");
        read_opt(j["valence"], "negative", c.negative_keywords, "valence");
    }
    if (j.contains("ssd")) {
        auto const& s = j["ssd"];
        if (!s.contains("vectors") || !s.contains("freq")) throw ValidationError("ssd", "vectors and freq are required");
        SsdSettings ssd;
        ssd.vectors = resolve(base_dir, s.at("vectors").get<std::string>());
        ssd.freq = resolve(base_dir, s.at("freq").get<std::string>());
        read_opt(s, "k", ssd.k, "ssd");
        read_opt(s, "tail_n", ssd.tail_n, "ssd");
        read_opt(s, "a", ssd.a, "ssd");
        if (ssd.k < 1) throw ValidationError("ssd.k", "must be >= 1");
        if (!(ssd.a > 0)) throw ValidationError("ssd.a", "must be positive");
        c.ssd = ssd;
    }
    if (c.jobs < 1) throw ValidationError("jobs", "must be >= 1");
    if (c.n_boot < 1) throw ValidationError("axis.n_boot", "must be >= 1");
    if (c.pa_iterations < 1) throw ValidationError("efa.pa_iterations", "must be >= 1");
    if (c.k_max < 2) throw ValidationError("clusters.k_max", "must be >= 2");
    return c;
}

PipelineConfig load_pipeline_config(fs::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string const text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pipeline_config(text, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------

std::vector<FactorSolution> solve_matrices(std::vector<ResponseMatrix> const& matrices, FactorOptions const& options,
                                           int jobs) {
    std::vector<ResponseMatrix const*> todo;
    for (auto const& m : matrices)
        if (m.viable) todo.push_back(&m);
    std::vector<FactorSolution> out(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < todo.size();) {
            try {
                out[i] = primary_factor_solution(*todo[i], options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    auto const n_threads = std::min<std::size_t>(std::size_t(std::max(jobs, 1)), todo.size());
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    for (auto const& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<ModelAxisScore> AxisStage::rows() const {
    return model_axis_scores(axis, bootstrap, pi ? &pi->pi_m : nullptr, specificity ? &*specificity : nullptr);
}

AxisStage compute_axis(std::vector<FactorSolution> const& neutral, ResponseTable const* neutral_raw,
                       PinocchioTable const* table, std::uint64_t seed, int n_boot) {
    AxisStage st;
    st.score_matrix =
        assemble_score_matrix(neutral, neutral.empty() ? std::string_view("neutral") : neutral.front().condition_id);
    if (table && neutral_raw) {
        st.pi = model_pi_score(*neutral_raw, *table);
        st.specificity = specificity_contrast(*neutral_raw, *table, st.pi->pi_m);
    }
    st.axis = global_pca(st.score_matrix, st.pi ? &st.pi->pi_m : nullptr);
    st.bootstrap = bootstrap_axis(st.score_matrix, st.axis, n_boot, seed);
    return st;
}

ConditionComparison compare_conditions(AxisSolution const& reference, std::vector<FactorSolution> const& ref_solutions,
                                       std::vector<FactorSolution> const& other_solutions,
                                       std::string_view other_condition) {
    ConditionComparison cmp;
    auto const ref_pc1 = reference.pc1();
    auto const sm = assemble_score_matrix(other_solutions, other_condition);
    cmp.other_axis = global_pca(sm, &ref_pc1);
    auto const other_pc1 = cmp.other_axis.pc1();
    cmp.shift = condition_shift(ref_pc1, other_pc1);
    cmp.rank = rank_agreement(ref_pc1, other_pc1);

    double sum = 0;
    int n = 0;
    for (auto const& a : ref_solutions) {
        auto it = std::find_if(other_solutions.begin(), other_solutions.end(),
                               [&](auto const& b) { return b.questionnaire_id == a.questionnaire_id; });
        if (it == other_solutions.end()) continue;
        double phi = kMissing;
        try {
            phi = tucker_congruence(a, *it).mean_abs_phi;
        } catch (PreconditionError const&) {
            // fewer than two shared items after deletion
        }
        cmp.congruence.emplace_back(a.questionnaire_id, phi);
        if (std::isfinite(phi)) {
            sum += phi;
            ++n;
        }
    }
    if (n > 0) cmp.mean_congruence = sum / n;
    return cmp;
}

SsdStage compute_ssd(std::vector<storage::ItemInfo> const& items, std::vector<FactorSolution> const& neutral,
                     SsdSettings const& settings) {
    auto const table = EmbeddingTable::load(settings.vectors, settings.freq);
    SsdStage st;
    std::vector<TextItem> texts;
    std::map<std::string, double> target;
    for (auto const& it : items) {
        std::optional<double> loading;
        for (auto const& s : neutral)
            if (s.questionnaire_id == it.questionnaire_id) loading = s.primary_loading(it.item_id);
        if (!loading) {
            st.missing_loading.push_back(it.item_id);
            continue;
        }
        texts.push_back({it.item_id, it.text});
        target[it.item_id] = *loading;
    }
    st.docs = embed_items(texts, table, settings.a);
    Vector y(Eigen::Index(st.docs.item_ids.size()));
    for (std::size_t i = 0; i < st.docs.item_ids.size(); ++i) y(Eigen::Index(i)) = target.at(st.docs.item_ids[i]);
    st.gradient = fit_gradient(st.docs.vectors, y, settings.k);
    st.poles = characterize_poles(st.gradient, st.docs, texts, settings.tail_n);
    return st;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

using csv::number;

std::map<std::string, storage::ItemInfo const*> item_index(std::vector<storage::ItemInfo> const& items) {
    std::map<std::string, storage::ItemInfo const*> out;
    for (auto const& it : items) out[it.item_id] = &it;
    return out;
}

std::string join(std::vector<std::string> const& v, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

fs::path put(fs::path const& dir, std::string const& name, std::vector<csv::Row> const& rows) {
    fs::create_directories(dir);
    auto const path = dir / name;
    csv::write_file(path, rows);
    return path;
}

csv::Row test_cells(CorrelationTest const& t) {
    return {number(t.r), number(t.p), std::to_string(t.n), t.degenerate ? "1" : "0"};
}

}  // namespace

std::map<std::string, std::string> provider_map(std::vector<std::string> const& slugs) {
    std::map<std::string, std::string> out;
    for (auto const& s : slugs) out[s] = provider_from_slug(s);
    return out;
}

Paths write_axis_tables(fs::path const& dir, AxisStage const& st) {
    Paths out;
    std::vector<csv::Row> rows{{"model", "pc1", "ci_low", "ci_high", "pi_m", "specificity"}};
    for (auto const& r : st.rows())
        rows.push_back({r.model, number(r.pc1), number(r.ci_low), number(r.ci_high), number(r.pi_m),
                        number(r.specificity)});
    out.push_back(put(dir, "axis_scores.csv", rows));

    auto const& ax = st.axis;
    csv::Row head{"questionnaire"};
    for (Eigen::Index k = 0; k < ax.questionnaire_loadings.cols(); ++k) head.push_back("PC" + std::to_string(k + 1));
    rows = {head};
    for (std::size_t q = 0; q < ax.questionnaire_ids.size(); ++q) {
        csv::Row r{ax.questionnaire_ids[q]};
        for (Eigen::Index k = 0; k < ax.questionnaire_loadings.cols(); ++k)
            r.push_back(number(ax.questionnaire_loadings(Eigen::Index(q), k)));
        rows.push_back(r);
    }
    out.push_back(put(dir, "axis_loadings.csv", rows));

    rows = {{"component", "explained_ratio"}};
    for (Eigen::Index k = 0; k < ax.explained_ratio.size(); ++k)
        rows.push_back({"PC" + std::to_string(k + 1), number(ax.explained_ratio(k))});
    out.push_back(put(dir, "axis_explained.csv", rows));

    rows = {{"statistic", "value"},
            {"models", std::to_string(ax.model_slugs.size())},
            {"questionnaires", std::to_string(ax.questionnaire_ids.size())},
            {"sign_anchor", ax.sign_anchor},
            {"bootstrap_iterations", std::to_string(st.bootstrap.iterations)},
            {"bootstrap_redraws", std::to_string(st.bootstrap.redraws)}};
    if (st.pi) {
        auto const pc1 = ax.pc1();
        auto const t = pearson_test(pc1.values, st.pi->pi_m.aligned_to(pc1.slugs));
        rows.push_back({"pearson_pc1_pi_m", number(t.r)});
        rows.push_back({"pearson_pc1_pi_m_p", number(t.p)});
        rows.push_back({"pi_m_items", std::to_string(st.pi->item_ids.size())});
    }
    out.push_back(put(dir, "axis_summary.csv", rows));

    rows = {{"kind", "id", "reason"}};
    for (auto const& d : st.score_matrix.excluded_models) rows.push_back({"model", d.id, d.reason});
    for (auto const& d : st.score_matrix.excluded_questionnaires) rows.push_back({"questionnaire", d.id, d.reason});
    out.push_back(put(dir, "axis_excluded.csv", rows));

    if (st.pi) {
        rows = {{"item_id", "weight"}};
        for (std::size_t i = 0; i < st.pi->item_ids.size(); ++i)
            rows.push_back({st.pi->item_ids[i], number(st.pi->weights(Eigen::Index(i)))});
        out.push_back(put(dir, "pi_m_weights.csv", rows));
    }
    return out;
}

Paths write_pinocchio_tables(fs::path const& dir, PinocchioTable const& table,
                             std::vector<storage::ItemInfo> const& items) {
    auto const idx = item_index(items);
    std::vector<csv::Row> rows{{"#", "Questionnaire", "Item", "pi", "item_id", "var_neutral", "var_hs", "n_neutral",
                                "n_hs", "pi_capped", "log_pi", "included"}};
    auto row = [&](PinocchioRow const& r, std::string rank) {
        auto it = idx.find(r.item_id);
        std::string q, text;
        if (it != idx.end()) {
            q = it->second->questionnaire_name.empty() ? it->second->questionnaire_id : it->second->questionnaire_name;
            text = it->second->text;
        }
        rows.push_back({std::move(rank), q, text, csv::fixed(r.pi, 2), r.item_id, number(r.var_neutral),
                        number(r.var_hs), std::to_string(r.n_neutral), std::to_string(r.n_hs), number(r.pi_capped),
                        number(r.log_pi), r.included ? "1" : "0"});
    };
    int rank = 0;
    for (auto const* r : table.ranked()) row(*r, std::to_string(++rank));
    for (auto const& r : table.rows)
        if (!r.included) row(r, "");
    return {put(dir, "pinocchio_items.csv", rows)};
}

Paths write_loading_shift(fs::path const& dir, LoadingShiftReport const& report) {
    std::vector<csv::Row> rows{{"item_id", "log_pi", "abs_loading_neutral", "abs_loading_hs", "delta"}};
    for (auto const& s : report.items)
        rows.push_back({s.item_id, number(s.log_pi), number(s.abs_loading_neutral), number(s.abs_loading_hs),
                        number(s.delta)});
    Paths out{put(dir, "loading_shift.csv", rows)};
    rows = {{"target", "method", "r", "p", "n", "degenerate"}};
    for (auto const& c : report.correlations) {
        for (auto const& [name, t] : {std::pair{"pearson", c.pearson}, std::pair{"spearman", c.spearman}}) {
            csv::Row r{c.target, name};
            for (auto& cell : test_cells(t)) r.push_back(cell);
            rows.push_back(r);
        }
    }
    out.push_back(put(dir, "loading_shift_corr.csv", rows));
    return out;
}

Paths write_clusters(fs::path const& dir, ClusterReport const& report) {
    std::vector<csv::Row> rows{{"item_id", "cluster"}};
    auto const chosen = report.assignments.find(report.chosen_k);
    for (std::size_t i = 0; i < report.item_ids.size(); ++i)
        rows.push_back({report.item_ids[i], chosen == report.assignments.end()
                                                ? std::string()
                                                : std::to_string(chosen->second[i] + 1)});
    for (auto const& id : report.excluded_items) rows.push_back({id, ""});
    Paths out{put(dir, "clusters.csv", rows)};

    rows = {{"k", "avg_silhouette", "chosen"}};
    for (auto const& [k, s] : report.avg_silhouette)
        rows.push_back({std::to_string(k), number(s), k == report.chosen_k ? "1" : "0"});
    out.push_back(put(dir, "clusters_silhouette.csv", rows));

    rows = {{"cluster", "size", "r", "p", "n", "degenerate"}};
    for (auto const& c : report.axis_correlations) {
        csv::Row r{std::to_string(c.cluster + 1), std::to_string(c.size)};
        for (auto& cell : test_cells(c.test)) r.push_back(cell);
        rows.push_back(r);
    }
    if (report.non_separable) rows.push_back({"non_separable", "", "", "", "", "1"});
    out.push_back(put(dir, "clusters_axis.csv", rows));
    return out;
}

Paths write_item_axis(fs::path const& dir, std::vector<ItemAxisCorrelation> const& corr,
                      std::vector<storage::ItemInfo> const& items) {
    auto const idx = item_index(items);
    std::vector<csv::Row> rows{{"rank", "item_id", "questionnaire", "text", "r", "p", "n"}};
    int rank = 0;
    for (auto const& c : corr) {
        auto it = idx.find(c.item_id);
        rows.push_back({std::to_string(++rank), c.item_id, it == idx.end() ? "" : it->second->questionnaire_id,
                        it == idx.end() ? "" : it->second->text, number(c.r), number(c.p), std::to_string(c.n)});
    }
    return {put(dir, "item_axis_corr.csv", rows)};
}

Paths write_valence(fs::path const& dir, ValenceReport const& report) {
    return {put(dir, "valence.csv",
                {{"group", "n_items", "mean_variance"},
                 {"positive", std::to_string(report.n_pos), number(report.mean_var_pos)},
                 {"negative", std::to_string(report.n_neg), number(report.mean_var_neg)}})};
}

Paths write_condition_comparison(fs::path const& dir, ConditionComparison const& cmp,
                                 std::string_view other_condition) {
    std::string const other(other_condition);
    auto const& s = cmp.shift;
    std::vector<csv::Row> rows{{"model", "reference_pc1", other + "_pc1_rescaled", "shift"}};
    // reference values are recovered from the shift definition
    Vector const raw = cmp.other_axis.pc1().aligned_to(s.models);
    for (std::size_t i = 0; i < s.models.size(); ++i) {
        double const oth = (s.sign_flipped ? -1.0 : 1.0) * raw(Eigen::Index(i)) / s.scale_ratio;
        double const r = oth - s.shift(Eigen::Index(i));
        rows.push_back({s.models[i], number(r), number(oth), number(s.shift(Eigen::Index(i)))});
    }
    Paths out{put(dir, "condition_shift.csv", rows)};

    rows = {{"statistic", "value"},
            {"condition", other},
            {"models", std::to_string(s.models.size())},
            {"scale_ratio", number(s.scale_ratio)},
            {"mean_shift", number(s.mean_shift)},
            {"sign_flipped", s.sign_flipped ? "1" : "0"},
            {"spearman_rho", number(cmp.rank.r)},
            {"spearman_p", number(cmp.rank.p)},
            {"mean_congruence", number(cmp.mean_congruence)},
            {other + "_pc1_explained", cmp.other_axis.explained_ratio.size()
                                           ? number(cmp.other_axis.explained_ratio(0))
                                           : std::string()}};
    out.push_back(put(dir, "condition_summary.csv", rows));

    rows = {{"questionnaire", "mean_abs_phi"}};
    for (auto const& [q, phi] : cmp.congruence) rows.push_back({q, number(phi)});
    out.push_back(put(dir, "congruence.csv", rows));
    return out;
}

Paths write_ssd(fs::path const& dir, SsdStage const& st) {
    auto const& g = st.gradient;
    std::vector<csv::Row> rows{{"statistic", "value"},
                               {"K", std::to_string(g.K)},
                               {"n", std::to_string(st.docs.item_ids.size())},
                               {"r2", number(g.r2)},
                               {"r2_adj", number(g.r2_adj)},
                               {"f_stat", number(g.f_stat)},
                               {"p_value", number(g.p_value)},
                               {"r_pred", number(g.r_pred)},
                               {"intercept", number(g.intercept)},
                               {"tail_n", std::to_string(st.poles.tail_n)}};
    Paths out{put(dir, "ssd_fit.csv", rows)};

    rows = {{"pole", "cluster", "size", "keywords", "items"}};
    int idx[2] = {0, 0};
    for (auto const& c : st.poles.clusters) {
        int const n = ++idx[c.sign > 0 ? 0 : 1];
        rows.push_back({c.sign > 0 ? "positive" : "negative", std::to_string(n), std::to_string(c.size()),
                        join(c.keywords, " "), join(c.item_ids, " ")});
    }
    out.push_back(put(dir, "ssd_poles.csv", rows));

    rows = {{"item_id", "fitted"}};
    for (std::size_t i = 0; i < st.docs.item_ids.size(); ++i)
        rows.push_back({st.docs.item_ids[i], number(g.fitted(Eigen::Index(i)))});
    out.push_back(put(dir, "ssd_items.csv", rows));

    rows = {{"item_id", "reason"}};
    for (auto const& id : st.missing_loading) rows.push_back({id, "no_neutral_loading"});
    for (auto const& id : st.docs.dropped) rows.push_back({id, "no_vocabulary_tokens"});
    out.push_back(put(dir, "ssd_excluded.csv", rows));
    return out;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

struct Skip {
    std::string reason;
};

class Run {
public:
    explicit Run(PipelineConfig const& config) : config_(config) {
        bundle_.root = config.out;
        prepare_root();
    }

    /// Runs one stage. The body returns a note; throwing Skip marks the stage
    /// skipped. With `soft`, a PreconditionError also becomes a skip.
    template <typename F>
    void stage(std::string name, F&& body, bool soft = false) {
        try {
            std::string note = body();
            bundle_.stages.push_back({std::move(name), "completed", std::move(note)});
        } catch (Skip const& s) {
            bundle_.stages.push_back({std::move(name), "skipped", s.reason});
        } catch (PreconditionError const& e) {
            if (!soft) return fail(std::move(name), e.what());
            bundle_.stages.push_back({std::move(name), "skipped", e.what()});
        } catch (std::exception const& e) {
            fail(std::move(name), e.what());
        }
    }

    bool skipped(std::string_view name) const {
        for (auto const& s : bundle_.stages)
            if (s.name == name) return s.status != "completed";
        return true;
    }

    void add(Paths const& files, std::string const& stage) {
        for (auto const& f : files)
            bundle_.artifacts.push_back(
                {fs::relative(f, bundle_.root).generic_string(), storage::sha256_file(f), stage});
    }

    void input(std::string role, fs::path const& path) {
        inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", storage::sha256_file(path)}});
    }

    ReportBundle finish() {
        write_manifest();
        return bundle_;
    }

private:
    [[noreturn]] void fail(std::string name, std::string what) {
        bundle_.stages.push_back({std::move(name), "failed", what});
        write_manifest();
        throw;
    }

    void prepare_root() {
        auto const& root = bundle_.root;
        if (fs::exists(root) && !fs::is_empty(root)) {
            // Only a previous bundle is overwritten.
            if (!fs::exists(root / "manifest.json"))
                throw PreconditionError("output directory " + root.string() + " is not empty and holds no manifest");
            for (auto const* sub : {"clean", "solutions", "tables", "figures"}) fs::remove_all(root / sub);
            fs::remove(root / "manifest.json");
        }
        fs::create_directories(root);
    }

    void write_manifest() {
        ordered_json j;
        j["tool"] = "pinlab";
        j["version"] = kVersion;
        j["config"] = config_json(config_);
        j["inputs"] = inputs_;
        ordered_json stages = ordered_json::array();
        for (auto const& s : bundle_.stages) stages.push_back({{"name", s.name}, {"status", s.status}, {"note", s.note}});
        j["stages"] = stages;
        ordered_json arts = ordered_json::array();
        for (auto const& a : bundle_.artifacts)
            arts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"stage", a.stage}});
        j["artifacts"] = arts;
        bundle_.manifest = bundle_.root / "manifest.json";
        std::ofstream out(bundle_.manifest, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
        if (!out) throw IoError("cannot write " + bundle_.manifest.string());
    }

    PipelineConfig const& config_;
    ReportBundle bundle_;
    ordered_json inputs_ = ordered_json::array();
};

std::string cond(ConditionId c) { return std::string(to_string(c)); }

}  // namespace

ReportBundle run_pipeline(PipelineConfig const& config) {
    Run run(config);
    auto const root = config.out;
    auto const clean = root / "clean", sol_dir = root / "solutions", tables = root / "tables", figures = root / "figures";
    auto const N = cond(ConditionId::neutral), HS = cond(ConditionId::human_simulation),
               LA = cond(ConditionId::llm_analog);

    ItemBank bank;
    std::set<std::string> conditions;
    run.stage("clean", [&] {
        run.input("bank", config.bank);
        bank = load_item_bank(config.bank);
        ResponseLog log;
        for (auto const& [c, paths] : config.logs)
            for (auto const& p : paths) {
                run.input("log:" + c, p);
                for (auto& r : ResponseLog::load(p).records)
                    if (r.condition_id == c) log.records.push_back(std::move(r));
            }
        if (config.ssd) {
            run.input("ssd:vectors", config.ssd->vectors);
            run.input("ssd:freq", config.ssd->freq);
        }
        for (auto const& r : log.records) conditions.insert(r.condition_id);
        auto const sum = storage::write_clean_outputs(clean, log, bank);
        run.add(sum.files, "clean");
        return std::to_string(sum.viable) + " of " + std::to_string(sum.matrices) + " matrices viable, " +
               std::to_string(sum.oob_rows) + " out-of-range responses";
    });

    std::map<std::string, std::vector<FactorSolution>> solutions;
    run.stage("efa", [&] {
        std::string note;
        for (auto const& c : conditions) {
            auto const solved = solve_matrices(storage::read_matrices(clean, c), config.factor_options(), config.jobs);
            // Downstream stages consume the persisted form so reruns match.
            for (auto const& s : solved) {
                run.add(storage::write_solution(sol_dir, s), "efa");
                solutions[c].push_back(storage::read_solution(sol_dir, s.questionnaire_id, c));
            }
            note += (note.empty() ? "" : ", ") + c + ": " + std::to_string(solved.size());
        }
        return note;
    });

    std::vector<storage::ItemInfo> items = storage::read_items(clean / "items.csv");
    std::optional<ResponseTable> raw_n;
    if (conditions.contains(N)) raw_n = storage::read_raw_responses(clean, N);

    std::optional<PinocchioTable> table;
    run.stage("pinocchio", [&] {
        if (!raw_n) throw Skip{"no neutral responses"};
        if (!conditions.contains(HS)) throw Skip{"no human_simulation responses"};
        table = pinocchio_scores(*raw_n, storage::read_raw_responses(clean, HS));
        run.add(write_pinocchio_tables(tables, *table, items), "pinocchio");
        return std::to_string(table->ranked().size()) + " of " + std::to_string(table->rows.size()) +
               " items included, cap " + csv::number(table->cap_value);
    });

    std::optional<AxisStage> axis;
    run.stage("axis", [&] {
        if (solutions[N].size() < 2) throw PreconditionError("axis needs at least two neutral factor solutions");
        axis = compute_axis(solutions[N], raw_n ? &*raw_n : nullptr, table ? &*table : nullptr, config.seed,
                            config.n_boot);
        Paths files = write_axis_tables(tables, *axis);
        auto const rows = axis->rows();
        auto const providers = provider_map(axis->axis.model_slugs);
        fs::create_directories(figures);
        auto emit = [&](std::string const& name, std::string const& svg) {
            std::ofstream(figures / name, std::ios::binary) << svg;
            files.push_back(figures / name);
        };
        emit("ranking.svg", render_ranking(rows, providers));
        if (axis->specificity) {
            std::vector<ScatterPoint> pts;
            for (auto const& r : rows) pts.push_back({r.model, providers.at(r.model), r.pc1, r.specificity});
            emit("specificity.svg", render_scatter(pts, {"Specificity contrast", "PC1", "Pi_m minus low-pi mean z",
                                                         false, true}));
        }
        run.add(files, "axis");
        return "PC1 explains " + csv::fixed(100 * axis->axis.explained_ratio(0), 1) + "%, anchor " +
               axis->axis.sign_anchor;
    });
    if (run.skipped("axis")) return run.finish();
    auto const pc1 = axis->axis.pc1();

    run.stage(
        "loading_shift",
        [&] {
            if (!table) throw Skip{"pinocchio table unavailable"};
            if (solutions[HS].empty()) throw Skip{"no human_simulation factor solutions"};
            auto const rep = loading_shift_analysis(*table, solutions[N], solutions[HS]);
            run.add(write_loading_shift(tables, rep), "loading_shift");
            return std::to_string(rep.items.size()) + " items";
        },
        true);

    run.stage(
        "clusters",
        [&] {
            if (!table) throw Skip{"pinocchio table unavailable"};
            std::size_t available = 0;
            for (auto const* r : table->ranked()) available += raw_n->col_of(r->item_id).has_value();
            auto const top_n = std::min(config.top_n, available);
            if (top_n < 3) throw Skip{"fewer than three included items"};
            auto const rep = cluster_top_items(*raw_n, *table, pc1, top_n, config.k_max);
            run.add(write_clusters(tables, rep), "clusters");
            std::string note = "top " + std::to_string(top_n) + " items";
            if (top_n < config.top_n) note += " (clamped from " + std::to_string(config.top_n) + ")";
            return note + (rep.non_separable ? ", non-separable" : ", k = " + std::to_string(rep.chosen_k));
        },
        true);

    run.stage(
        "item_axis",
        [&] {
            if (!raw_n) throw Skip{"no neutral responses"};
            auto const rows = item_axis_correlations(*raw_n, pc1, config.item_axis_min_n);
            run.add(write_item_axis(tables, rows, items), "item_axis");
            return std::to_string(rows.size()) + " items";
        },
        true);

    run.stage(
        "valence",
        [&] {
            if (!raw_n) throw Skip{"no neutral responses"};
            if (config.positive_keywords.empty()) throw Skip{"no positive keyword list configured"};
            if (config.negative_keywords.empty()) throw Skip{"no negative keyword list configured"};
            auto const rep = valence_variance(bank, *raw_n, config.positive_keywords, config.negative_keywords);
            run.add(write_valence(tables, rep), "valence");
            return std::to_string(rep.n_pos) + " positive, " + std::to_string(rep.n_neg) + " negative items";
        },
        true);

    run.stage(
        "condition_shift",
        [&] {
            if (solutions[LA].size() < 2) throw Skip{"fewer than two llm_analog factor solutions"};
            auto const cmp = compare_conditions(axis->axis, solutions[N], solutions[LA], LA);
            Paths files = write_condition_comparison(tables, cmp, LA);
            auto const providers = provider_map(cmp.shift.models);
            std::vector<ScatterPoint> pts;
            Vector const ref = pc1.aligned_to(cmp.shift.models);
            for (std::size_t i = 0; i < cmp.shift.models.size(); ++i) {
                auto const e = Eigen::Index(i);
                pts.push_back({cmp.shift.models[i], providers.at(cmp.shift.models[i]), ref(e), ref(e) + cmp.shift.shift(e)});
            }
            fs::create_directories(figures);
            std::ofstream(figures / "condition_shift.svg", std::ios::binary)
                << render_scatter(pts, {"Axis scores by condition", "neutral PC1", "llm_analog PC1 (rescaled)", true,
                                        false});
            files.push_back(figures / "condition_shift.svg");
            run.add(files, "condition_shift");
            return "scale ratio " + csv::fixed(cmp.shift.scale_ratio, 3) + ", mean congruence " +
                   csv::fixed(cmp.mean_congruence, 3);
        },
        true);

    run.stage(
        "ssd",
        [&] {
            if (!config.ssd) throw Skip{"no embeddings configured"};
            auto const st = compute_ssd(items, solutions[N], *config.ssd);
            run.add(write_ssd(tables, st), "ssd");
            return "R2 " + csv::fixed(st.gradient.r2, 3) + ", p " + csv::number(st.gradient.p_value);
        },
        true);

    return run.finish();
}

}  // namespace pinlab
