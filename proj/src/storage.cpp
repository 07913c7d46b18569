#include "pinlab/storage.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <set>

#include <openssl/evp.h>

#include "json.hpp"

#include "pinlab/csv.hpp"
#include "pinlab/errors.hpp"

namespace pinlab::storage {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string stem(std::string_view questionnaire_id, std::string_view condition_id) {
    return std::string(questionnaire_id) + "__" + std::string(condition_id);
}

namespace {

void write_json(fs::path const& path, ordered_json const& j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

nlohmann::json read_json(fs::path const& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

ordered_json dropped_json(std::vector<Dropped> const& d) {
    auto arr = ordered_json::array();
    for (auto const& x : d) arr.push_back({{"id", x.id}, {"reason", x.reason}});
    return arr;
}

std::vector<Dropped> dropped_from(nlohmann::json const& j) {
    std::vector<Dropped> out;
    for (auto const& x : j) out.push_back({x.at("id").get<std::string>(), x.at("reason").get<std::string>()});
    return out;
}

std::vector<csv::Row> matrix_rows(std::string const& corner, std::vector<std::string> const& row_ids,
                                  std::vector<std::string> const& col_ids, Matrix const& values) {
    std::vector<csv::Row> rows;
    csv::Row header{corner};
    header.insert(header.end(), col_ids.begin(), col_ids.end());
    rows.push_back(std::move(header));
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
        csv::Row r{row_ids[i]};
        for (Eigen::Index j = 0; j < values.cols(); ++j) r.push_back(csv::number(values(Eigen::Index(i), j)));
        rows.push_back(std::move(r));
    }
    return rows;
}

struct LabelledMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    Matrix values;
};

LabelledMatrix read_labelled(fs::path const& path) {
    auto const rows = csv::read_file(path);
    if (rows.empty()) throw ParseError(path.string() + ": empty file", 1);
    LabelledMatrix m;
    m.col_ids.assign(rows[0].begin() + 1, rows[0].end());
    m.values.resize(Eigen::Index(rows.size() - 1), Eigen::Index(m.col_ids.size()));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != m.col_ids.size() + 1) throw ParseError(path.string() + ": ragged row", i + 1);
        m.row_ids.push_back(rows[i][0]);
        for (std::size_t j = 0; j < m.col_ids.size(); ++j)
            m.values(Eigen::Index(i - 1), Eigen::Index(j)) = csv::parse_number(rows[i][j + 1]);
    }
    return m;
}

std::vector<std::string> factor_labels(Eigen::Index k) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < k; ++i) out.push_back("F" + std::to_string(i + 1));
    return out;
}

std::vector<ModelSpec> specs_of(std::vector<std::string> const& slugs) {
    std::vector<ModelSpec> out;
    for (auto const& s : slugs) out.push_back({provider_from_slug(s), s});
    return out;
}

/// Questionnaire ids with files of the given suffix for a condition, sorted.
std::vector<std::string> questionnaires_in(fs::path const& dir, std::string_view condition_id,
                                           std::string_view suffix) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::string const tail = "__" + std::string(condition_id) + std::string(suffix);
    std::vector<std::string> out;
    for (auto const& e : fs::directory_iterator(dir)) {
        auto const name = e.path().filename().string();
        if (name.size() > tail.size() && name.ends_with(tail)) {
            auto const q = name.substr(0, name.size() - tail.size());
            if (q.find("__") == std::string::npos) out.push_back(q);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

void write_raw_table(fs::path const& path, ResponseTable const& t) {
    std::vector<std::string> slugs;
    for (auto const& m : t.models) slugs.push_back(m.slug);
    csv::write_file(path, matrix_rows("model", slugs, t.item_ids, t.values));
}

void write_matrix(fs::path const& dir, ResponseMatrix const& m) {
    auto const s = stem(m.questionnaire_id, m.condition_id);
    csv::write_file(dir / (s + ".csv"), matrix_rows("model", m.model_slugs(), m.item_ids, m.values));
    ordered_json meta;
    meta["questionnaire"] = m.questionnaire_id;
    meta["condition"] = m.condition_id;
    meta["models"] = m.models.size();
    meta["items"] = m.item_ids.size();
    meta["viable"] = m.viable;
    meta["dropped_items"] = dropped_json(m.dropped_items);
    meta["dropped_models"] = dropped_json(m.dropped_models);
    write_json(dir / (s + ".meta.json"), meta);
}

void write_items(fs::path const& path, ItemBank const& bank) {
    std::vector<csv::Row> rows{{"item_id", "questionnaire", "questionnaire_name", "text"}};
    for (auto const& q : bank.questionnaires())
        for (auto const& it : q.items) rows.push_back({it.item_id, q.questionnaire_id, q.full_name, it.text});
    csv::write_file(path, rows);
}

std::vector<ItemInfo> read_items(fs::path const& path) {
    auto const rows = csv::read_file(path);
    std::vector<ItemInfo> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw ParseError(path.string() + ": expected 4 fields", i + 1);
        out.push_back({rows[i][0], rows[i][1], rows[i][2], rows[i][3]});
    }
    return out;
}

CleanSummary write_clean_outputs(fs::path const& dir, ResponseLog const& log, ItemBank const& bank) {
    fs::create_directories(dir);
    std::set<std::string> conditions;
    std::set<std::pair<std::string, std::string>> present;
    for (auto const& r : log.records) {
        auto [item, q] = bank.find_item(r.item_id);
        if (!item) continue;
        conditions.insert(r.condition_id);
        present.emplace(q->questionnaire_id, r.condition_id);
    }
    CleanSummary sum;
    for (auto const& c : conditions)
        for (auto const& q : bank.questionnaires()) {
            if (!present.contains({q.questionnaire_id, c})) continue;
            auto const raw = collect_responses(log, bank, c, q.questionnaire_id);
            auto const m = apply_exclusion_rules(raw, q.questionnaire_id);
            auto const s = stem(q.questionnaire_id, c);
            write_raw_table(dir / (s + ".raw.csv"), raw);
            write_matrix(dir, m);
            sum.files.push_back(dir / (s + ".csv"));
            sum.files.push_back(dir / (s + ".raw.csv"));
            sum.files.push_back(dir / (s + ".meta.json"));
            ++sum.matrices;
            sum.viable += m.viable;
        }
    write_items(dir / "items.csv", bank);
    sum.files.push_back(dir / "items.csv");
    sum.oob_rows = write_oob_report(log, bank, dir / "oob_responses.csv");
    sum.files.push_back(dir / "oob_responses.csv");
    return sum;
}

std::vector<ResponseMatrix> read_matrices(fs::path const& dir, std::string_view condition_id) {
    std::vector<ResponseMatrix> out;
    for (auto const& q : questionnaires_in(dir, condition_id, ".meta.json")) {
        auto const s = stem(q, condition_id);
        auto const meta = read_json(dir / (s + ".meta.json"));
        auto const lm = read_labelled(dir / (s + ".csv"));
        ResponseMatrix m;
        m.questionnaire_id = q;
        m.condition_id = std::string(condition_id);
        m.models = specs_of(lm.row_ids);
        m.item_ids = lm.col_ids;
        m.values = lm.values;
        m.viable = meta.at("viable").get<bool>();
        m.dropped_items = dropped_from(meta.at("dropped_items"));
        m.dropped_models = dropped_from(meta.at("dropped_models"));
        out.push_back(std::move(m));
    }
    return out;
}

ResponseTable read_raw_responses(fs::path const& dir, std::string_view condition_id) {
    std::vector<ResponseTable> parts;
    for (auto const& q : questionnaires_in(dir, condition_id, ".raw.csv")) {
        auto const lm = read_labelled(dir / (stem(q, condition_id) + ".raw.csv"));
        ResponseTable t;
        t.condition_id = std::string(condition_id);
        t.models = specs_of(lm.row_ids);
        t.item_ids = lm.col_ids;
        t.values = lm.values;
        parts.push_back(std::move(t));
    }
    auto merged = merge_tables(parts);
    merged.condition_id = std::string(condition_id);
    return merged;
}

std::vector<fs::path> write_solution(fs::path const& dir, FactorSolution const& s) {
    fs::create_directories(dir);
    auto const base = stem(s.questionnaire_id, s.condition_id);
    std::vector<fs::path> files{dir / (base + ".pattern.csv"), dir / (base + ".factor_corr.csv"),
                                dir / (base + ".scores.csv"), dir / (base + ".solution.json")};
    auto const labels = factor_labels(s.pattern.cols());
    csv::write_file(files[0], matrix_rows("item", s.item_ids, labels, s.pattern));
    csv::write_file(files[1], matrix_rows("factor", labels, labels, s.factor_corr));
    csv::write_file(files[2], matrix_rows("model", s.model_slugs, labels, s.scores));

    ordered_json meta;
    meta["questionnaire"] = s.questionnaire_id;
    meta["condition"] = s.condition_id;
    meta["method"] = to_string(s.method);
    meta["n_factors"] = s.n_factors;
    meta["primary_index"] = s.primary_index;
    meta["seed"] = s.seed;
    meta["objective"] = s.objective;
    meta["flags"] = {{"minres_converged", s.flags.minres_converged},
                     {"heywood", s.flags.heywood},
                     {"rotation_converged", s.flags.rotation_converged},
                     {"ridge", s.flags.ridge}};
    write_json(files[3], meta);
    return files;
}

FactorSolution read_solution(fs::path const& dir, std::string_view questionnaire_id, std::string_view condition_id) {
    auto const base = stem(questionnaire_id, condition_id);
    auto const meta = read_json(dir / (base + ".solution.json"));
    auto const pattern = read_labelled(dir / (base + ".pattern.csv"));
    auto const phi = read_labelled(dir / (base + ".factor_corr.csv"));
    auto const scores = read_labelled(dir / (base + ".scores.csv"));

    FactorSolution s;
    s.questionnaire_id = std::string(questionnaire_id);
    s.condition_id = std::string(condition_id);
    auto const method = meta.at("method").get<std::string>();
    if (method == "efa_minres")
        s.method = ExtractionMethod::efa_minres;
    else if (method == "pca_fallback")
        s.method = ExtractionMethod::pca_fallback;
    else
        throw ParseError("unknown extraction method '" + method + "'", 0);
    s.n_factors = meta.at("n_factors").get<int>();
    s.primary_index = meta.at("primary_index").get<int>();
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.objective = meta.at("objective").get<double>();
    auto const& f = meta.at("flags");
    s.flags = {f.at("minres_converged").get<bool>(), f.at("heywood").get<bool>(),
               f.at("rotation_converged").get<bool>(), f.at("ridge").get<bool>()};
    s.pattern = pattern.values;
    s.item_ids = pattern.row_ids;
    s.factor_corr = phi.values;
    s.scores = scores.values;
    s.model_slugs = scores.row_ids;
    return s;
}

std::vector<FactorSolution> read_solutions(fs::path const& dir, std::string_view condition_id) {
    std::vector<FactorSolution> out;
    for (auto const& q : questionnaires_in(dir, condition_id, ".solution.json"))
        out.push_back(read_solution(dir, q, condition_id));
    return out;
}

std::string sha256_file(fs::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), std::size_t(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

}  // namespace pinlab::storage
