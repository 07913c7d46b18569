#include "pinlab/ssd.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "pinlab/clustering.hpp"
#include "pinlab/csv.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/text.hpp"

namespace pinlab {

double EmbeddingTable::freq(std::string const& word) const {
    auto it = frequency.find(word);
    return it == frequency.end() ? 0.0 : it->second;
}

EmbeddingTable EmbeddingTable::load(std::filesystem::path const& vectors, std::filesystem::path const& freq) {
    EmbeddingTable t;
    std::ifstream in(vectors);
    if (!in) throw IoError("cannot open " + vectors.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    Eigen::Index d = -1;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string word;
        if (!(ss >> word)) continue;
        std::vector<double> v;
        std::string tok;
        while (ss >> tok) {
            double x = csv::parse_number(tok);
            if (!std::isfinite(x)) throw ParseError("non-finite vector component", lineno);
            v.push_back(x);
        }
        if (d < 0) d = Eigen::Index(v.size());
        if (Eigen::Index(v.size()) != d || d == 0) throw ParseError("inconsistent vector dimension", lineno);
        if (t.index.contains(word)) throw ParseError("duplicate token '" + word + "'", lineno);
        t.index.emplace(word, Eigen::Index(rows.size()));
        rows.push_back(std::move(v));
    }
    t.vectors.resize(Eigen::Index(rows.size()), std::max<Eigen::Index>(d, 0));
    for (std::size_t i = 0; i < rows.size(); ++i)
        t.vectors.row(Eigen::Index(i)) = Eigen::Map<Eigen::RowVectorXd>(rows[i].data(), d);

    std::ifstream fin(freq);
    if (!fin) throw IoError("cannot open " + freq.string());
    std::map<std::string, double> counts;
    double total = 0;
    lineno = 0;
    while (std::getline(fin, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string word, tok;
        if (!(ss >> word)) continue;
        if (!(ss >> tok)) throw ParseError("missing count", lineno);
        double const c = csv::parse_number(tok);
        if (!(c > 0) || !std::isfinite(c)) throw ParseError("count must be positive", lineno);
        counts[word] += c;
        total += c;
    }
    for (auto const& [w, c] : counts) t.frequency.emplace(w, c / total);
    return t;
}

DocumentVectors embed_items(std::vector<TextItem> const& items, EmbeddingTable const& table, double a) {
    DocumentVectors out;
    std::vector<Eigen::RowVectorXd> rows;
    for (auto const& item : items) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(table.dim());
        int in_vocab = 0;
        for (auto const& w : tokenize(item.text)) {
            auto it = table.index.find(w);
            if (it == table.index.end()) continue;
            v += (a / (a + table.freq(w))) * table.vectors.row(it->second);
            ++in_vocab;
        }
        if (in_vocab == 0) {
            out.dropped.push_back(item.item_id);
            continue;
        }
        out.item_ids.push_back(item.item_id);
        rows.push_back(v / double(in_vocab));
    }
    out.vectors.resize(Eigen::Index(rows.size()), table.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) out.vectors.row(Eigen::Index(i)) = rows[i];
    return out;
}

SemanticGradient fit_gradient(Matrix const& vectors, Vector const& y, int K) {
    auto const n = vectors.rows();
    auto const d = vectors.cols();
    if (K < 1) throw PreconditionError("K must be >= 1");
    if (y.size() != n) throw PreconditionError("one target per document is required");
    if (n <= K + 1) throw PreconditionError("need more items than K + 1");
    if (K > d) throw PreconditionError("K exceeds the embedding dimension");

    SemanticGradient g;
    g.K = K;
    g.centre = vectors.colwise().mean().transpose();
    Matrix const xc = vectors.rowwise() - g.centre.transpose();

    // Work in whichever of the Gram and covariance spaces is smaller.
    if (n < d) {
        auto eig = sorted_eigen(Matrix(xc * xc.transpose()));
        g.components.resize(d, K);
        for (int k = 0; k < K; ++k) {
            double const lambda = eig.values(k);
            if (!(lambda > 1e-12 * std::max(1.0, eig.values(0)))) throw NumericError("singular design: rank < K");
            g.components.col(k) = xc.transpose() * eig.vectors.col(k) / std::sqrt(lambda);
        }
    } else {
        auto eig = sorted_eigen(Matrix(xc.transpose() * xc));
        if (!(eig.values(K - 1) > 1e-12 * std::max(1.0, eig.values(0)))) throw NumericError("singular design: rank < K");
        g.components = eig.vectors.leftCols(K);
    }
    for (int k = 0; k < K; ++k) {
        auto col = g.components.col(k);
        orient_largest_positive(col);
    }

    Matrix const scores = xc * g.components;
    Matrix design(n, K + 1);
    design.col(0).setOnes();
    design.rightCols(K) = scores;
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < K + 1) throw NumericError("singular design matrix");
    Vector const b = qr.solve(y);
    g.intercept = b(0);
    g.coeffs = b.tail(K);
    g.fitted = design * b;

    double const sst = (y.array() - y.mean()).square().sum();
    if (!(sst > 0)) throw NumericError("target has zero variance");
    double const sse = (y - g.fitted).squaredNorm();
    double const df = double(n - K - 1);
    g.r2 = 1.0 - sse / sst;
    g.r2_adj = 1.0 - (1.0 - g.r2) * double(n - 1) / df;
    g.f_stat = sse > 0 ? (g.r2 / K) / ((1.0 - g.r2) / df) : std::numeric_limits<double>::infinity();
    g.p_value = std::isfinite(g.f_stat) ? f_upper_p(g.f_stat, K, df) : 0.0;
    g.r_pred = pearson(g.fitted, y).value_or(0.0);
    g.beta_embed = g.components * g.coeffs;
    return g;
}

namespace {

PoleCluster make_cluster(int sign, std::vector<Eigen::Index> const& members, std::vector<Eigen::Index> const& tail,
                         Vector const& proj, std::vector<std::set<std::string>> const& words,
                         std::vector<std::string> const& ids) {
    PoleCluster c;
    c.sign = sign;
    std::set<std::string> vocab;
    for (auto m : members) {
        c.item_ids.push_back(ids[std::size_t(m)]);
        vocab.insert(words[std::size_t(m)].begin(), words[std::size_t(m)].end());
    }
    Vector signed_proj(Eigen::Index(tail.size()));
    for (std::size_t i = 0; i < tail.size(); ++i) signed_proj(Eigen::Index(i)) = double(sign) * proj(tail[i]);

    std::vector<std::pair<double, std::string>> scored;
    for (auto const& w : vocab) {
        Vector presence(Eigen::Index(tail.size()));
        for (std::size_t i = 0; i < tail.size(); ++i)
            presence(Eigen::Index(i)) = words[std::size_t(tail[i])].contains(w) ? 1.0 : 0.0;
        if (auto r = pearson(presence, signed_proj)) scored.emplace_back(*r, w);
    }
    std::stable_sort(scored.begin(), scored.end(), [](auto const& a, auto const& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < scored.size() && i < kPoleKeywords; ++i) c.keywords.push_back(scored[i].second);
    return c;
}

}  // namespace

PoleReport characterize_poles(SemanticGradient const& gradient, DocumentVectors const& docs,
                              std::vector<TextItem> const& items, int tail_n) {
    auto const n = docs.vectors.rows();
    if (n < 4) throw PreconditionError("pole characterisation needs at least four items");
    PoleReport rep;
    rep.tail_n = std::min<int>(tail_n, int(n / 2));
    rep.clamped = rep.tail_n != tail_n;
    if (rep.tail_n < 2) throw PreconditionError("tail size must be at least 2");

    std::map<std::string, std::string> text_of;
    for (auto const& it : items) text_of[it.item_id] = it.text;
    std::vector<std::set<std::string>> words(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        auto const toks = tokenize(text_of[docs.item_ids[std::size_t(i)]]);
        words[std::size_t(i)] = {toks.begin(), toks.end()};
    }

    Matrix const xc = docs.vectors.rowwise() - gradient.centre.transpose();
    Vector const proj = xc * gradient.beta_embed;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return proj(a) > proj(b); });

    for (int sign : {1, -1}) {
        std::vector<Eigen::Index> tail;
        for (int i = 0; i < rep.tail_n; ++i)
            tail.push_back(sign > 0 ? order[std::size_t(i)] : order[std::size_t(n - 1 - i)]);
        Matrix sub(Eigen::Index(tail.size()), xc.cols());
        for (std::size_t i = 0; i < tail.size(); ++i) sub.row(Eigen::Index(i)) = xc.row(tail[i]);

        auto const labels = cut_tree(agglomerate(cosine_distance(sub), Linkage::average), int(tail.size()), 2);
        std::vector<Eigen::Index> parts[2];
        for (std::size_t i = 0; i < tail.size(); ++i) parts[labels[i]].push_back(tail[i]);
        if (parts[0].size() < 2 || parts[1].size() < 2) {
            rep.clusters.push_back(make_cluster(sign, tail, tail, proj, words, docs.item_ids));
        } else {
            for (auto const& p : parts) rep.clusters.push_back(make_cluster(sign, p, tail, proj, words, docs.item_ids));
        }
    }
    return rep;
}

}  // namespace pinlab
