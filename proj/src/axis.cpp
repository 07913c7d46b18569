#include "pinlab/axis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pinlab/clustering.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/text.hpp"

namespace pinlab {

std::optional<Eigen::Index> ModelScores::index_of(std::string_view slug) const {
    auto it = std::find(slugs.begin(), slugs.end(), slug);
    if (it == slugs.end()) return std::nullopt;
    return Eigen::Index(it - slugs.begin());
}

Vector ModelScores::aligned_to(std::vector<std::string> const& order) const {
    Vector out(Eigen::Index(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto const idx = index_of(order[i]);
        out(Eigen::Index(i)) = idx ? values(*idx) : kMissing;
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

std::vector<std::string> common_slugs(ModelScores const& a, ModelScores const& b) {
    std::set<std::string> sa;
    for (Eigen::Index i = 0; i < a.values.size(); ++i)
        if (!is_missing(a.values(i))) sa.insert(a.slugs[std::size_t(i)]);
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < b.values.size(); ++i)
        if (!is_missing(b.values(i)) && sa.contains(b.slugs[std::size_t(i)])) out.push_back(b.slugs[std::size_t(i)]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ScoreMatrix assemble_score_matrix(std::vector<FactorSolution> const& solutions, std::string_view condition_id) {
    std::vector<FactorSolution const*> cols;
    std::set<std::string> seen;
    for (auto const& s : solutions) {
        if (s.condition_id != condition_id) continue;
        if (!seen.insert(s.questionnaire_id).second)
            throw ValidationError("solutions", "duplicate questionnaire " + s.questionnaire_id);
        cols.push_back(&s);
    }
    if (cols.size() < 2) throw PreconditionError("score matrix needs at least two solutions");
    std::sort(cols.begin(), cols.end(),
              [](auto* a, auto* b) { return a->questionnaire_id < b->questionnaire_id; });

    std::set<std::string> all;
    for (auto* s : cols) all.insert(s->model_slugs.begin(), s->model_slugs.end());

    ScoreMatrix sm;
    auto const q = double(cols.size());
    for (auto const& slug : all) {
        int absent = 0;
        for (auto* s : cols) absent += std::find(s->model_slugs.begin(), s->model_slugs.end(), slug) == s->model_slugs.end();
        if (double(absent) / q > kMaxMissingQuestionnaireFraction)
            sm.excluded_models.push_back({slug, "missing_questionnaires:" + std::to_string(absent) + "/" +
                                                    std::to_string(cols.size())});
        else
            sm.model_slugs.push_back(slug);
    }
    if (sm.model_slugs.empty()) throw PreconditionError("every model was excluded from the score matrix");

    auto const n = Eigen::Index(sm.model_slugs.size());
    Matrix raw = Matrix::Zero(n, Eigen::Index(cols.size()));
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(raw.rows(), raw.cols(), true);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        ModelScores const primary{cols[j]->model_slugs, cols[j]->primary_scores()};
        for (Eigen::Index i = 0; i < n; ++i)
            if (auto idx = primary.index_of(sm.model_slugs[std::size_t(i)])) {
                raw(i, Eigen::Index(j)) = primary.values(*idx);
                mask(i, Eigen::Index(j)) = false;
            }
    }

    std::vector<Eigen::Index> keep;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        auto const c = raw.col(Eigen::Index(j));
        if (n >= 2 && c.maxCoeff() - c.minCoeff() > 0)
            keep.push_back(Eigen::Index(j));
        else
            sm.excluded_questionnaires.push_back({cols[j]->questionnaire_id, "constant_scores"});
    }
    if (keep.empty()) throw NumericError("score matrix has no varying columns");
    Matrix kept(n, Eigen::Index(keep.size()));
    sm.imputed_mask.resize(n, Eigen::Index(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        kept.col(Eigen::Index(j)) = raw.col(keep[j]);
        sm.imputed_mask.col(Eigen::Index(j)) = mask.col(keep[j]);
        sm.questionnaire_ids.push_back(cols[std::size_t(keep[j])]->questionnaire_id);
    }
    sm.values = standardize_columns(kept);
    return sm;
}

namespace {

AxisSolution pca_core(Matrix const& x) {
    if (x.rows() < 2 || x.cols() < 1) throw NumericError("PCA needs at least two rows and one column");
    Matrix const cov = (x.transpose() * x) / double(x.rows() - 1);
    auto eig = sorted_eigen(cov);
    Vector lambda = eig.values.cwiseMax(0.0);
    double const total = lambda.sum();
    if (!(total > 1e-12)) throw NumericError("score matrix has rank 0");

    AxisSolution a;
    a.explained_ratio = lambda / total;
    a.questionnaire_loadings = eig.vectors;
    for (Eigen::Index c = 0; c < a.questionnaire_loadings.cols(); ++c) {
        auto col = a.questionnaire_loadings.col(c);
        orient_largest_positive(col);
    }
    if (a.questionnaire_loadings.col(0).sum() < 0) a.questionnaire_loadings.col(0) *= -1;
    a.pc_scores = x * a.questionnaire_loadings;
    a.sign_anchor = "pc1_loading_sum_positive";
    return a;
}

}  // namespace

AxisSolution pca_of(Matrix const& standardized) { return pca_core(standardized); }

AxisSolution global_pca(ScoreMatrix const& sm, ModelScores const* anchor) {
    AxisSolution a = pca_core(sm.values);
    a.model_slugs = sm.model_slugs;
    a.questionnaire_ids = sm.questionnaire_ids;
    if (anchor) {
        auto const r = pearson_test(a.pc_scores.col(0), anchor->aligned_to(a.model_slugs));
        if (!r.degenerate) {
            if (r.r < 0) {
                a.pc_scores.col(0) *= -1;
                a.questionnaire_loadings.col(0) *= -1;
            }
            a.sign_anchor = "pi_m_correlation_positive";
        }
    }
    return a;
}

BootstrapResult bootstrap_axis(ScoreMatrix const& sm, AxisSolution const& reference, int n_boot, std::uint64_t seed) {
    if (n_boot < 1) throw PreconditionError("n_boot must be >= 1");
    auto const n = sm.values.rows();
    auto const q = sm.values.cols();
    Vector const ref = reference.pc_scores.col(0);
    double const ref_sd = sample_sd(ref);

    BootstrapResult out;
    out.replicates.resize(n, n_boot);
    int const max_redraws = 10 * n_boot;

    for (int b = 0; b < n_boot; ++b) {
        std::uint64_t const iter_seed = derive_seed(seed, std::uint64_t(b));
        for (int attempt = 0;; ++attempt) {
            if (attempt > 0 && ++out.redraws > max_redraws)
                throw NumericError("bootstrap redraw cap exceeded");
            std::mt19937_64 rng(derive_seed(iter_seed, std::uint64_t(attempt)));
            std::uniform_int_distribution<Eigen::Index> pick(0, q - 1);
            Matrix x(n, q);
            for (Eigen::Index j = 0; j < q; ++j) x.col(j) = sm.values.col(pick(rng));
            AxisSolution rep;
            try {
                rep = pca_core(standardize_columns(x));
            } catch (NumericError const&) {
                continue;
            }
            Vector s = rep.pc_scores.col(0);
            double const sd = sample_sd(s);
            if (!(sd > 0)) continue;
            if (s.dot(ref) < 0) s = -s;
            out.replicates.col(b) = s * (ref_sd / sd);
            break;
        }
    }
    out.iterations = n_boot;
    out.ci_low.resize(n);
    out.ci_high.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> v(out.replicates.row(i).begin(), out.replicates.row(i).end());
        out.ci_low(i) = percentile(v, 2.5);
        out.ci_high(i) = percentile(std::move(v), 97.5);
    }
    return out;
}

std::vector<ModelAxisScore> model_axis_scores(AxisSolution const& axis, BootstrapResult const& boot,
                                              ModelScores const* pi_m, ModelScores const* specificity) {
    Vector const pi = pi_m ? pi_m->aligned_to(axis.model_slugs) : Vector::Constant(axis.pc_scores.rows(), kMissing);
    Vector const sp = specificity ? specificity->aligned_to(axis.model_slugs)
                                  : Vector::Constant(axis.pc_scores.rows(), kMissing);
    std::vector<ModelAxisScore> out;
    for (std::size_t i = 0; i < axis.model_slugs.size(); ++i) {
        auto const r = Eigen::Index(i);
        out.push_back({axis.model_slugs[i], axis.pc_scores(r, 0), boot.ci_low(r), boot.ci_high(r), pi(r), sp(r)});
    }
    return out;
}

// ---------------------------------------------------------------------------

PinocchioRow const* PinocchioTable::find(std::string_view item_id) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), item_id,
                               [](PinocchioRow const& r, std::string_view id) { return r.item_id < id; });
    return it != rows.end() && it->item_id == item_id ? &*it : nullptr;
}

std::vector<PinocchioRow const*> PinocchioTable::ranked() const {
    std::vector<PinocchioRow const*> out;
    for (auto const& r : rows)
        if (r.included) out.push_back(&r);
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->pi > b->pi; });
    return out;
}

PinocchioTable pinocchio_scores(ResponseTable const& neutral, ResponseTable const& hs) {
    std::set<std::string> ids(neutral.item_ids.begin(), neutral.item_ids.end());
    bool common = false;
    for (auto const& id : hs.item_ids) common |= !ids.insert(id).second;
    if (!common) throw PreconditionError("neutral and human-simulation responses share no items");

    PinocchioTable t;
    std::vector<double> included;
    for (auto const& id : ids) {
        PinocchioRow r;
        r.item_id = id;
        if (neutral.col_of(id)) {
            Vector const v = present(neutral.item(id));
            r.n_neutral = int(v.size());
            r.var_neutral = sample_variance(v);
        }
        if (hs.col_of(id)) {
            Vector const v = present(hs.item(id));
            r.n_hs = int(v.size());
            r.var_hs = sample_variance(v);
        }
        r.included = r.n_neutral >= kMinPinocchioModels && r.n_hs >= kMinPinocchioModels && r.var_hs > 0;
        if (r.included) {
            r.pi = r.var_neutral / r.var_hs;
            included.push_back(r.pi);
        }
        t.rows.push_back(std::move(r));
    }
    if (!included.empty()) t.cap_value = percentile(included, 99.0);
    for (auto& r : t.rows)
        if (r.included) {
            r.pi_capped = std::min(r.pi, t.cap_value);
            r.log_pi = std::log(r.pi_capped);
        }
    return t;
}

Matrix item_z_scores(Matrix const& responses) {
    Matrix z = Matrix::Constant(responses.rows(), responses.cols(), kMissing);
    for (Eigen::Index j = 0; j < responses.cols(); ++j) {
        Vector const v = present(responses.col(j));
        double const m = v.size() ? v.mean() : 0.0;
        double const sd = sample_sd(v);
        for (Eigen::Index i = 0; i < responses.rows(); ++i) {
            double const x = responses(i, j);
            if (is_missing(x)) continue;
            z(i, j) = (sd > 0 && std::isfinite(sd)) ? (x - m) / sd : 0.0;
        }
    }
    return z;
}

namespace {

std::vector<std::string> slugs_of(ResponseTable const& t) {
    std::vector<std::string> out;
    for (auto const& m : t.models) out.push_back(m.slug);
    return out;
}

}  // namespace

PiScores model_pi_score(ResponseTable const& neutral, PinocchioTable const& table) {
    PiScores out;
    std::vector<double> w;
    for (auto const& r : table.rows)
        if (r.included && r.pi > 1 && neutral.col_of(r.item_id)) {
            out.item_ids.push_back(r.item_id);
            w.push_back(std::log(std::min(r.pi, table.cap_value)));
        }
    if (out.item_ids.empty()) throw PreconditionError("no items with pi > 1");
    out.weights = Eigen::Map<Vector>(w.data(), Eigen::Index(w.size()));
    Matrix const z = item_z_scores(neutral.select_items(out.item_ids).values);
    out.pi_m = {slugs_of(neutral), weighted_z_mean(z, out.weights)};
    return out;
}

ModelScores specificity_contrast(ResponseTable const& neutral, PinocchioTable const& table, ModelScores const& pi_m) {
    std::vector<double> pis;
    for (auto const& r : table.rows)
        if (r.included) pis.push_back(r.pi);
    if (pis.empty()) throw PreconditionError("no included items");
    double const q25 = percentile(pis, 25.0);
    std::vector<std::string> bottom;
    for (auto const& r : table.rows)
        if (r.included && r.pi <= q25 && neutral.col_of(r.item_id)) bottom.push_back(r.item_id);
    if (bottom.empty()) throw PreconditionError("bottom quartile of pi is empty");

    Matrix const z = item_z_scores(neutral.select_items(bottom).values);
    Vector const base = weighted_z_mean(z, Vector::Ones(z.cols()));
    auto const slugs = slugs_of(neutral);
    return {slugs, pi_m.aligned_to(slugs) - base};
}

// ---------------------------------------------------------------------------

namespace {

std::map<std::string, double> primary_abs_loadings(std::vector<FactorSolution> const& solutions) {
    std::map<std::string, double> out;
    for (auto const& s : solutions) {
        Vector const l = s.primary_loadings();
        for (std::size_t i = 0; i < s.item_ids.size(); ++i) out[s.item_ids[i]] = std::abs(l(Eigen::Index(i)));
    }
    return out;
}

}  // namespace

LoadingShiftReport loading_shift_analysis(PinocchioTable const& table, std::vector<FactorSolution> const& neutral,
                                          std::vector<FactorSolution> const& hs) {
    auto const ln = primary_abs_loadings(neutral);
    auto const lh = primary_abs_loadings(hs);
    LoadingShiftReport rep;
    for (auto const& r : table.rows) {
        if (!r.included || !std::isfinite(r.log_pi)) continue;
        auto a = ln.find(r.item_id), b = lh.find(r.item_id);
        if (a == ln.end() || b == lh.end()) continue;
        rep.items.push_back({r.item_id, r.log_pi, a->second, b->second, b->second - a->second});
    }
    if (rep.items.size() < kMinShiftItems)
        throw PreconditionError("loading shift analysis needs at least " + std::to_string(kMinShiftItems) +
                                " matched items, got " + std::to_string(rep.items.size()));

    auto const m = Eigen::Index(rep.items.size());
    Vector lp(m), an(m), ah(m), d(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        auto const& s = rep.items[std::size_t(i)];
        lp(i) = s.log_pi;
        an(i) = s.abs_loading_neutral;
        ah(i) = s.abs_loading_hs;
        d(i) = s.delta;
    }
    rep.correlations.push_back({"abs_loading_neutral", pearson_test(lp, an), spearman_test(lp, an)});
    rep.correlations.push_back({"abs_loading_hs", pearson_test(lp, ah), spearman_test(lp, ah)});
    rep.correlations.push_back({"delta", pearson_test(lp, d), spearman_test(lp, d)});
    return rep;
}

// ---------------------------------------------------------------------------

ClusterReport cluster_items(Matrix const& responses, std::vector<std::string> const& item_ids,
                            std::vector<std::string> const& model_slugs, ModelScores const& pc1, int k_max) {
    ClusterReport rep;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < responses.cols(); ++j) {
        auto const v = sample_variance(present(responses.col(j)));
        if (v > 0)
            keep.push_back(j);
        else
            rep.excluded_items.push_back(item_ids[std::size_t(j)]);
    }
    Matrix x(responses.rows(), Eigen::Index(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        x.col(Eigen::Index(j)) = responses.col(keep[j]);
        rep.item_ids.push_back(item_ids[std::size_t(keep[j])]);
    }
    auto const p = int(keep.size());
    if (p < 3) {
        rep.non_separable = true;
        return rep;
    }
    Matrix const dist = correlation_distance(x);
    if (dist.maxCoeff() <= 1e-12) {
        rep.non_separable = true;
        return rep;
    }

    auto const merges = agglomerate(dist, Linkage::ward);
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 2; k <= std::min(k_max, p - 1); ++k) {
        auto labels = cut_tree(merges, p, k);
        double const s = mean_silhouette(dist, labels);
        rep.avg_silhouette[k] = s;
        rep.assignments[k] = std::move(labels);
        if (s > best) {
            best = s;
            rep.chosen_k = k;
        }
    }

    Matrix const z = item_z_scores(x);
    Vector const axis = pc1.aligned_to(model_slugs);
    auto const& labels = rep.assignments[rep.chosen_k];
    for (int c = 0; c < rep.chosen_k; ++c) {
        std::vector<Eigen::Index> members;
        for (int j = 0; j < p; ++j)
            if (labels[std::size_t(j)] == c) members.push_back(j);
        Matrix sub(z.rows(), Eigen::Index(members.size()));
        for (std::size_t j = 0; j < members.size(); ++j) sub.col(Eigen::Index(j)) = z.col(members[j]);
        Vector const profile = weighted_z_mean(sub, Vector::Ones(sub.cols()));
        rep.axis_correlations.push_back({c, int(members.size()), pearson_test(profile, axis)});
    }
    return rep;
}

ClusterReport cluster_top_items(ResponseTable const& neutral, PinocchioTable const& table, ModelScores const& pc1,
                                std::size_t top_n, int k_max) {
    std::vector<std::string> top;
    for (auto* r : table.ranked())
        if (neutral.col_of(r->item_id)) top.push_back(r->item_id);
    if (top.size() < top_n)
        throw PreconditionError("need " + std::to_string(top_n) + " included items, have " + std::to_string(top.size()));
    top.resize(top_n);
    return cluster_items(neutral.select_items(top).values, top, slugs_of(neutral), pc1, k_max);
}

// ---------------------------------------------------------------------------

std::vector<ItemAxisCorrelation> item_axis_correlations(ResponseTable const& neutral, ModelScores const& pc1,
                                                        std::size_t min_n) {
    Vector const axis = pc1.aligned_to(slugs_of(neutral));
    std::vector<ItemAxisCorrelation> out;
    for (std::size_t j = 0; j < neutral.item_ids.size(); ++j) {
        auto const t = pearson_test(neutral.values.col(Eigen::Index(j)), axis);
        if (t.n < min_n || t.degenerate) continue;
        out.push_back({neutral.item_ids[j], t.r, t.p, t.n});
    }
    std::stable_sort(out.begin(), out.end(), [](auto const& a, auto const& b) { return a.r > b.r; });
    return out;
}

bool matches_keyword(std::string_view text, std::vector<std::string> const& stems) {
    auto const words = tokenize(text);
    for (auto stem : stems) {
        stem = to_lower(stem);
        while (!stem.empty() && (stem.back() == '-' || stem.back() == ' ')) stem.pop_back();
        if (stem.empty()) continue;
        for (auto const& w : words)
            if (w.starts_with(stem)) return true;
    }
    return false;
}

ValenceReport valence_variance(ItemBank const& bank, ResponseTable const& neutral,
                               std::vector<std::string> const& positive, std::vector<std::string> const& negative) {
    if (positive.empty() || negative.empty()) throw PreconditionError("keyword lists must be non-empty");
    ValenceReport rep;
    double sum_pos = 0, sum_neg = 0;
    for (auto const& q : bank.questionnaires())
        for (auto const& item : q.items) {
            if (!neutral.col_of(item.item_id)) continue;
            double const v = sample_variance(present(neutral.item(item.item_id)));
            if (!std::isfinite(v)) continue;
            if (matches_keyword(item.text, positive)) {
                sum_pos += v;
                ++rep.n_pos;
            }
            if (matches_keyword(item.text, negative)) {
                sum_neg += v;
                ++rep.n_neg;
            }
        }
    rep.pos_defined = rep.n_pos > 0;
    rep.neg_defined = rep.n_neg > 0;
    if (rep.pos_defined) rep.mean_var_pos = sum_pos / double(rep.n_pos);
    if (rep.neg_defined) rep.mean_var_neg = sum_neg / double(rep.n_neg);
    return rep;
}

// ---------------------------------------------------------------------------

ConditionShift condition_shift(ModelScores const& reference, ModelScores const& other) {
    ConditionShift out;
    out.models = common_slugs(reference, other);
    if (out.models.size() < 3) throw PreconditionError("condition shift needs at least three common models");
    Vector const ref = reference.aligned_to(out.models);
    Vector oth = other.aligned_to(out.models);
    double const sd_ref = sample_sd(ref), sd_oth = sample_sd(oth);
    if (!(sd_ref > 0) || !(sd_oth > 0)) throw NumericError("condition shift on a constant score vector");
    if (auto r = pearson(ref, oth); r && *r < 0) {
        oth = -oth;
        out.sign_flipped = true;
    }
    out.scale_ratio = sd_oth / sd_ref;
    out.shift = oth / out.scale_ratio - ref;
    out.mean_shift = out.shift.mean();
    return out;
}

CorrelationTest rank_agreement(ModelScores const& a, ModelScores const& b) {
    auto const common = common_slugs(a, b);
    if (common.size() < 3) throw PreconditionError("rank agreement needs at least three common models");
    return spearman_test(a.aligned_to(common), b.aligned_to(common));
}

}  // namespace pinlab
