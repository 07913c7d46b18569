#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pinlab/cleaning.hpp"
#include "pinlab/factors.hpp"
#include "pinlab/itembank.hpp"
#include "pinlab/stats.hpp"

namespace pinlab {

/// Per-model values keyed by slug. Rows of `values` follow `slugs`.
struct ModelScores {
    std::vector<std::string> slugs;
    Vector values;

    std::optional<Eigen::Index> index_of(std::string_view slug) const;
    /// Values reordered to `order`, NaN where a slug is absent.
    Vector aligned_to(std::vector<std::string> const& order) const;
};

/// SplitMix64 finalizer over (seed, stream); stable per-iteration seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// ---------------------------------------------------------------------------
// Score matrix and global PCA

inline constexpr double kMaxMissingQuestionnaireFraction = 0.20;

struct ScoreMatrix {
    std::vector<std::string> model_slugs;
    std::vector<std::string> questionnaire_ids;
    Matrix values;  // column-standardized
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> imputed_mask;
    std::vector<Dropped> excluded_models;
    std::vector<Dropped> excluded_questionnaires;
};

/// Primary-factor scores of each questionnaire as columns. Models absent from
/// more than 20% of questionnaires are excluded, remaining gaps get 0, and columns
/// are standardized. Columns that are constant after imputation are dropped.
ScoreMatrix assemble_score_matrix(std::vector<FactorSolution> const& solutions, std::string_view condition_id);

struct AxisSolution {
    std::vector<std::string> model_slugs;
    std::vector<std::string> questionnaire_ids;
    Matrix pc_scores;               // models x components
    Vector explained_ratio;         // per component, non-increasing
    Matrix questionnaire_loadings;  // questionnaires x components (unit eigenvectors)
    std::string sign_anchor;

    ModelScores pc1() const { return {model_slugs, pc_scores.col(0)}; }
};

/// PCA of a standardized score matrix. With an anchor, PC1 is flipped to correlate
/// positively with it; otherwise PC1 loadings are made to sum positive.
AxisSolution global_pca(ScoreMatrix const& sm, ModelScores const* anchor = nullptr);

/// PCA of a plain column-standardized matrix, PC1 oriented by loading sum.
AxisSolution pca_of(Matrix const& standardized);

struct BootstrapResult {
    Vector ci_low;
    Vector ci_high;
    int iterations = 0;
    int redraws = 0;
    Matrix replicates;  // models x n_boot, aligned
};

/// Questionnaire-resampling bootstrap of PC1, aligned to the reference by sign
/// and standard deviation. Percentile CIs (2.5, 97.5).
BootstrapResult bootstrap_axis(ScoreMatrix const& sm, AxisSolution const& reference, int n_boot = 1000,
                               std::uint64_t seed = 0);

struct ModelAxisScore {
    std::string model;
    double pc1 = kMissing;
    double ci_low = kMissing;
    double ci_high = kMissing;
    double pi_m = kMissing;
    double specificity = kMissing;
};

/// One row per axis model; pi_m / specificity NaN when not supplied.
std::vector<ModelAxisScore> model_axis_scores(AxisSolution const& axis, BootstrapResult const& boot,
                                              ModelScores const* pi_m = nullptr,
                                              ModelScores const* specificity = nullptr);

// ---------------------------------------------------------------------------
// Item-level variance ratio

inline constexpr int kMinPinocchioModels = 5;

struct PinocchioRow {
    std::string item_id;
    double var_neutral = kMissing;
    double var_hs = kMissing;
    int n_neutral = 0;
    int n_hs = 0;
    double pi = kMissing;
    double pi_capped = kMissing;
    double log_pi = kMissing;
    bool included = false;
};

struct PinocchioTable {
    std::vector<PinocchioRow> rows;  // sorted by item id
    double cap_value = kMissing;

    PinocchioRow const* find(std::string_view item_id) const;
    /// Included rows ordered by pi descending (ties by item id).
    std::vector<PinocchioRow const*> ranked() const;
};

/// Variance ratio per item across models, on parsed responses before any deletion.
PinocchioTable pinocchio_scores(ResponseTable const& neutral, ResponseTable const& hs);

/// z-scores of each item column across models (n - 1 sd, present values only).
/// Constant columns give 0; missing stays NaN.
Matrix item_z_scores(Matrix const& responses);

/// Row-wise sum(w z) / sum(w) over the present entries of each row.
template <typename DZ, typename DW>
Vector weighted_z_mean(Eigen::MatrixBase<DZ> const& z, Eigen::MatrixBase<DW> const& w) {
    Vector out(z.rows());
    for (Eigen::Index m = 0; m < z.rows(); ++m) {
        double num = 0, den = 0;
        for (Eigen::Index i = 0; i < z.cols(); ++i) {
            double const v = z(m, i);
            if (std::isnan(v)) continue;
            num += w(i) * v;
            den += w(i);
        }
        out(m) = den > 0 ? num / den : kMissing;
    }
    return out;
}

struct PiScores {
    ModelScores pi_m;
    std::vector<std::string> item_ids;  // qualifying items, pi > 1
    Vector weights;                     // log(min(pi, cap))
};

/// Log-pi-weighted mean neutral z-score per model over items with pi > 1.
PiScores model_pi_score(ResponseTable const& neutral, PinocchioTable const& table);

/// Pi_m minus the mean z over the bottom quartile of included pi.
ModelScores specificity_contrast(ResponseTable const& neutral, PinocchioTable const& table, ModelScores const& pi_m);

// ---------------------------------------------------------------------------
// Loading shifts

struct LoadingShift {
    std::string item_id;
    double log_pi = kMissing;
    double abs_loading_neutral = kMissing;
    double abs_loading_hs = kMissing;
    double delta = kMissing;
};

struct ShiftCorrelations {
    std::string target;  // abs_loading_neutral, abs_loading_hs, delta
    CorrelationTest pearson;
    CorrelationTest spearman;
};

struct LoadingShiftReport {
    std::vector<LoadingShift> items;
    std::vector<ShiftCorrelations> correlations;
};

inline constexpr std::size_t kMinShiftItems = 10;

/// Primary-factor pattern loading magnitudes per condition against log pi.
LoadingShiftReport loading_shift_analysis(PinocchioTable const& table,
                                          std::vector<FactorSolution> const& neutral,
                                          std::vector<FactorSolution> const& hs);

// ---------------------------------------------------------------------------
// Top-pi item clustering

struct ClusterAxisCorrelation {
    int cluster = 0;
    int size = 0;
    CorrelationTest test;
};

struct ClusterReport {
    std::vector<std::string> item_ids;
    std::map<int, std::vector<int>> assignments;  // k -> label per item
    std::map<int, double> avg_silhouette;
    int chosen_k = 0;
    std::vector<ClusterAxisCorrelation> axis_correlations;
    bool non_separable = false;
    std::vector<std::string> excluded_items;  // zero variance
};

/// Ward clustering of item response profiles (distance 1 - r) with a silhouette
/// sweep over k = 2..10, then each cluster's mean z-profile against PC1.
ClusterReport cluster_items(Matrix const& responses, std::vector<std::string> const& item_ids,
                            std::vector<std::string> const& model_slugs, ModelScores const& pc1, int k_max = 10);

/// The top-N included items by pi, clustered as above.
ClusterReport cluster_top_items(ResponseTable const& neutral, PinocchioTable const& table, ModelScores const& pc1,
                                std::size_t top_n = 80, int k_max = 10);

// ---------------------------------------------------------------------------
// Item-level diagnostics

struct ItemAxisCorrelation {
    std::string item_id;
    double r = kMissing;
    double p = kMissing;
    std::size_t n = 0;
};

inline constexpr std::size_t kMinItemAxisModels = 15;

/// Pearson r of each item's responses with PC1, for items answered by >= 15 models.
/// Sorted by r descending.
std::vector<ItemAxisCorrelation> item_axis_correlations(ResponseTable const& neutral, ModelScores const& pc1,
                                                        std::size_t min_n = kMinItemAxisModels);

struct ValenceReport {
    double mean_var_pos = kMissing;
    std::size_t n_pos = 0;
    double mean_var_neg = kMissing;
    std::size_t n_neg = 0;
    bool pos_defined = false;
    bool neg_defined = false;
};

/// True when some word of `text` starts with one of the keyword stems
/// (case-insensitive, trailing '-' ignored).
bool matches_keyword(std::string_view text, std::vector<std::string> const& stems);

ValenceReport valence_variance(ItemBank const& bank, ResponseTable const& neutral,
                               std::vector<std::string> const& positive, std::vector<std::string> const& negative);

// ---------------------------------------------------------------------------
// Cross-condition comparisons

struct ConditionShift {
    std::vector<std::string> models;  // common models, sorted
    Vector shift;
    double scale_ratio = kMissing;
    double mean_shift = kMissing;
    bool sign_flipped = false;
};

/// Rescale `other` onto the reference scale after sign alignment and report
/// per-model shifts.
ConditionShift condition_shift(ModelScores const& reference, ModelScores const& other);

/// Spearman rank agreement over common models.
CorrelationTest rank_agreement(ModelScores const& a, ModelScores const& b);

}  // namespace pinlab
