#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "pinlab/stats.hpp"

namespace pinlab {

struct EmbeddingTable {
    std::unordered_map<std::string, Eigen::Index> index;
    Matrix vectors;  // one row per word
    std::unordered_map<std::string, double> frequency;  // relative, (0, 1]

    Eigen::Index dim() const { return vectors.cols(); }
    /// Relative frequency; words absent from the frequency list count as 0.
    double freq(std::string const& word) const;

    /// `vectors`: token then d reals per line. `freq`: token and count per line,
    /// normalized to relative frequencies on load.
    static EmbeddingTable load(std::filesystem::path const& vectors, std::filesystem::path const& freq);
};

struct TextItem {
    std::string item_id;
    std::string text;
};

struct DocumentVectors {
    std::vector<std::string> item_ids;
    Matrix vectors;  // items x d
    std::vector<std::string> dropped;  // no in-vocabulary tokens
};

inline constexpr double kSifA = 1e-3;

/// SIF-weighted mean of in-vocabulary word vectors: sum a/(a + f(w)) v_w over
/// tokens, divided by the in-vocabulary token count.
DocumentVectors embed_items(std::vector<TextItem> const& items, EmbeddingTable const& table, double a = kSifA);

struct SemanticGradient {
    int K = 0;
    double intercept = 0;
    Vector coeffs;       // K
    Vector beta_embed;   // d
    Matrix components;   // d x K, unit columns
    Vector centre;       // d, mean document vector
    Vector fitted;       // per item
    double r2 = 0;
    double r2_adj = 0;
    double f_stat = 0;
    double p_value = 1;
    double r_pred = 0;
};

/// PCA of the document vectors to K components, then OLS of y on the component
/// scores with an intercept. The gradient is mapped back to embedding space.
SemanticGradient fit_gradient(Matrix const& vectors, Vector const& y, int K);

struct PoleCluster {
    int sign = 1;
    std::vector<std::string> item_ids;
    std::vector<std::string> keywords;
    std::size_t size() const { return item_ids.size(); }
};

struct PoleReport {
    std::vector<PoleCluster> clusters;
    int tail_n = 0;
    bool clamped = false;
};

inline constexpr std::size_t kPoleKeywords = 8;

/// Top and bottom tails of the projection on the gradient, each split into two
/// average-linkage clusters on cosine distance (one cluster when a split would
/// leave a part smaller than 2). Keywords are ranked by point-biserial
/// correlation of word presence with the signed projection inside the tail.
PoleReport characterize_poles(SemanticGradient const& gradient, DocumentVectors const& docs,
                              std::vector<TextItem> const& items, int tail_n = 100);

}  // namespace pinlab
