#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pinlab/stats.hpp"

namespace pinlab {

enum class Linkage { ward, average };

/// One agglomeration step. Node ids below n are leaves; merge i creates node n + i.
struct Merge {
    int a = 0;
    int b = 0;
    double height = 0;
    int size = 0;
};

/// Agglomerative clustering of a symmetric distance matrix with Lance-Williams
/// updates. Ward operates on the distances themselves (as scipy's "ward" does
/// when given non-Euclidean input). Ties go to the lowest (i, j) pair.
std::vector<Merge> agglomerate(Matrix const& dist, Linkage linkage);

/// Flat labels 0..k-1 from the first n - k merges, numbered by first leaf.
std::vector<int> cut_tree(std::vector<Merge> const& merges, int n, int k);

/// Mean silhouette width over all points. Singletons score 0.
double mean_silhouette(Matrix const& dist, std::vector<int> const& labels);

/// 1 - Pearson r between columns, pairwise-complete over rows (NaN = missing).
Matrix correlation_distance(Matrix const& columns);

/// 1 - cosine similarity between rows. Zero rows are at distance 1 from everything.
Matrix cosine_distance(Matrix const& rows);

}  // namespace pinlab
