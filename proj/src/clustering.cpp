#include "pinlab/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pinlab/errors.hpp"

namespace pinlab {

std::vector<Merge> agglomerate(Matrix const& dist, Linkage linkage) {
    auto const n = int(dist.rows());
    if (dist.cols() != n) throw PreconditionError("distance matrix must be square");
    std::vector<Merge> merges;
    if (n < 2) return merges;

    Matrix d = dist;
    std::vector<int> node(static_cast<std::size_t>(n)), size(static_cast<std::size_t>(n), 1);
    std::iota(node.begin(), node.end(), 0);
    std::vector<bool> alive(std::size_t(n), true);

    for (int step = 0; step < n - 1; ++step) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!alive[std::size_t(i)]) continue;
            for (int j = i + 1; j < n; ++j)
                if (alive[std::size_t(j)] && d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
        }
        double const ni = size[std::size_t(bi)], nj = size[std::size_t(bj)];
        for (int k = 0; k < n; ++k) {
            if (!alive[std::size_t(k)] || k == bi || k == bj) continue;
            double const nk = size[std::size_t(k)];
            double v;
            if (linkage == Linkage::ward) {
                double const s = ni + nj + nk;
                v = std::sqrt(std::max(0.0, ((ni + nk) * d(k, bi) * d(k, bi) + (nj + nk) * d(k, bj) * d(k, bj) -
                                             nk * best * best) / s));
            } else {
                v = (ni * d(k, bi) + nj * d(k, bj)) / (ni + nj);
            }
            d(k, bi) = d(bi, k) = v;
        }
        int const a = node[std::size_t(bi)], b = node[std::size_t(bj)];
        merges.push_back({std::min(a, b), std::max(a, b), best, int(ni + nj)});
        node[std::size_t(bi)] = n + step;
        size[std::size_t(bi)] = int(ni + nj);
        alive[std::size_t(bj)] = false;
    }
    return merges;
}

std::vector<int> cut_tree(std::vector<Merge> const& merges, int n, int k) {
    if (k < 1 || k > n) throw PreconditionError("cluster count out of range");
    std::vector<int> parent(std::size_t(2 * n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[std::size_t(x)] != x) x = parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
        return x;
    };
    for (int s = 0; s < n - k; ++s) {
        parent[std::size_t(find(merges[std::size_t(s)].a))] = n + s;
        parent[std::size_t(find(merges[std::size_t(s)].b))] = n + s;
    }
    std::vector<int> labels(std::size_t(n), -1), root_label(std::size_t(2 * n), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        int const r = find(i);
        if (root_label[std::size_t(r)] < 0) root_label[std::size_t(r)] = next++;
        labels[std::size_t(i)] = root_label[std::size_t(r)];
    }
    return labels;
}

double mean_silhouette(Matrix const& dist, std::vector<int> const& labels) {
    auto const n = Eigen::Index(labels.size());
    if (n == 0) return kMissing;
    int const k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<int> counts(std::size_t(k), 0);
    for (int l : labels) ++counts[std::size_t(l)];

    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int const own = labels[std::size_t(i)];
        if (counts[std::size_t(own)] < 2) continue;
        std::vector<double> sums(std::size_t(k), 0.0);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) sums[std::size_t(labels[std::size_t(j)])] += dist(i, j);
        double const a = sums[std::size_t(own)] / double(counts[std::size_t(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != own && counts[std::size_t(c)] > 0) b = std::min(b, sums[std::size_t(c)] / double(counts[std::size_t(c)]));
        double const denom = std::max(a, b);
        if (std::isfinite(b) && denom > 0) total += (b - a) / denom;
    }
    return total / double(n);
}

Matrix correlation_distance(Matrix const& columns) {
    auto const p = columns.cols();
    Matrix d = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) {
            auto [x, y] = complete_pairs(columns.col(i), columns.col(j));
            auto const r = pearson(x, y);
            d(i, j) = d(j, i) = 1.0 - r.value_or(0.0);
        }
    return d;
}

Matrix cosine_distance(Matrix const& rows) {
    Vector const norms = rows.rowwise().norm();
    auto const n = rows.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double const denom = norms(i) * norms(j);
            double const c = denom > 0 ? std::clamp(rows.row(i).dot(rows.row(j)) / denom, -1.0, 1.0) : 0.0;
            d(i, j) = d(j, i) = 1.0 - c;
        }
    return d;
}

}  // namespace pinlab
