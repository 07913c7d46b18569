#pragma once

// Descriptive and inferential statistics over Eigen vectors and matrices.
// Missing observations are encoded as quiet NaN throughout the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pinlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) noexcept { return std::isnan(x); }

template <typename Derived>
typename Derived::Scalar mean(Eigen::DenseBase<Derived> const& v) {
    return v.size() ? v.mean() : typename Derived::Scalar(kMissing);
}

/// Unbiased (n - 1) sample variance; NaN when fewer than two values.
template <typename Derived>
typename Derived::Scalar sample_variance(Eigen::DenseBase<Derived> const& v) {
    using Scalar = typename Derived::Scalar;
    auto const n = v.size();
    if (n < 2) return Scalar(kMissing);
    Scalar const m = v.mean();
    return (v.derived().array() - m).square().sum() / Scalar(n - 1);
}

template <typename Derived>
typename Derived::Scalar sample_sd(Eigen::DenseBase<Derived> const& v) {
    return std::sqrt(sample_variance(v));
}

/// Values of `v` that are not NaN, in order.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> present(Eigen::DenseBase<Derived> const& v) {
    std::vector<typename Derived::Scalar> out;
    out.reserve(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isnan(v.derived().coeff(i))) out.push_back(v.derived().coeff(i));
    return Eigen::Map<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>(out.data(),
                                                                                 Eigen::Index(out.size()));
}

/// Pairs (x_i, y_i) where both are present.
template <typename DX, typename DY>
std::pair<Vector, Vector> complete_pairs(Eigen::DenseBase<DX> const& x, Eigen::DenseBase<DY> const& y) {
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double const xi = x.derived().coeff(i), yi = y.derived().coeff(i);
        if (!std::isnan(xi) && !std::isnan(yi)) {
            a.push_back(xi);
            b.push_back(yi);
        }
    }
    return {Eigen::Map<Vector>(a.data(), Eigen::Index(a.size())),
            Eigen::Map<Vector>(b.data(), Eigen::Index(b.size()))};
}

/// Pearson correlation; nullopt when either input is constant or n < 2.
template <typename DX, typename DY>
std::optional<double> pearson(Eigen::DenseBase<DX> const& x, Eigen::DenseBase<DY> const& y) {
    auto const n = x.size();
    if (n < 2 || y.size() != n) return std::nullopt;
    Vector const dx = x.derived().template cast<double>().array() - x.derived().template cast<double>().mean();
    Vector const dy = y.derived().template cast<double>().array() - y.derived().template cast<double>().mean();
    double const sxx = dx.squaredNorm(), syy = dy.squaredNorm();
    double const scale = std::max(1.0, std::max(dx.cwiseAbs().maxCoeff(), dy.cwiseAbs().maxCoeff()));
    if (sxx <= 1e-24 * scale * scale * double(n) || syy <= 1e-24 * scale * scale * double(n)) return std::nullopt;
    double const r = dx.dot(dy) / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

/// Average ranks (1-based) with ties assigned their mean rank.
template <typename Derived>
Vector midranks(Eigen::DenseBase<Derived> const& v) {
    auto const n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return v.derived().coeff(a) < v.derived().coeff(b); });
    Vector ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v.derived().coeff(order[std::size_t(j + 1)]) == v.derived().coeff(order[std::size_t(i)])) ++j;
        double const r = 0.5 * double(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks(order[std::size_t(k)]) = r;
        i = j + 1;
    }
    return ranks;
}

template <typename DX, typename DY>
std::optional<double> spearman(Eigen::DenseBase<DX> const& x, Eigen::DenseBase<DY> const& y) {
    return pearson(midranks(x), midranks(y));
}

/// Percentile with linear interpolation between order statistics (q in [0, 100]).
double percentile(std::vector<double> values, double q);

/// Two-sided p-value of a correlation via t = r sqrt((n-2)/(1-r^2)), df = n - 2.
double correlation_p_value(double r, std::size_t n);

/// Upper-tail probability of the F distribution.
double f_upper_p(double f, double df1, double df2);

struct CorrelationTest {
    double r = kMissing;
    double p = kMissing;
    std::size_t n = 0;
    bool degenerate = true;
};

/// Pearson test on complete pairs (NaN entries dropped pairwise).
template <typename DX, typename DY>
CorrelationTest pearson_test(Eigen::DenseBase<DX> const& x, Eigen::DenseBase<DY> const& y) {
    auto [a, b] = complete_pairs(x, y);
    CorrelationTest t;
    t.n = std::size_t(a.size());
    if (auto r = pearson(a, b); r && t.n >= 3) {
        t.r = *r;
        t.p = correlation_p_value(*r, t.n);
        t.degenerate = false;
    }
    return t;
}

/// Spearman test on complete pairs; ties midranked; p via the t approximation.
template <typename DX, typename DY>
CorrelationTest spearman_test(Eigen::DenseBase<DX> const& x, Eigen::DenseBase<DY> const& y) {
    auto [a, b] = complete_pairs(x, y);
    return pearson_test(midranks(a), midranks(b));
}

/// Column-standardize to mean 0 and unit (n - 1) variance. Constant columns become 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
standardize_columns(Eigen::MatrixBase<Derived> const& m) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z = m.rowwise() - m.colwise().mean();
    if (m.rows() < 2) return z.setZero();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        Scalar const sd = std::sqrt(z.col(j).squaredNorm() / Scalar(m.rows() - 1));
        if (sd > Scalar(0) && std::isfinite(sd))
            z.col(j) /= sd;
        else
            z.col(j).setZero();
    }
    return z;
}

/// Pearson correlation matrix of the columns of a complete matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
correlation_matrix(Eigen::MatrixBase<Derived> const& m) {
    using Scalar = typename Derived::Scalar;
    auto const z = standardize_columns(m);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> r = (z.transpose() * z) / Scalar(m.rows() - 1);
    r.diagonal().setOnes();
    return Scalar(0.5) * (r + r.transpose());
}

/// Eigen decomposition of a symmetric matrix with eigenvalues sorted descending.
template <typename Scalar>
struct SortedEigen {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
};

template <typename Derived>
SortedEigen<typename Derived::Scalar> sorted_eigen(Eigen::MatrixBase<Derived> const& sym, bool with_vectors = true) {
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(
        sym, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    SortedEigen<Scalar> out;
    out.values = es.eigenvalues().reverse();
    if (with_vectors) out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

/// Flip the sign of a vector so that its largest-magnitude entry is positive.
template <typename Derived>
bool orient_largest_positive(Eigen::MatrixBase<Derived>& v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v(idx) < 0) {
        v = -v;
        return true;
    }
    return false;
}

}  // namespace pinlab
