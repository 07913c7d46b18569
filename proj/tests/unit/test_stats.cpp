#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "pinlab/stats.hpp"

using namespace pinlab;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(Eigen::Index(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

/// Exact two-sided permutation p-value of Spearman's rho (no ties).
double exact_spearman_p(std::vector<int> const& ry) {
    int const n = int(ry.size());
    auto rho_of = [n](std::vector<int> const& r) {
        double d2 = 0;
        for (int i = 0; i < n; ++i) d2 += double((i + 1) - r[std::size_t(i)]) * double((i + 1) - r[std::size_t(i)]);
        return 1.0 - 6.0 * d2 / (double(n) * (double(n) * n - 1));
    };
    double const obs = std::abs(rho_of(ry));
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    long hits = 0, total = 0;
    do {
        ++total;
        if (std::abs(rho_of(perm)) >= obs - 1e-12) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return double(hits) / double(total);
}

}  // namespace

TEST_CASE("sample variance uses n - 1") {
    CHECK(sample_variance(vec({1, 5, 1, 5, 3})) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(sample_variance(vec({3, 3, 3, 4, 3})) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(std::isnan(sample_variance(vec({2}))));
}

TEST_CASE("pearson handles constant input and perfect correlation") {
    CHECK_FALSE(pearson(vec({1, 1, 1}), vec({1, 2, 3})).has_value());
    CHECK(*pearson(vec({1, 2, 3, 4}), vec({2, 4, 6, 8})) == doctest::Approx(1.0));
    CHECK(*pearson(vec({1, 2, 3, 4}), vec({8, 6, 4, 2})) == doctest::Approx(-1.0));
}

TEST_CASE("midranks average ties") {
    Vector const r = midranks(vec({10, 20, 20, 5}));
    CHECK(r(0) == 2.0);
    CHECK(r(1) == 3.5);
    CHECK(r(2) == 3.5);
    CHECK(r(3) == 1.0);
}

TEST_CASE("spearman identical and reversed orderings") {
    Vector const x = vec({1, 4, 2, 8, 5});
    CHECK(*spearman(x, x) == doctest::Approx(1.0));
    CHECK(*spearman(x, Vector(-x)) == doctest::Approx(-1.0));
}

TEST_CASE("spearman rho matches the no-ties formula and the t p-value tracks the exact permutation p") {
    std::mt19937_64 rng(11);
    for (int n : {6, 7, 8}) {
        for (int rep = 0; rep < 6; ++rep) {
            std::vector<int> ry(static_cast<std::size_t>(n));
            std::iota(ry.begin(), ry.end(), 1);
            std::shuffle(ry.begin(), ry.end(), rng);
            Vector x(n), y(n);
            double d2 = 0;
            for (int i = 0; i < n; ++i) {
                x(i) = i + 1;
                y(i) = ry[std::size_t(i)];
                d2 += (i + 1.0 - ry[std::size_t(i)]) * (i + 1.0 - ry[std::size_t(i)]);
            }
            auto const t = spearman_test(x, y);
            CHECK(t.r == doctest::Approx(1.0 - 6.0 * d2 / (n * (double(n) * n - 1))).epsilon(1e-12));
            double const exact = exact_spearman_p(ry);
            CHECK(std::abs(t.p - exact) < 0.08);
        }
    }
}

TEST_CASE("percentile interpolates linearly") {
    CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
    CHECK(percentile({4, 1, 3, 2}, 0) == 1);
    CHECK(percentile({4, 1, 3, 2}, 100) == 4);
    CHECK(percentile({0, 10}, 99) == doctest::Approx(9.9));
}

TEST_CASE("p-values against tabulated values") {
    // t = 2.4495 on 18 df
    CHECK(correlation_p_value(0.5, 20) == doctest::Approx(0.02477).epsilon(1e-3));
    // F(2, 10) critical value at alpha = .05
    CHECK(f_upper_p(4.102821, 2, 10) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(f_upper_p(0, 3, 10) == 1.0);
    CHECK(correlation_p_value(1.0, 10) == 0.0);
}

TEST_CASE("pearson_test drops incomplete pairs") {
    double const nan = kMissing;
    auto const t = pearson_test(vec({1, 2, nan, 4, 5}), vec({2, 4, 6, nan, 10}));
    CHECK(t.n == 3);
    CHECK(t.r == doctest::Approx(1.0));
    auto const d = pearson_test(vec({1, 1, 1, 1}), vec({1, 2, 3, 4}));
    CHECK(d.degenerate);
    CHECK(std::isnan(d.r));
}

TEST_CASE("standardize_columns gives mean 0 and unit variance, constant columns 0") {
    Matrix m(4, 2);
    m << 1, 7, 2, 7, 3, 7, 10, 7;
    Matrix const z = standardize_columns(m);
    CHECK(std::abs(z.col(0).mean()) < 1e-14);
    CHECK(sample_variance(z.col(0)) == doctest::Approx(1.0));
    CHECK(z.col(1).isZero());
}

TEST_CASE("sorted_eigen is descending") {
    Matrix s(3, 3);
    s << 2, 0, 0, 0, 5, 0, 0, 0, 1;
    auto const e = sorted_eigen(s);
    CHECK(e.values(0) == doctest::Approx(5));
    CHECK(e.values(2) == doctest::Approx(1));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1));
}
