#include "doctest.h"

#include "pinlab/clustering.hpp"

using namespace pinlab;

namespace {

Matrix line_distances(std::vector<double> const& xs) {
    auto const n = Eigen::Index(xs.size());
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = std::abs(xs[std::size_t(i)] - xs[std::size_t(j)]);
    return d;
}

}  // namespace

TEST_CASE("average linkage on points 0, 1, 5, 6") {
    auto const m = agglomerate(line_distances({0, 1, 5, 6}), Linkage::average);
    REQUIRE(m.size() == 3);
    CHECK(m[0].a == 0);
    CHECK(m[0].b == 1);
    CHECK(m[1].a == 2);
    CHECK(m[1].b == 3);
    CHECK(m[2].height == doctest::Approx(5.0));
    CHECK(m[2].size == 4);
}

TEST_CASE("ward linkage matches the centroid formula on a line") {
    auto const m = agglomerate(line_distances({0, 1, 5, 6}), Linkage::ward);
    REQUIRE(m.size() == 3);
    CHECK(m[0].height == doctest::Approx(1.0));
    CHECK(m[1].height == doctest::Approx(1.0));
    // sqrt(2 n1 n2 / (n1 + n2)) * |c1 - c2| = sqrt(2) * 5
    CHECK(m[2].height == doctest::Approx(std::sqrt(50.0)));
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i].height >= m[i - 1].height);
}

TEST_CASE("cut_tree numbers clusters by first leaf") {
    auto const m = agglomerate(line_distances({5, 0, 6, 1}), Linkage::ward);
    CHECK(cut_tree(m, 4, 2) == std::vector<int>{0, 1, 0, 1});
    CHECK(cut_tree(m, 4, 1) == std::vector<int>{0, 0, 0, 0});
    CHECK(cut_tree(m, 4, 4) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("silhouette by hand") {
    Matrix const d = line_distances({0, 1, 5, 6});
    double const s0 = 1 - 1 / 5.5, s1 = 1 - 1 / 4.5;
    CHECK(mean_silhouette(d, {0, 0, 1, 1}) == doctest::Approx((s0 + s1) / 2));
    // singletons contribute 0
    CHECK(mean_silhouette(d, {0, 1, 2, 2}) == doctest::Approx((1 - 1 / 5.0) / 4 + (1 - 1 / 4.0) / 4));
}

TEST_CASE("distances") {
    Matrix c(5, 3);
    c.col(0) << 1, 2, 3, 4, 5;
    c.col(1) = 2 * c.col(0);
    c.col(2) = -c.col(0);
    Matrix const d = correlation_distance(c);
    CHECK(d(0, 1) == doctest::Approx(0).scale(1));
    CHECK(d(0, 2) == doctest::Approx(2));
    CHECK(d.diagonal().cwiseAbs().maxCoeff() < 1e-12);

    Matrix r(3, 2);
    r << 1, 0, 0, 1, 2, 0;
    Matrix const cd = cosine_distance(r);
    CHECK(cd(0, 1) == doctest::Approx(1));
    CHECK(cd(0, 2) == doctest::Approx(0).scale(1));
}
