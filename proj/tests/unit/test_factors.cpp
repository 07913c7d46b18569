#include "doctest.h"

#include "pinlab/errors.hpp"
#include "pinlab/factors.hpp"
#include "support.hpp"

using namespace pinlab;

namespace {

ResponseMatrix matrix_of(Matrix const& values) { return apply_exclusion_rules(support::make_table(values), "Q"); }

}  // namespace

TEST_CASE("criterion gradient matches finite differences") {
    std::mt19937_64 rng(1);
    Matrix const L = support::normal_matrix(7, 3, rng);
    for (double gamma : {0.0, 0.5}) {
        Matrix g;
        double const f = oblimin_criterion(L, gamma, g);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 3; ++j) {
                Matrix Lh = L, dummy;
                Lh(i, j) += 1e-6;
                double const fd = (oblimin_criterion(Lh, gamma, dummy) - f) / 1e-6;
                CHECK(fd == doctest::Approx(g(i, j)).epsilon(1e-4));
            }
    }
}

TEST_CASE("oblimin recovers planted simple structure") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        auto const p = support::planted_oblique(3, 4, 0.3, rng);
        auto const rot = rotate_oblimin(p.unrotated);
        CHECK(rot.converged);
        CHECK(tucker_congruence(p.pattern, rot.pattern).mean_abs_phi > 0.98);
        // Phi valid: symmetric, unit diagonal, positive definite
        CHECK((rot.factor_corr - rot.factor_corr.transpose()).norm() < 1e-12);
        CHECK((rot.factor_corr.diagonal().array() - 1).abs().maxCoeff() < 1e-12);
        CHECK(sorted_eigen(rot.factor_corr, false).values.minCoeff() > 0);
        // reproduces the same common variance
        Matrix const implied = rot.pattern * rot.factor_corr * rot.pattern.transpose();
        CHECK((implied - p.unrotated * p.unrotated.transpose()).norm() < 1e-8);
    }
}

TEST_CASE("single-factor rotation is the identity up to sign") {
    Matrix a(4, 1);
    a << -0.7, -0.6, -0.5, 0.1;
    auto const rot = rotate_oblimin(a);
    CHECK(rot.pattern.isApprox(-a));
    CHECK(rot.factor_corr(0, 0) == 1.0);
}

TEST_CASE("minres on an exact one-factor correlation matrix") {
    Vector lambda = Vector::Constant(6, 0.8);
    Matrix corr = lambda * lambda.transpose();
    corr.diagonal().setOnes();
    auto const r = extract_minres(corr, 1);
    CHECK(r.converged);
    CHECK(r.loadings.cwiseAbs().isApprox(Matrix::Constant(6, 1, 0.8), 1e-4));
    CHECK(r.uniquenesses.isApprox(Vector::Constant(6, 0.36), 1e-3));
    CHECK(r.objective < 1e-8);
}

TEST_CASE("minres on the identity finds nothing") {
    auto const r = extract_minres(Matrix::Identity(5, 5), 1);
    CHECK(r.loadings.cwiseAbs().maxCoeff() < 1e-3);
    CHECK(r.objective < 1e-8);
}

TEST_CASE("offdiag residual ignores the diagonal") {
    Matrix a = Matrix::Identity(3, 3), b = Matrix::Zero(3, 3);
    CHECK(offdiag_residual(a, b) == 0);
    a(0, 1) = a(1, 0) = 0.5;
    CHECK(offdiag_residual(a, b) == doctest::Approx(0.5));
}

TEST_CASE("parallel analysis retains at least one factor on noise") {
    std::mt19937_64 rng(2);
    CHECK(parallel_analysis(support::normal_matrix(200, 8, rng), 100, 95.0, 1) == 1);
}

TEST_CASE("parallel analysis finds planted factors") {
    for (int k : {1, 2, 3}) {
        std::mt19937_64 rng(100 + std::uint64_t(k));
        CHECK(parallel_analysis(support::planted_factors(200, k, 6, 0.8, 0.6, rng), 100, 95.0, 4) == k);
    }
}

TEST_CASE("parallel analysis needs a viable matrix") {
    std::mt19937_64 rng(3);
    auto const small = matrix_of(support::normal_matrix(3, 4, rng));
    CHECK_THROWS_AS(parallel_analysis(small), PreconditionError);
}

TEST_CASE("regression scores are centered") {
    std::mt19937_64 rng(4);
    Matrix const x = support::planted_factors(60, 2, 4, 0.8, 0.6, rng);
    auto const sol = primary_factor_solution(matrix_of(x), {.pa_iterations = 50});
    CHECK(sol.method == ExtractionMethod::efa_minres);
    CHECK(sol.n_factors == 2);
    CHECK(sol.scores.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sol.scores.rows() == 60);
}

TEST_CASE("method follows the models-to-items ratio") {
    std::mt19937_64 rng(5);
    auto const efa = primary_factor_solution(matrix_of(support::planted_factors(50, 1, 5, 0.8, 0.6, rng)), {.pa_iterations = 30});
    CHECK(efa.method == ExtractionMethod::efa_minres);
    CHECK(efa.pattern.rows() == 5);

    auto const pca = primary_factor_solution(matrix_of(support::planted_factors(50, 1, 100, 0.8, 0.6, rng)), {.pa_iterations = 30});
    CHECK(pca.method == ExtractionMethod::pca_fallback);
    CHECK(pca.n_factors == 1);
    CHECK(pca.pattern.rows() == 100);
    CHECK(sample_variance(pca.scores.col(0)) == doctest::Approx(1.0));
    CHECK(pca.pattern.col(0).minCoeff() > 0);
}

TEST_CASE("primary factor carries the most structure variance") {
    Matrix p(4, 2);
    p << 0.9, 0.0, 0.8, 0.1, 0.1, 0.5, 0.0, 0.4;
    CHECK(primary_factor_index(p, Matrix::Identity(2, 2)) == 0);
    p.col(0).swap(p.col(1));
    CHECK(primary_factor_index(p, Matrix::Identity(2, 2)) == 1);
}

TEST_CASE("congruence basics") {
    Vector x(2), y(2);
    x << 1, 0;
    y << 1, 1;
    CHECK(tucker_phi(x, y) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(tucker_phi(x, Vector(-x)) == doctest::Approx(-1));
    CHECK(std::isnan(tucker_phi(x, Vector::Zero(2).eval())));

    std::mt19937_64 rng(6);
    Matrix const a = support::normal_matrix(10, 3, rng), b = support::normal_matrix(10, 2, rng);
    auto const ab = tucker_congruence(a, b), ba = tucker_congruence(b, a);
    CHECK(ab.matching.size() == 2);
    CHECK(ab.mean_abs_phi == doctest::Approx(ba.mean_abs_phi));
    CHECK(ab.phi_matrix.isApprox(ba.phi_matrix.transpose()));

    Matrix perm(10, 3);
    perm << -a.col(2), a.col(0), a.col(1);
    auto const self = tucker_congruence(a, perm);
    CHECK(self.mean_abs_phi == doctest::Approx(1.0));
    for (auto const& m : self.matching)
        if (m.a == 2) CHECK(m.sign == -1);
}

TEST_CASE("solutions are deterministic for a seed") {
    std::mt19937_64 rng(7);
    auto const m = matrix_of(support::planted_factors(40, 2, 4, 0.7, 0.7, rng));
    FactorOptions opt{.pa_iterations = 40, .seed = 9};
    auto const a = primary_factor_solution(m, opt), b = primary_factor_solution(m, opt);
    CHECK(a.pattern == b.pattern);
    CHECK(a.scores == b.scores);
    CHECK(a.n_factors == b.n_factors);
    CHECK(a.primary_loading(m.item_ids[0]) == a.pattern(0, a.primary_index));
    CHECK_FALSE(a.primary_loading("zzz").has_value());
}
