#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinlab/cleaning.hpp"
#include "pinlab/stats.hpp"

namespace pinlab {

// ---------------------------------------------------------------------------
// Oblique rotation

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Direct oblimin criterion value at loadings L and its gradient with respect to L.
/// gamma = 0 is quartimin.
template <typename Derived>
typename Derived::Scalar oblimin_criterion(Eigen::MatrixBase<Derived> const& L, typename Derived::Scalar gamma,
                                           DenseMatrix<typename Derived::Scalar>& gradient) {
    using Scalar = typename Derived::Scalar;
    auto const p = L.rows(), k = L.cols();
    DenseMatrix<Scalar> const L2 = L.array().square().matrix();
    DenseMatrix<Scalar> const off = DenseMatrix<Scalar>::Ones(k, k) - DenseMatrix<Scalar>::Identity(k, k);
    DenseMatrix<Scalar> X = L2 * off;
    if (gamma != Scalar(0)) {
        DenseMatrix<Scalar> const centre =
            DenseMatrix<Scalar>::Identity(p, p) - gamma * DenseMatrix<Scalar>::Constant(p, p, Scalar(1) / Scalar(p));
        X = centre * X;
    }
    gradient = L.cwiseProduct(X);
    return L2.cwiseProduct(X).sum() / Scalar(4);
}

template <typename Scalar>
struct RotationResult {
    DenseMatrix<Scalar> pattern;      // rotated loadings (items x factors)
    DenseMatrix<Scalar> factor_corr;  // Phi = T'T
    DenseMatrix<Scalar> rotation;     // T, unit-length columns
    Scalar criterion = 0;
    int iterations = 0;
    bool converged = true;
};

/// Gradient-projection oblique rotation (direct oblimin) with step halving.
/// Columns of the result are sign-normalized so each column's largest-magnitude
/// loading is positive; Phi is flipped to match.
template <typename Derived>
RotationResult<typename Derived::Scalar> rotate_oblimin(Eigen::MatrixBase<Derived> const& A,
                                                        typename Derived::Scalar gamma = 0,
                                                        typename Derived::Scalar tolerance = 1e-6,
                                                        int max_iterations = 500) {
    using Scalar = typename Derived::Scalar;
    using Mat = DenseMatrix<Scalar>;
    auto const k = A.cols();
    RotationResult<Scalar> out;
    Mat T = Mat::Identity(k, k);

    if (k > 1) {
        Mat Gq;
        Mat L = A * T.inverse().transpose();
        Scalar f = oblimin_criterion(L, gamma, Gq);
        Mat G = -(L.transpose() * Gq * T.inverse()).transpose();
        Scalar step = 1;
        out.converged = false;
        int iter = 0;
        for (; iter < max_iterations; ++iter) {
            Mat const Gp = G - T * (T.cwiseProduct(G).colwise().sum()).asDiagonal();
            Scalar const s = Gp.norm();
            if (s < tolerance) {
                out.converged = true;
                break;
            }
            step *= 2;
            Mat Tt, Lt, Gqt;
            Scalar ft = f;
            for (int halving = 0; halving <= 10; ++halving) {
                Mat const X = T - step * Gp;
                Eigen::Matrix<Scalar, Eigen::Dynamic, 1> const norms = X.colwise().norm().transpose();
                Tt = X * norms.cwiseInverse().asDiagonal();
                Lt = A * Tt.inverse().transpose();
                ft = oblimin_criterion(Lt, gamma, Gqt);
                if (f - ft > Scalar(0.5) * s * s * step) break;
                step /= 2;
            }
            T = Tt;
            L = Lt;
            f = ft;
            G = -(L.transpose() * Gqt * T.inverse()).transpose();
        }
        out.iterations = iter;
        out.criterion = f;
    }

    out.rotation = T;
    out.pattern = A * T.inverse().transpose();
    out.factor_corr = T.transpose() * T;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::Index idx = 0;
        out.pattern.col(j).cwiseAbs().maxCoeff(&idx);
        if (out.pattern(idx, j) < 0) {
            out.pattern.col(j) *= -1;
            out.rotation.col(j) *= -1;
            out.factor_corr.row(j) *= -1;
            out.factor_corr.col(j) *= -1;
        }
    }
    out.factor_corr = Scalar(0.5) * (out.factor_corr + out.factor_corr.transpose());
    out.factor_corr.diagonal().setOnes();
    return out;
}

// ---------------------------------------------------------------------------
// Congruence

/// Tucker's congruence coefficient between two loading vectors; NaN if either is zero.
template <typename DX, typename DY>
typename DX::Scalar tucker_phi(Eigen::MatrixBase<DX> const& x, Eigen::MatrixBase<DY> const& y) {
    auto const denom = std::sqrt(x.squaredNorm() * y.squaredNorm());
    if (denom == 0) return typename DX::Scalar(kMissing);
    return x.dot(y) / denom;
}

struct FactorMatch {
    int a = 0;
    int b = 0;
    int sign = 1;  // -1 when b is reflected to match a
    double phi = 0;
};

struct CongruenceResult {
    Matrix phi_matrix;  // factors of A x factors of B
    std::vector<FactorMatch> matching;
    double mean_abs_phi = 0;
    std::vector<std::string> common_items;
};

/// Congruence between two loading matrices over the same rows. Optimal one-to-one
/// matching of min(kA, kB) pairs maximizing sum |phi| (exhaustive up to 6 factors,
/// greedy beyond), sign reflection allowed.
CongruenceResult tucker_congruence(Matrix const& a, Matrix const& b);

// ---------------------------------------------------------------------------
// Extraction and retention

struct MinresOptions {
    /// Relative objective change below which the optimizer stops.
    double tolerance = 1e-6;
    int max_iterations = 1000;
    double min_uniqueness = 1e-6;
};

struct MinresResult {
    Matrix loadings;  // unrotated, items x factors
    Vector uniquenesses;
    double objective = 0;  // sum of squared off-diagonal residuals
    int iterations = 0;
    bool converged = false;
    bool heywood = false;
};

/// Sum of squared off-diagonal entries of corr - L L'.
double offdiag_residual(Matrix const& corr, Matrix const& reproduced);

/// Minimum-residual extraction: projected spectral gradient over uniquenesses in
/// [min_uniqueness, 1], loadings from the top eigenpairs of corr - diag(psi).
MinresResult extract_minres(Matrix const& corr, int n_factors, MinresOptions const& options = {});

/// Permutation parallel analysis on a complete data matrix.
int parallel_analysis(Matrix const& data, int n_iter = 200, double percentile = 95.0, std::uint64_t seed = 0);

/// Same on a response matrix; throws PreconditionError unless viable.
int parallel_analysis(ResponseMatrix const& matrix, int n_iter = 200, double percentile = 95.0, std::uint64_t seed = 0);

struct ScoreResult {
    Matrix scores;
    bool ridge = false;
};

/// Thurstone regression scores: Z R^-1 (Lambda Phi), Z the column-standardized data.
ScoreResult factor_scores(Matrix const& data, Matrix const& pattern, Matrix const& factor_corr);

// ---------------------------------------------------------------------------
// Per-questionnaire solution

enum class ExtractionMethod { efa_minres, pca_fallback };

std::string_view to_string(ExtractionMethod m) noexcept;

struct SolutionFlags {
    bool minres_converged = true;
    bool heywood = false;
    bool rotation_converged = true;
    bool ridge = false;

    friend bool operator==(SolutionFlags const&, SolutionFlags const&) = default;
};

struct FactorSolution {
    std::string questionnaire_id;
    std::string condition_id;
    ExtractionMethod method = ExtractionMethod::efa_minres;
    int n_factors = 1;
    Matrix pattern;      // items x factors
    Matrix factor_corr;  // factors x factors
    Matrix scores;       // models x factors
    int primary_index = 0;
    std::vector<std::string> item_ids;
    std::vector<std::string> model_slugs;
    std::uint64_t seed = 0;
    SolutionFlags flags;
    double objective = 0;  // minres residual (0 for the PCA fallback)

    Matrix structure() const { return pattern * factor_corr; }
    Vector primary_loadings() const { return pattern.col(primary_index); }
    Vector primary_scores() const { return scores.col(primary_index); }
    /// Primary-factor pattern loading of an item, if present.
    std::optional<double> primary_loading(std::string_view item_id) const;
};

struct FactorOptions {
    int pa_iterations = 200;
    double pa_percentile = 95.0;
    std::uint64_t seed = 0;
    MinresOptions minres;
};

/// Factor with the largest sum of squared structure loadings.
int primary_factor_index(Matrix const& pattern, Matrix const& factor_corr);

/// EFA (minres + oblimin + regression scores) when models outnumber items,
/// otherwise the first-principal-component fallback.
FactorSolution primary_factor_solution(ResponseMatrix const& matrix, FactorOptions const& options = {});

CongruenceResult tucker_congruence(FactorSolution const& a, FactorSolution const& b);

}  // namespace pinlab
