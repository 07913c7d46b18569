#include "pinlab/factors.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "pinlab/errors.hpp"

namespace pinlab {

std::string_view to_string(ExtractionMethod m) noexcept {
    return m == ExtractionMethod::efa_minres ? "efa_minres" : "pca_fallback";
}

// ---------------------------------------------------------------------------
// Congruence

namespace {

double matching_value(Matrix const& absphi, std::vector<int> const& assign) {
    double s = 0;
    for (std::size_t i = 0; i < assign.size(); ++i) s += absphi(Eigen::Index(i), assign[i]);
    return s;
}

// Rows of `absphi` are the side with fewer factors; assign each row a distinct column.
std::vector<int> best_assignment(Matrix const& absphi) {
    auto const rows = int(absphi.rows()), cols = int(absphi.cols());
    if (cols <= 6) {
        std::vector<int> perm(static_cast<std::size_t>(cols));
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<int> best(perm.begin(), perm.begin() + rows);
        double best_value = matching_value(absphi, best);
        do {
            std::vector<int> cand(perm.begin(), perm.begin() + rows);
            double const v = matching_value(absphi, cand);
            if (v > best_value + 1e-15) {
                best_value = v;
                best = cand;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<int> assign(static_cast<std::size_t>(rows), -1);
    std::vector<bool> row_used(static_cast<std::size_t>(rows)), col_used(static_cast<std::size_t>(cols));
    for (int step = 0; step < rows; ++step) {
        double best = -1;
        int bi = -1, bj = -1;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                if (!row_used[std::size_t(i)] && !col_used[std::size_t(j)] && absphi(i, j) > best) {
                    best = absphi(i, j);
                    bi = i;
                    bj = j;
                }
        row_used[std::size_t(bi)] = col_used[std::size_t(bj)] = true;
        assign[std::size_t(bi)] = bj;
    }
    return assign;
}

}  // namespace

CongruenceResult tucker_congruence(Matrix const& a, Matrix const& b) {
    if (a.rows() != b.rows()) throw PreconditionError("loading matrices must share rows");
    if (a.rows() < 2) throw PreconditionError("congruence needs at least two common items");
    CongruenceResult out;
    out.phi_matrix.resize(a.cols(), b.cols());
    for (Eigen::Index i = 0; i < a.cols(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            double const phi = tucker_phi(a.col(i), b.col(j));
            out.phi_matrix(i, j) = is_missing(phi) ? 0.0 : phi;
        }

    bool const a_smaller = a.cols() <= b.cols();
    Matrix const absphi = a_smaller ? Matrix(out.phi_matrix.cwiseAbs()) : Matrix(out.phi_matrix.cwiseAbs().transpose());
    auto const assign = best_assignment(absphi);
    double total = 0;
    for (std::size_t r = 0; r < assign.size(); ++r) {
        int const ia = a_smaller ? int(r) : assign[r];
        int const ib = a_smaller ? assign[r] : int(r);
        double const phi = out.phi_matrix(ia, ib);
        out.matching.push_back({ia, ib, phi < 0 ? -1 : 1, phi});
        total += std::abs(phi);
    }
    std::sort(out.matching.begin(), out.matching.end(), [](auto const& x, auto const& y) { return x.a < y.a; });
    out.mean_abs_phi = out.matching.empty() ? 0.0 : total / double(out.matching.size());
    return out;
}

CongruenceResult tucker_congruence(FactorSolution const& a, FactorSolution const& b) {
    std::vector<std::string> common;
    std::vector<Eigen::Index> ia, ib;
    for (std::size_t i = 0; i < a.item_ids.size(); ++i) {
        auto it = std::find(b.item_ids.begin(), b.item_ids.end(), a.item_ids[i]);
        if (it == b.item_ids.end()) continue;
        common.push_back(a.item_ids[i]);
        ia.push_back(Eigen::Index(i));
        ib.push_back(Eigen::Index(it - b.item_ids.begin()));
    }
    if (common.empty()) throw PreconditionError("solutions share no items");
    if (common.size() < 2) throw PreconditionError("solutions share fewer than two items");
    Matrix la(Eigen::Index(common.size()), a.pattern.cols()), lb(Eigen::Index(common.size()), b.pattern.cols());
    for (std::size_t r = 0; r < common.size(); ++r) {
        la.row(Eigen::Index(r)) = a.pattern.row(ia[r]);
        lb.row(Eigen::Index(r)) = b.pattern.row(ib[r]);
    }
    auto out = tucker_congruence(la, lb);
    out.common_items = std::move(common);
    return out;
}

// ---------------------------------------------------------------------------
// Minres

double offdiag_residual(Matrix const& corr, Matrix const& reproduced) {
    Matrix resid = corr - reproduced;
    resid.diagonal().setZero();
    return resid.squaredNorm();
}

namespace {

Matrix loadings_from_reduced(Matrix const& corr, Vector const& psi, int k) {
    Matrix reduced = corr;
    reduced.diagonal() = Vector::Ones(corr.rows()) - psi;
    auto const eig = sorted_eigen(reduced);
    Matrix L = eig.vectors.leftCols(k);
    for (int j = 0; j < k; ++j) L.col(j) *= std::sqrt(std::max(eig.values(j), 0.0));
    return L;
}

double minres_objective(Matrix const& corr, Vector const& psi, int k) {
    Matrix const L = loadings_from_reduced(corr, psi, k);
    return offdiag_residual(corr, L * L.transpose());
}

Vector initial_uniquenesses(Matrix const& corr) {
    // 1 - squared multiple correlation; pseudo-inverse when R is singular.
    Eigen::SelfAdjointEigenSolver<Matrix> es(corr);
    Vector inv_vals = es.eigenvalues();
    double const cutoff = 1e-10 * std::max(1.0, inv_vals.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < inv_vals.size(); ++i) inv_vals(i) = inv_vals(i) > cutoff ? 1.0 / inv_vals(i) : 0.0;
    Matrix const rinv = es.eigenvectors() * inv_vals.asDiagonal() * es.eigenvectors().transpose();
    Vector psi(corr.rows());
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = rinv(i, i) > 0 ? 1.0 / rinv(i, i) : 1.0;
    return psi;
}

}  // namespace

MinresResult extract_minres(Matrix const& corr, int n_factors, MinresOptions const& options) {
    auto const p = corr.rows();
    if (corr.cols() != p) throw PreconditionError("correlation matrix must be square");
    if (n_factors < 1 || n_factors >= p) throw PreconditionError("need 1 <= n_factors < item count");

    double const lo = options.min_uniqueness, hi = 1.0;
    auto project = [&](Vector v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::clamp(v(i), lo, hi);
        return v;
    };
    auto objective = [&](Vector const& psi) { return minres_objective(corr, psi, n_factors); };
    auto gradient = [&](Vector const& psi) {
        Vector g(p);
        double const h = 1e-6;
        for (Eigen::Index i = 0; i < p; ++i) {
            Vector up = psi, down = psi;
            up(i) = std::min(psi(i) + h, hi);
            down(i) = std::max(psi(i) - h, lo);
            g(i) = (objective(up) - objective(down)) / (up(i) - down(i));
        }
        return g;
    };

    MinresResult out;
    Vector psi = project(initial_uniquenesses(corr));
    double f = objective(psi);
    Vector g = gradient(psi);
    double alpha = 1.0;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        Vector const d = project(psi - alpha * g) - psi;
        if (d.lpNorm<Eigen::Infinity>() < 1e-12 || f == 0.0) {
            out.converged = true;
            break;
        }
        double const slope = g.dot(d);
        double lambda = 1.0;
        Vector trial = psi + d;
        double ft = objective(trial);
        for (int ls = 0; ls < 40 && ft > f + 1e-4 * lambda * slope; ++ls) {
            lambda *= 0.5;
            trial = psi + lambda * d;
            ft = objective(trial);
        }
        Vector const gt = gradient(trial);
        Vector const s = trial - psi, y = gt - g;
        double const sty = s.dot(y);
        alpha = sty > 0 ? std::clamp(s.squaredNorm() / sty, 1e-10, 1e10) : 1e3;
        double const change = std::abs(f - ft);
        psi = trial;
        g = gt;
        double const prev = f;
        f = ft;
        if (change <= options.tolerance * std::max(prev, std::numeric_limits<double>::min())) {
            out.converged = true;
            ++iter;
            break;
        }
    }

    out.iterations = iter;
    out.uniquenesses = psi;
    out.loadings = loadings_from_reduced(corr, psi, n_factors);
    for (int j = 0; j < n_factors; ++j) {
        auto col = out.loadings.col(j);
        orient_largest_positive(col);
    }
    out.objective = offdiag_residual(corr, out.loadings * out.loadings.transpose());
    out.heywood = (psi.array() <= lo * (1 + 1e-9)).any();
    return out;
}

// ---------------------------------------------------------------------------
// Parallel analysis

int parallel_analysis(Matrix const& data, int n_iter, double pct, std::uint64_t seed) {
    auto const n = data.rows(), p = data.cols();
    if (n < 3 || p < 1) throw PreconditionError("parallel analysis needs at least 3 rows and 1 column");
    Vector const observed = sorted_eigen(correlation_matrix(data), false).values;

    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> null_values(static_cast<std::size_t>(p));
    Matrix shuffled = data;
    for (int it = 0; it < n_iter; ++it) {
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = n - 1; i > 0; --i) {
                std::uniform_int_distribution<Eigen::Index> pick(0, i);
                std::swap(shuffled(i, j), shuffled(pick(rng), j));
            }
        }
        Vector const ev = sorted_eigen(correlation_matrix(shuffled), false).values;
        for (Eigen::Index r = 0; r < p; ++r) null_values[std::size_t(r)].push_back(ev(r));
    }

    int retained = 0;
    for (Eigen::Index r = 0; r < p; ++r) {
        if (observed(r) > percentile(null_values[std::size_t(r)], pct))
            ++retained;
        else
            break;
    }
    return std::max(retained, 1);
}

int parallel_analysis(ResponseMatrix const& matrix, int n_iter, double pct, std::uint64_t seed) {
    if (!matrix.viable) throw PreconditionError("parallel analysis requires a viable matrix");
    return parallel_analysis(matrix.values, n_iter, pct, seed);
}

// ---------------------------------------------------------------------------
// Scores

ScoreResult factor_scores(Matrix const& data, Matrix const& pattern, Matrix const& factor_corr) {
    if (data.cols() != pattern.rows()) throw PreconditionError("pattern rows must match data columns");
    ScoreResult out;
    Matrix const z = standardize_columns(data);
    Matrix r = correlation_matrix(data);
    Matrix const structure = pattern * factor_corr;
    Eigen::LDLT<Matrix> ldlt(r);
    bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12;
    if (singular) {
        r.diagonal().array() += 1e-8;
        ldlt.compute(r);
        out.ridge = true;
    }
    Matrix const weights = ldlt.solve(structure);
    out.scores = z * weights;
    out.scores.rowwise() -= out.scores.colwise().mean();
    return out;
}

// ---------------------------------------------------------------------------
// Solution

int primary_factor_index(Matrix const& pattern, Matrix const& factor_corr) {
    Matrix const structure = pattern * factor_corr;
    Eigen::Index idx = 0;
    structure.colwise().squaredNorm().maxCoeff(&idx);
    return int(idx);
}

std::optional<double> FactorSolution::primary_loading(std::string_view item_id) const {
    auto it = std::find(item_ids.begin(), item_ids.end(), item_id);
    if (it == item_ids.end()) return std::nullopt;
    return pattern(Eigen::Index(it - item_ids.begin()), primary_index);
}

namespace {

void pca_fallback(Matrix const& data, int k, FactorSolution& sol) {
    Matrix const r = correlation_matrix(data);
    auto const eig = sorted_eigen(r);
    int positive = 0;
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) positive += eig.values(j) > 1e-10;
    k = std::clamp(k, 1, std::max(positive, 1));

    Matrix const z = standardize_columns(data);
    sol.method = ExtractionMethod::pca_fallback;
    sol.n_factors = k;
    sol.pattern.resize(data.cols(), k);
    sol.scores.resize(data.rows(), k);
    for (int j = 0; j < k; ++j) {
        Vector v = eig.vectors.col(j);
        orient_largest_positive(v);
        double const lambda = std::max(eig.values(j), 0.0);
        sol.pattern.col(j) = v * std::sqrt(lambda);
        Vector proj = z * v;
        sol.scores.col(j) = lambda > 0 ? Vector(proj / std::sqrt(lambda)) : Vector(Vector::Zero(proj.size()));
    }
    sol.factor_corr = Matrix::Identity(k, k);
    sol.objective = 0;
}

}  // namespace

FactorSolution primary_factor_solution(ResponseMatrix const& matrix, FactorOptions const& options) {
    if (!matrix.viable) throw PreconditionError("factor solution requires a viable matrix: " + matrix.questionnaire_id);
    FactorSolution sol;
    sol.questionnaire_id = matrix.questionnaire_id;
    sol.condition_id = matrix.condition_id;
    sol.item_ids = matrix.item_ids;
    sol.model_slugs = matrix.model_slugs();
    sol.seed = options.seed;

    auto const n = matrix.values.rows(), p = matrix.values.cols();
    int const k = parallel_analysis(matrix.values, options.pa_iterations, options.pa_percentile, options.seed);

    if (n > p && p >= 2) {
        int const factors = std::min<int>(k, int(p) - 1);
        Matrix const r = correlation_matrix(matrix.values);
        auto const mr = extract_minres(r, factors, options.minres);
        auto const rot = rotate_oblimin(mr.loadings);
        auto const sc = factor_scores(matrix.values, rot.pattern, rot.factor_corr);
        sol.method = ExtractionMethod::efa_minres;
        sol.n_factors = factors;
        sol.pattern = rot.pattern;
        sol.factor_corr = rot.factor_corr;
        sol.scores = sc.scores;
        sol.flags.minres_converged = mr.converged;
        sol.flags.heywood = mr.heywood;
        sol.flags.rotation_converged = rot.converged;
        sol.flags.ridge = sc.ridge;
        sol.objective = offdiag_residual(r, rot.pattern * rot.factor_corr * rot.pattern.transpose());
    } else {
        pca_fallback(matrix.values, k, sol);
    }
    sol.primary_index = primary_factor_index(sol.pattern, sol.factor_corr);
    return sol;
}

}  // namespace pinlab
