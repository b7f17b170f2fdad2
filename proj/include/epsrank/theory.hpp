#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epsrank/gram.hpp"
#include "epsrank/grid.hpp"
#include "epsrank/linalg.hpp"
#include "epsrank/matrix.hpp"
#include "epsrank/rng.hpp"

namespace epsrank {

/* Row split of an orthonormal n x p matrix: `permutation` lists the p kept
 * row indices (ascending) followed by the n-p dropped ones (ascending).
 * v22_min_sigma is the smallest singular value of the kept p x p block,
 * which equals the smallest singular value of the complementary
 * (n-p) x (n-p) block of any orthogonal completion (CS decomposition). */
struct SubsetSelection {
    std::vector<std::size_t> permutation;
    double v22_min_sigma = 0.0;
    bool exhaustive = true; // false when the greedy heuristic decided
};

/* Outcome of compressing an n-term combination to its eps-rank p terms.
 * certified_bound = C (p+1)(n-p)^2 eps with C = |beta|^2; lemma_bound is
 * the alternative constant C (p(n-p)+min(p,n-p))(n-p) eps implied by the
 * submatrix bound, reported alongside without being the asserted one.
 * measured_error is the squared L2 distance on the quadrature grid. */
struct CompressionResult {
    std::size_t n = 0;
    std::size_t p = 0;
    double epsilon = 0.0;
    std::vector<std::size_t> selected_indices; // ascending, size p
    std::vector<double> beta_tilde;            // aligned with selected_indices
    double certified_bound = 0.0;
    double lemma_bound = 0.0;
    double measured_error = 0.0;
    double v22_min_sigma = 0.0;
    bool exhaustive_selection = true;

    nlohmann::json to_json() const {
        return nlohmann::json{{"n", n},
                              {"p", p},
                              {"epsilon", epsilon},
                              {"selected_indices", selected_indices},
                              {"beta_tilde", beta_tilde},
                              {"certified_bound", certified_bound},
                              {"lemma_bound", lemma_bound},
                              {"measured_error", measured_error},
                              {"v22_min_sigma", v22_min_sigma},
                              {"exhaustive_selection", exhaustive_selection}};
    }
};

/* Sampling report for the orthogonal-submatrix bound. worst_best_sigma is
 * the minimum over sampled orthonormal matrices of the best sigma_min over
 * all p x p row submatrices; it must stay above paper_bound (a theorem),
 * while conjecture_bound = 1/sqrt(n) is compared but never asserted. */
struct LemmaProbe {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t trials = 0;
    double worst_best_sigma = 0.0;
    double paper_bound = 0.0;
    double conjecture_bound = 0.0;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"n", n},
            {"p", p},
            {"trials", trials},
            {"worst_best_sigma", worst_best_sigma},
            {"paper_bound", paper_bound},
            {"conjecture_bound", conjecture_bound},
            {"conjecture_holds", worst_best_sigma >= conjecture_bound - 1e-10}};
    }
};

namespace detail {

/* Binomial coefficient, saturating at `cap` to avoid overflow; used only to
 * decide exhaustive vs greedy search. */
inline double binomial_capped(std::size_t n, std::size_t p, double cap) {
    if (p > n) return 0.0;
    const std::size_t q = std::min(p, n - p);
    double c = 1.0;
    for (std::size_t i = 1; i <= q; ++i) {
        c *= static_cast<double>(n - q + i) / static_cast<double>(i);
        if (c > cap) return cap + 1.0;
    }
    return c;
}

// smallest singular value via the normal equations; b may be any shape
inline double sigma_min(const Matrix& b) {
    Matrix g;
    gemm_tn(b, b, g);
    const SymEigResult eig = sym_eig(g);
    return std::sqrt(std::max(eig.eigenvalues.back(), 0.0));
}

// sigma_min of the p x p block formed by the given rows of an n x p matrix
inline double sigma_min_of_rows(const Matrix& q, const std::vector<std::size_t>& rows) {
    const std::size_t p = q.cols;
    Matrix b(rows.size(), p);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < p; ++j) b(i, j) = q(rows[i], j);
    return sigma_min(b);
}

// advance a lexicographic p-combination of {0..n-1}; false when exhausted
inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t p = idx.size();
    std::size_t i = p;
    while (i > 0) {
        --i;
        if (idx[i] + (p - i) < n) {
            ++idx[i];
            for (std::size_t j = i + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

inline SubsetSelection finish_selection(std::vector<std::size_t> kept, std::size_t n,
                                        double sigma, bool exhaustive) {
    std::sort(kept.begin(), kept.end());
    SubsetSelection sel;
    sel.permutation = kept;
    sel.permutation.reserve(n);
    std::vector<bool> in_kept(n, false);
    for (std::size_t r : kept) in_kept[r] = true;
    for (std::size_t r = 0; r < n; ++r)
        if (!in_kept[r]) sel.permutation.push_back(r);
    sel.v22_min_sigma = sigma;
    sel.exhaustive = exhaustive;
    return sel;
}

/* Exhaustive search over all p-row subsets; lexicographic enumeration with
 * strictly-greater updates keeps the lexicographically smallest argmax. */
inline SubsetSelection select_exhaustive(const Matrix& q) {
    const std::size_t n = q.rows, p = q.cols;
    std::vector<std::size_t> idx(p);
    for (std::size_t i = 0; i < p; ++i) idx[i] = i;
    std::vector<std::size_t> best_idx = idx;
    double best = -1.0;
    do {
        const double s = sigma_min_of_rows(q, idx);
        if (s > best) {
            best = s;
            best_idx = idx;
        }
    } while (next_combination(idx, n));
    return finish_selection(best_idx, n, best, true);
}

/* Greedy pivoted elimination on the rows of q (norm pivoting, ties to the
 * smallest index), then kept/dropped swaps while any swap improves sigma_min
 * by more than a relative epsilon. The swap pass is what keeps the heuristic
 * close to the exhaustive optimum on generic inputs. */
inline SubsetSelection select_greedy(const Matrix& q) {
    const std::size_t n = q.rows, p = q.cols;
    std::vector<std::vector<double>> resid(n, std::vector<double>(p));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) resid[i][j] = q(i, j);
    std::vector<bool> chosen(n, false);
    std::vector<std::size_t> kept;
    kept.reserve(p);
    for (std::size_t t = 0; t < p; ++t) {
        std::size_t arg = n;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += resid[i][j] * resid[i][j];
            if (s > best) {
                best = s;
                arg = i;
            }
        }
        chosen[arg] = true;
        kept.push_back(arg);
        if (best <= 1e-28) continue; // remaining rows are in the chosen span
        const double norm = std::sqrt(best);
        std::vector<double> u = resid[arg];
        for (double& v : u) v /= norm;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < p; ++j) dot += resid[i][j] * u[j];
            for (std::size_t j = 0; j < p; ++j) resid[i][j] -= dot * u[j];
        }
    }

    std::sort(kept.begin(), kept.end());
    double sigma = sigma_min_of_rows(q, kept);
    for (int pass = 0; pass < 50; ++pass) {
        bool improved = false;
        for (std::size_t a = 0; a < p && !improved; ++a) {
            for (std::size_t r = 0; r < n && !improved; ++r) {
                if (std::find(kept.begin(), kept.end(), r) != kept.end()) continue;
                std::vector<std::size_t> cand = kept;
                cand[a] = r;
                const double s = sigma_min_of_rows(q, cand);
                if (s > sigma * (1.0 + 1e-12)) {
                    std::sort(cand.begin(), cand.end());
                    kept = cand;
                    sigma = s;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }
    return finish_selection(kept, n, sigma, false);
}

/* Gaussian elimination with partial pivoting for a small square system.
 * Callers check conditioning beforehand; a vanishing pivot still throws. */
inline std::vector<double> lu_solve(Matrix a, std::vector<double> b) {
    const std::size_t m = a.rows;
    if (a.cols != m || b.size() != m)
        throw std::invalid_argument("lu_solve: shape mismatch");
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t piv = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < m; ++i)
            if (std::abs(a(i, k)) > best) {
                best = std::abs(a(i, k));
                piv = i;
            }
        if (best < 1e-300) throw std::runtime_error("lu_solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < m; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < m; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < m; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(m);
    for (std::size_t i = m; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < m; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

} // namespace detail

/* Split the rows of an orthonormal n x p matrix into p kept and n-p dropped
 * so that the kept p x p block has the largest attainable sigma_min:
 * exhaustively over all C(n,p) subsets when that count is at most 1e4,
 * otherwise by greedy pivoted elimination with swap refinement (flagged).
 * Ties resolve to the lexicographically smallest subset. */
inline SubsetSelection select_subset(const Matrix& q) {
    const std::size_t n = q.rows, p = q.cols;
    if (n == 0 || p == 0 || p > n)
        throw std::invalid_argument("select_subset: need an n x p matrix with 1 <= p <= n");
    Matrix g;
    gemm_tn(q, q, g);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double want = (i == j) ? 1.0 : 0.0;
            if (std::abs(g(i, j) - want) > 1e-8)
                throw std::invalid_argument("select_subset: columns not orthonormal");
        }
    if (detail::binomial_capped(n, p, 1e4) <= 1e4) return detail::select_exhaustive(q);
    return detail::select_greedy(q);
}

/* Compress f = sum_j beta_j f_j to its eps-rank p terms, following the
 * constructive proof: eigendecompose the Gram M = Q Lambda Q^T (eigenvalues
 * descending), pick the kept rows by select_subset on the first p columns
 * of Q, and transfer coefficients by
 *   beta_tilde = beta_kept - V12 V22^{-1} beta_dropped,
 * where V12, V22 are the kept/dropped row blocks of Q's trailing n-p
 * columns. f_evals holds the n functions sampled on the grid (one column
 * per function); the strict eigenvalue comparison matches eps_rank. */
inline CompressionResult compress(const Matrix& f_evals, const std::vector<double>& beta,
                                  const QuadratureGrid& grid, double epsilon) {
    const std::size_t n = f_evals.cols;
    if (n == 0) throw std::invalid_argument("compress: no functions");
    if (beta.size() != n) throw std::invalid_argument("compress: beta length != function count");
    if (epsilon < 0.0) throw std::invalid_argument("compress: epsilon must be >= 0");
    double beta_sq = 0.0;
    for (double b : beta) {
        if (!std::isfinite(b)) throw std::invalid_argument("compress: beta not finite");
        beta_sq += b * b;
    }

    const Matrix m = gram_matrix(f_evals, grid);
    const SymEigResult eig = sym_eig(m);
    std::size_t p = 0;
    while (p < n && eig.eigenvalues[p] > epsilon) ++p;
    if (p == 0)
        throw std::invalid_argument("compress: eps-rank is zero, no term exceeds epsilon");

    CompressionResult res;
    res.n = n;
    res.p = p;
    res.epsilon = epsilon;
    const double np = static_cast<double>(n - p);
    res.certified_bound = beta_sq * static_cast<double>(p + 1) * np * np * epsilon;
    res.lemma_bound =
        beta_sq * (static_cast<double>(p) * np + std::min(static_cast<double>(p), np)) * np *
        epsilon;

    if (p == n) {
        res.selected_indices.resize(n);
        for (std::size_t i = 0; i < n; ++i) res.selected_indices[i] = i;
        res.beta_tilde = beta;
        res.measured_error = 0.0;
        res.v22_min_sigma = 1.0; // empty dropped block, conventionally nonsingular
        return res;
    }

    Matrix q1(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) q1(i, j) = eig.eigenvectors(i, j);
    const SubsetSelection sel = select_subset(q1);
    res.exhaustive_selection = sel.exhaustive;
    const std::vector<std::size_t> kept(sel.permutation.begin(), sel.permutation.begin() + p);
    const std::vector<std::size_t> dropped(sel.permutation.begin() + p, sel.permutation.end());

    Matrix v12(p, n - p), v22(n - p, n - p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < n - p; ++j) v12(i, j) = eig.eigenvectors(kept[i], p + j);
    for (std::size_t i = 0; i < n - p; ++i)
        for (std::size_t j = 0; j < n - p; ++j) v22(i, j) = eig.eigenvectors(dropped[i], p + j);

    res.v22_min_sigma = detail::sigma_min(v22);
    if (res.v22_min_sigma < 1e-12)
        throw std::runtime_error(
            "compress: V22 numerically singular (sigma_min=" +
            std::to_string(res.v22_min_sigma) + ", n=" + std::to_string(n) +
            ", p=" + std::to_string(p) + "); no searched permutation gives an invertible block");

    std::vector<double> beta_dropped(n - p);
    for (std::size_t i = 0; i < n - p; ++i) beta_dropped[i] = beta[dropped[i]];
    const std::vector<double> y = detail::lu_solve(v22, beta_dropped);
    res.selected_indices = kept;
    res.beta_tilde.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        double s = beta[kept[i]];
        for (std::size_t j = 0; j < n - p; ++j) s -= v12(i, j) * y[j];
        res.beta_tilde[i] = s;
    }

    double err = 0.0;
    for (std::size_t k = 0; k < f_evals.rows; ++k) {
        const double* row = f_evals.row(k);
        double full = 0.0;
        for (std::size_t j = 0; j < n; ++j) full += row[j] * beta[j];
        double comp = 0.0;
        for (std::size_t i = 0; i < p; ++i) comp += row[kept[i]] * res.beta_tilde[i];
        const double r = full - comp;
        err += grid.weights[k] * r * r;
    }
    res.measured_error = err;
    return res;
}

/* Sample Haar-distributed orthonormal n x p matrices (QR of a Gaussian
 * matrix via modified Gram-Schmidt with a second projection pass; positive
 * diagonal makes the factor unique, hence Haar) and record the minimum over
 * trials of the best sigma_min over all p x p row submatrices. The paper
 * bound is a theorem, so a violation throws: it can only mean a bug. */
inline LemmaProbe probe_lemma(std::size_t n, std::size_t p, std::size_t trials,
                              std::uint64_t seed) {
    if (p < 1 || p >= n || n > 10)
        throw std::invalid_argument("probe_lemma: need 1 <= p < n <= 10");
    if (trials < 1) throw std::invalid_argument("probe_lemma: need trials >= 1");

    Rng rng(seed);
    LemmaProbe probe;
    probe.n = n;
    probe.p = p;
    probe.trials = trials;
    const double np = static_cast<double>(n - p);
    probe.paper_bound =
        1.0 / std::sqrt(static_cast<double>(p) * np + std::min(static_cast<double>(p), np));
    probe.conjecture_bound = 1.0 / std::sqrt(static_cast<double>(n));

    double worst = std::numeric_limits<double>::infinity();
    Matrix q(n, p);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<double> v(n);
            double norm = 0.0;
            do {
                for (std::size_t i = 0; i < n; ++i) v[i] = rng.normal();
                for (int pass = 0; pass < 2; ++pass)
                    for (std::size_t k = 0; k < j; ++k) {
                        double dot = 0.0;
                        for (std::size_t i = 0; i < n; ++i) dot += q(i, k) * v[i];
                        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q(i, k);
                    }
                norm = 0.0;
                for (double x : v) norm += x * x;
                norm = std::sqrt(norm);
            } while (norm < 1e-12);
            for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / norm;
        }

        std::vector<std::size_t> idx(p);
        for (std::size_t i = 0; i < p; ++i) idx[i] = i;
        double best = -1.0;
        do {
            best = std::max(best, detail::sigma_min_of_rows(q, idx));
        } while (detail::next_combination(idx, n));
        worst = std::min(worst, best);
    }
    probe.worst_best_sigma = worst;
    if (worst < probe.paper_bound - 1e-10)
        throw std::logic_error("probe_lemma: sampled sigma " + std::to_string(worst) +
                               " violates the bound " + std::to_string(probe.paper_bound) +
                               "; the submatrix search is buggy");
    return probe;
}

} // namespace epsrank
