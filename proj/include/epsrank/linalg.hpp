#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "epsrank/matrix.hpp"

namespace epsrank {

struct SymEigResult {
    std::vector<double> eigenvalues; // sorted descending
    Matrix eigenvectors;             // column j pairs with eigenvalues[j]
};

namespace detail {

inline double offdiag_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

} // namespace detail

/* Symmetric eigendecomposition by cyclic Jacobi rotations.
 * Converged when the off-diagonal Frobenius norm falls below 1e-12 times
 * the Frobenius norm of the input; hard cap of 100 sweeps. Eigenvalues are
 * returned descending with matching eigenvector columns; each column is
 * sign-fixed (largest-magnitude entry positive) so output is reproducible. */
inline SymEigResult sym_eig(const Matrix& m) {
    if (m.rows != m.cols)
        throw std::invalid_argument("sym_eig: matrix not square");
    const std::size_t n = m.rows;
    if (n == 0)
        throw std::invalid_argument("sym_eig: empty matrix");
    const double norm = frobenius_norm(m);
    const double sym_tol = 1e-12 * std::max(1.0, norm);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > sym_tol)
                throw std::invalid_argument("sym_eig: matrix not symmetric");

    Matrix a = m;
    // force exact symmetry so the sweep sees one consistent value per pair
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = a(j, i) = v;
        }
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double stop = 1e-12 * norm;
    bool converged = (detail::offdiag_norm(a) <= stop);
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(theta * theta + 1.0))
                                     : 1.0 / (theta - std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - s * akq;
                    a(k, q) = a(q, k) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = (detail::offdiag_norm(a) <= stop);
    }
    if (!converged)
        throw std::runtime_error("sym_eig: Jacobi sweeps did not converge within 100 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymEigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.eigenvalues[j] = a(src, src);
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::abs(v(i, src));
            if (mag > best) { best = mag; arg = i; }
        }
        const double sgn = (v(arg, src) < 0.0) ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i)
            out.eigenvectors(i, j) = sgn * v(i, src);
    }
    return out;
}

/* Minimum-norm least squares with spectral truncation. Solves via the
 * normal equations G = A^T A decomposed by sym_eig; singular values are
 * sqrt of G's eigenvalues. Directions with sigma < trunc_tol * sigma_max
 * are treated as zero, as are those below the numerical floor of the
 * normal-equations route (eigenvalues of G under ~64 ulp of lambda_max
 * carry no signal, so sigma resolution bottoms out near 1e-7 sigma_max).
 * One step of iterative refinement recovers most of the squaring loss. */
inline std::vector<double> truncated_lstsq(const Matrix& a, const std::vector<double>& b,
                                           double trunc_tol) {
    if (a.rows == 0 || a.cols == 0)
        throw std::invalid_argument("truncated_lstsq: empty matrix");
    if (b.size() != a.rows)
        throw std::invalid_argument("truncated_lstsq: rhs length mismatch");
    if (trunc_tol < 0.0)
        throw std::invalid_argument("truncated_lstsq: negative truncation tolerance");

    const std::size_t k = a.cols;
    Matrix g;
    gemm_tn(a, a, g);
    const SymEigResult eig = sym_eig(g);

    const double lam_max = std::max(eig.eigenvalues.front(), 0.0);
    const double lam_floor = 64.0 * DBL_EPSILON * lam_max;
    const double lam_cut = std::max(trunc_tol * trunc_tol * lam_max, lam_floor);

    auto apply_pinv = [&](const std::vector<double>& rhs) {
        // x = Q diag(1/lambda_kept) Q^T rhs
        std::vector<double> proj(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            const double lam = eig.eigenvalues[j];
            if (lam <= lam_cut || lam <= 0.0) continue;
            double dot = 0.0;
            for (std::size_t i = 0; i < k; ++i) dot += eig.eigenvectors(i, j) * rhs[i];
            proj[j] = dot / lam;
        }
        std::vector<double> x(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += eig.eigenvectors(i, j) * proj[j];
            x[i] = s;
        }
        return x;
    };

    auto mat_t_vec = [&](const std::vector<double>& y) {
        std::vector<double> out(k, 0.0);
        for (std::size_t i = 0; i < a.rows; ++i) {
            const double* ai = a.row(i);
            const double yi = y[i];
            if (yi == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) out[j] += ai[j] * yi;
        }
        return out;
    };

    std::vector<double> x = apply_pinv(mat_t_vec(b));

    // one refinement step on the residual
    std::vector<double> r(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += ai[j] * x[j];
        r[i] = b[i] - s;
    }
    const std::vector<double> dx = apply_pinv(mat_t_vec(r));
    for (std::size_t j = 0; j < k; ++j) x[j] += dx[j];
    return x;
}

} // namespace epsrank
