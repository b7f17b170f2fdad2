#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef EPSRANK_HAVE_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace epsrank {

#ifdef EPSRANK_HAVE_CBLAS
/* Single-threaded BLAS keeps reductions in a fixed order, so repeated runs
 * of one binary stay bit-identical. */
inline bool ensure_single_thread_blas() {
    openblas_set_num_threads(1);
    return true;
}
inline const bool kBlasSingleThread = ensure_single_thread_blas();
#endif

/* Dense row-major matrix of doubles. Constructors reject non-finite data;
 * everything downstream may assume finite entries. */
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;

    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    Matrix(std::size_t r, std::size_t c, std::vector<double> d)
        : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols)
            throw std::invalid_argument("matrix: data length " + std::to_string(data.size()) +
                                        " != " + std::to_string(rows) + "x" + std::to_string(cols));
        for (double v : data)
            if (!std::isfinite(v))
                throw std::domain_error("matrix: non-finite entry");
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double* row(std::size_t i) { return data.data() + i * cols; }
};

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) s += v * v;
    return std::sqrt(s);
}

/* C = A * B^T.  A is (m x k), B is (n x k), C is (m x n).
 * Row-times-row dot products; this is the layout-friendly kernel for
 * forward passes where weights are stored (out x in). */
inline void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.cols) throw std::invalid_argument("gemm_nt: inner dimensions differ");
    c.rows = a.rows; c.cols = b.rows;
    c.data.assign(c.rows * c.cols, 0.0);
#ifdef EPSRANK_HAVE_CBLAS
    if (a.rows && b.rows && a.cols) {
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                    static_cast<int>(a.rows), static_cast<int>(b.rows),
                    static_cast<int>(a.cols), 1.0, a.data.data(),
                    static_cast<int>(a.cols), b.data.data(), static_cast<int>(b.cols),
                    0.0, c.data.data(), static_cast<int>(c.cols));
    }
    return;
#endif
    const std::size_t k = a.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t t = 0;
            for (; t + 4 <= k; t += 4) {
                s0 += ai[t] * bj[t];
                s1 += ai[t + 1] * bj[t + 1];
                s2 += ai[t + 2] * bj[t + 2];
                s3 += ai[t + 3] * bj[t + 3];
            }
            for (; t < k; ++t) s0 += ai[t] * bj[t];
            ci[j] = ((s0 + s1) + (s2 + s3));
        }
    }
}

/* C = A * B.  A is (m x k), B is (k x n).  i-k-j order, unit-stride inner. */
inline void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.rows) throw std::invalid_argument("gemm_nn: inner dimensions differ");
    c.rows = a.rows; c.cols = b.cols;
    c.data.assign(c.rows * c.cols, 0.0);
#ifdef EPSRANK_HAVE_CBLAS
    if (a.rows && b.cols && a.cols) {
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans,
                    static_cast<int>(a.rows), static_cast<int>(b.cols),
                    static_cast<int>(a.cols), 1.0, a.data.data(),
                    static_cast<int>(a.cols), b.data.data(), static_cast<int>(b.cols),
                    0.0, c.data.data(), static_cast<int>(c.cols));
    }
    return;
#endif
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t t = 0; t < a.cols; ++t) {
            const double av = ai[t];
            const double* bt = b.row(t);
            for (std::size_t j = 0; j < b.cols; ++j)
                ci[j] += av * bt[j];
        }
    }
}

/* C = A^T * B.  A is (k x m), B is (k x n), C is (m x n).
 * Accumulates rank-1 updates row by row; used for weight gradients. */
inline void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows != b.rows) throw std::invalid_argument("gemm_tn: inner dimensions differ");
    c.rows = a.cols; c.cols = b.cols;
    c.data.assign(c.rows * c.cols, 0.0);
#ifdef EPSRANK_HAVE_CBLAS
    if (a.cols && b.cols && a.rows) {
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                    static_cast<int>(a.cols), static_cast<int>(b.cols),
                    static_cast<int>(a.rows), 1.0, a.data.data(),
                    static_cast<int>(a.cols), b.data.data(), static_cast<int>(b.cols),
                    0.0, c.data.data(), static_cast<int>(c.cols));
    }
    return;
#endif
    for (std::size_t t = 0; t < a.rows; ++t) {
        const double* at = a.row(t);
        const double* bt = b.row(t);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = at[i];
            if (av == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j)
                ci[j] += av * bt[j];
        }
    }
}

} // namespace epsrank
