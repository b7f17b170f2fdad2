#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "epsrank/gram.hpp"
#include "epsrank/grid.hpp"
#include "epsrank/linalg.hpp"
#include "epsrank/matrix.hpp"
#include "epsrank/rng.hpp"

namespace epsrank {

/* Uniform M^d tensor partition of a box. Cells are half-open along each
 * axis with the top face closed, so every point of the domain belongs to
 * exactly one cell and the indicator PoU sums to one everywhere. */
struct Partition {
    Box domain;
    std::size_t cells_per_dim = 1;

    std::size_t cell_count() const {
        std::size_t c = 1;
        for (std::size_t t = 0; t < domain.dim(); ++t) c *= cells_per_dim;
        return c;
    }

    // cell index along one axis for coordinate x
    std::size_t axis_cell(double x, std::size_t t) const {
        const double w = (domain.hi[t] - domain.lo[t]) / static_cast<double>(cells_per_dim);
        const double rel = (x - domain.lo[t]) / w;
        auto c = static_cast<long long>(std::floor(rel));
        if (c < 0) c = 0;
        if (c >= static_cast<long long>(cells_per_dim))
            c = static_cast<long long>(cells_per_dim) - 1;
        return static_cast<std::size_t>(c);
    }

    // lexicographic cell index, dimension 0 slowest
    std::size_t cell_of(const double* x) const {
        std::size_t idx = 0;
        for (std::size_t t = 0; t < domain.dim(); ++t)
            idx = idx * cells_per_dim + axis_cell(x[t], t);
        return idx;
    }

    Box cell_box(std::size_t idx) const {
        const std::size_t d = domain.dim();
        std::vector<double> lo(d), hi(d);
        for (std::size_t t = d; t-- > 0;) {
            const std::size_t c = idx % cells_per_dim;
            idx /= cells_per_dim;
            const double w =
                (domain.hi[t] - domain.lo[t]) / static_cast<double>(cells_per_dim);
            lo[t] = domain.lo[t] + w * static_cast<double>(c);
            hi[t] = lo[t] + w;
        }
        return Box(std::move(lo), std::move(hi));
    }
};

/* Random feature model: per-cell tanh features under an indicator PoU,
 * so cells_per_dim = 1 is the extreme learning machine (one global set).
 * Feature j of cell i reads phi(x) = tanh(gamma (a . xloc + b)) with xloc
 * the cell-local coordinate rescaled to [-1,1]^d, a uniform on the unit
 * sphere and b uniform on (-1,1). Only `coef` is fitted. */
struct RandomFeatureModel {
    Partition part;
    std::size_t J = 0; // features per cell
    double gamma = 1.0;

    Matrix A;                  // (cells*J) x d directions
    std::vector<double> b;     // cells*J offsets
    std::vector<double> coef;  // cells*J output coefficients

    std::size_t total_features() const { return part.cell_count() * J; }
};

inline RandomFeatureModel build_model(const Box& domain, std::size_t cells_per_dim,
                                      std::size_t J_per_cell, double gamma,
                                      std::uint64_t seed) {
    if (cells_per_dim < 1) throw std::invalid_argument("rfm: need at least one cell");
    if (J_per_cell < 1)
        throw std::invalid_argument("rfm: feature count per cell must be >= 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("rfm: gamma must be > 0");

    RandomFeatureModel m;
    m.part.domain = domain;
    m.part.cells_per_dim = cells_per_dim;
    m.J = J_per_cell;
    m.gamma = gamma;

    const std::size_t d = domain.dim();
    const std::size_t total = m.total_features();
    m.A = Matrix(total, d);
    m.b.resize(total);
    m.coef.assign(total, 0.0);

    // per-cell streams: one cell's draw is independent of the others
    for (std::size_t c = 0; c < m.part.cell_count(); ++c) {
        Rng rng(mix_seed(seed, c));
        for (std::size_t j = 0; j < J_per_cell; ++j) {
            double* a = m.A.row(c * J_per_cell + j);
            double norm = 0.0;
            while (norm == 0.0) {
                for (std::size_t t = 0; t < d; ++t) {
                    a[t] = rng.normal();
                    norm += a[t] * a[t];
                }
                norm = std::sqrt(norm);
            }
            for (std::size_t t = 0; t < d; ++t) a[t] /= norm;
            m.b[c * J_per_cell + j] = rng.uniform(-1.0, 1.0);
        }
    }
    return m;
}

/* Feature matrix at the given points: column c*J + j holds psi_c . phi_cj.
 * The indicator PoU zeroes all columns of foreign cells, making cross-cell
 * features exactly orthogonal in any L2 pairing over the domain. */
inline Matrix feature_matrix(const RandomFeatureModel& m, const Matrix& points) {
    const std::size_t d = m.part.domain.dim();
    if (points.cols != d) throw std::invalid_argument("rfm: point dimension mismatch");
    const std::size_t N = points.rows;
    Matrix out(N, m.total_features());
    std::vector<double> xloc(d);
    for (std::size_t i = 0; i < N; ++i) {
        const double* x = points.row(i);
        const std::size_t c = m.part.cell_of(x);
        const Box cb = m.part.cell_box(c);
        for (std::size_t t = 0; t < d; ++t)
            xloc[t] = 2.0 * (x[t] - cb.lo[t]) / (cb.hi[t] - cb.lo[t]) - 1.0;
        double* row = out.row(i);
        for (std::size_t j = 0; j < m.J; ++j) {
            const std::size_t f = c * m.J + j;
            const double* a = m.A.row(f);
            double s = m.b[f];
            for (std::size_t t = 0; t < d; ++t) s += a[t] * xloc[t];
            row[f] = std::tanh(m.gamma * s);
        }
    }
    return out;
}

inline std::vector<double> model_values(const RandomFeatureModel& m, const Matrix& points) {
    const Matrix f = feature_matrix(m, points);
    std::vector<double> y(points.rows, 0.0);
    for (std::size_t i = 0; i < f.rows; ++i) {
        const double* r = f.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < f.cols; ++j) s += r[j] * m.coef[j];
        y[i] = s;
    }
    return y;
}

/* Unweighted pointwise least squares for the output coefficients with
 * spectral truncation at trunc_tol. Returns the relative l2 residual at
 * the collocation points (absolute when the target norm vanishes). */
inline double fit(RandomFeatureModel& m, const std::function<double(const double*)>& target,
                  const QuadratureGrid& collocation, double trunc_tol) {
    const std::size_t N = collocation.size();
    if (N == 0) throw std::invalid_argument("rfm: empty collocation grid");
    const Matrix g = feature_matrix(m, collocation.points);
    std::vector<double> y(N);
    for (std::size_t i = 0; i < N; ++i) y[i] = target(collocation.points.row(i));

    m.coef = truncated_lstsq(g, y, trunc_tol);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double* r = g.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols; ++j) s += r[j] * m.coef[j];
        const double e = s - y[i];
        num += e * e;
        den += y[i] * y[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct ModelReport {
    GramSpectrum spectrum;
    double l2_error = 0.0;
    double rel_l2_error = 0.0;
};

/* eps-rank of the model's full (PoU-weighted) feature set on the evaluation
 * grid plus quadrature L2 error of the fitted model against the target. */
inline ModelReport model_rank_and_error(const RandomFeatureModel& m,
                                        const std::function<double(const double*)>& target,
                                        const QuadratureGrid& eval_grid, double epsilon) {
    ModelReport rep;
    const Matrix d = feature_matrix(m, eval_grid.points);
    rep.spectrum = eps_rank(gram_matrix(d, eval_grid), epsilon);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < eval_grid.size(); ++i) {
        const double* r = d.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d.cols; ++j) s += r[j] * m.coef[j];
        const double ex = target(eval_grid.points.row(i));
        const double e = s - ex;
        num += eval_grid.weights[i] * e * e;
        den += eval_grid.weights[i] * ex * ex;
    }
    rep.l2_error = std::sqrt(num);
    rep.rel_l2_error = den > 0.0 ? std::sqrt(num / den) : rep.l2_error;
    return rep;
}

} // namespace epsrank
