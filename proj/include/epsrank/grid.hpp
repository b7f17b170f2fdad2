#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epsrank/matrix.hpp"
#include "epsrank/rng.hpp"

namespace epsrank {

/* Axis-aligned box domain. */
struct Box {
    std::vector<double> lo, hi;

    Box() = default;
    Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size() || lo.empty())
            throw std::invalid_argument("box: lo/hi dimension mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i]))
                throw std::invalid_argument("box: lo must be strictly below hi");
    }

    static Box cube(double a, double b, std::size_t d) {
        return Box(std::vector<double>(d, a), std::vector<double>(d, b));
    }

    std::size_t dim() const { return lo.size(); }

    double volume() const {
        double v = 1.0;
        for (std::size_t i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
        return v;
    }

    // largest Euclidean norm over the box corners
    double max_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            double m = std::max(std::abs(lo[i]), std::abs(hi[i]));
            s += m * m;
        }
        return std::sqrt(s);
    }
};

enum class GridScheme { trapezoid, gauss, uniform_mesh, monte_carlo };

inline std::string scheme_name(GridScheme s) {
    switch (s) {
        case GridScheme::trapezoid: return "trapezoid";
        case GridScheme::gauss: return "gauss";
        case GridScheme::uniform_mesh: return "uniform-mesh";
        case GridScheme::monte_carlo: return "monte-carlo";
    }
    return "?";
}

inline GridScheme scheme_from_name(const std::string& s) {
    if (s == "trapezoid") return GridScheme::trapezoid;
    if (s == "gauss") return GridScheme::gauss;
    if (s == "uniform-mesh") return GridScheme::uniform_mesh;
    if (s == "monte-carlo") return GridScheme::monte_carlo;
    throw std::domain_error("unknown quadrature scheme: " + s);
}

/* Evaluation grid: points (one per row) with quadrature weights summing to
 * the domain volume. Mesh schemes take a per-dimension count and tensor it;
 * monte-carlo takes a total count and needs a seed. */
struct QuadratureGrid {
    Matrix points;               // m x d
    std::vector<double> weights; // length m
    GridScheme scheme = GridScheme::trapezoid;
    Box domain;

    std::size_t size() const { return points.rows; }
};

namespace detail {

// per-dimension 1-d rules: nodes and weights on [a, b]
inline void rule_trapezoid(double a, double b, std::size_t m,
                           std::vector<double>& x, std::vector<double>& w) {
    const double h = (b - a) / static_cast<double>(m - 1);
    x.resize(m);
    w.assign(m, h);
    for (std::size_t i = 0; i < m; ++i) x[i] = a + h * static_cast<double>(i);
    x[m - 1] = b;
    w[0] = w[m - 1] = h / 2.0;
}

/* Gauss-Legendre nodes by Newton iteration on P_m; standard gauleg scheme,
 * symmetric nodes filled in pairs. */
inline void rule_gauss(double a, double b, std::size_t m,
                       std::vector<double>& x, std::vector<double>& w) {
    x.resize(m);
    w.resize(m);
    const double xm = 0.5 * (b + a);
    const double xl = 0.5 * (b - a);
    const std::size_t half = (m + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(3.141592653589793238462643383279 *
                            (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(m) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(j) + 1.0) * z * p1 -
                      static_cast<double>(j) * p2) /
                     (static_cast<double>(j) + 1.0);
            }
            pp = static_cast<double>(m) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = xm - xl * z;
        x[m - 1 - i] = xm + xl * z;
        w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        w[m - 1 - i] = w[i];
    }
}

inline void rule_uniform_mesh(double a, double b, std::size_t m,
                              std::vector<double>& x, std::vector<double>& w) {
    const double h = (b - a) / static_cast<double>(m);
    x.resize(m);
    w.assign(m, h);
    for (std::size_t i = 0; i < m; ++i) x[i] = a + h * (static_cast<double>(i) + 0.5);
}

} // namespace detail

inline QuadratureGrid build_grid(const Box& domain, GridScheme scheme,
                                 std::size_t m, std::optional<std::uint64_t> seed = {}) {
    const std::size_t d = domain.dim();
    QuadratureGrid g;
    g.scheme = scheme;
    g.domain = domain;

    if (scheme == GridScheme::monte_carlo) {
        if (!seed)
            throw std::invalid_argument("build_grid: monte-carlo requires a seed");
        if (m < 1)
            throw std::invalid_argument("build_grid: need at least one point");
        Rng rng(*seed);
        g.points = Matrix(m, d);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j)
                g.points(i, j) = rng.uniform(domain.lo[j], domain.hi[j]);
        g.weights.assign(m, domain.volume() / static_cast<double>(m));
        return g;
    }

    if (m < 2)
        throw std::invalid_argument("build_grid: mesh schemes need m >= 2 per dimension");

    std::vector<std::vector<double>> xs(d), ws(d);
    for (std::size_t j = 0; j < d; ++j) {
        switch (scheme) {
            case GridScheme::trapezoid:
                detail::rule_trapezoid(domain.lo[j], domain.hi[j], m, xs[j], ws[j]);
                break;
            case GridScheme::gauss:
                detail::rule_gauss(domain.lo[j], domain.hi[j], m, xs[j], ws[j]);
                break;
            case GridScheme::uniform_mesh:
                detail::rule_uniform_mesh(domain.lo[j], domain.hi[j], m, xs[j], ws[j]);
                break;
            default:
                throw std::domain_error("build_grid: unsupported scheme");
        }
    }

    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= m;
    g.points = Matrix(total, d);
    g.weights.assign(total, 1.0);
    // lexicographic tensor order, dimension 0 slowest
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (std::size_t j = d; j-- > 0;) {
            const std::size_t ij = rem % m;
            rem /= m;
            g.points(idx, j) = xs[j][ij];
            g.weights[idx] *= ws[j][ij];
        }
    }
    return g;
}

} // namespace epsrank
