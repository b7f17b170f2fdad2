#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "epsrank/grid.hpp"
#include "epsrank/matrix.hpp"
#include "epsrank/rng.hpp"

namespace epsrank {

enum class TaskKind { fit1d, fit2d, poisson2d, heat2d, allen_cahn };

inline std::string task_name(TaskKind k) {
    switch (k) {
        case TaskKind::fit1d: return "fit1d";
        case TaskKind::fit2d: return "fit2d";
        case TaskKind::poisson2d: return "poisson2d";
        case TaskKind::heat2d: return "heat2d";
        case TaskKind::allen_cahn: return "allen-cahn";
    }
    return "?";
}

inline TaskKind task_from_name(const std::string& s) {
    if (s == "fit1d") return TaskKind::fit1d;
    if (s == "fit2d") return TaskKind::fit2d;
    if (s == "poisson2d") return TaskKind::poisson2d;
    if (s == "heat2d") return TaskKind::heat2d;
    if (s == "allen-cahn") return TaskKind::allen_cahn;
    throw std::domain_error("unknown task: " + s);
}

// fitting targets
inline double target_multiscale_1d(double x) {
    return std::cos(x) + std::cos(2.0 * x) + std::cos(30.0 * x);
}
inline double target_bump_2d(double x, double y) {
    return std::exp(-(x * x + y * y)) * std::sin(5.0 * x + 5.0 * y);
}
inline double target_twoscale_2d(double x, double y) {
    return std::cos(x) * std::cos(y) + std::cos(10.0 * x) * std::cos(10.0 * y);
}

// poisson2d: -Lap u = f on [-pi/2, pi/2]^2, u = 0 on the boundary
inline double poisson_forcing(double x, double y) {
    return 32.0 * std::sin(4.0 * x) * std::sin(4.0 * y);
}
inline double poisson_solution(double x, double y) {
    return std::sin(4.0 * x) * std::sin(4.0 * y);
}

// heat2d: u_t = 0.02 Lap u on [-pi, pi]^2 x [0, 1], u = 0 on the spatial boundary
inline double heat_initial(double x, double y) {
    return std::sin(5.0 * x) * std::sin(5.0 * y);
}
inline double heat_solution(double x, double y, double t) {
    return std::exp(-t) * std::sin(5.0 * x) * std::sin(5.0 * y);
}
inline constexpr double kHeatDiffusivity = 0.02;

// allen-cahn: u_t = 0.0001 u_xx + u - u^3 on [-1, 1] x [0, 1], periodic in x
inline double allen_cahn_initial(double x) { return std::cos(3.14159265358979323846 * x); }
inline constexpr double kAllenCahnDiffusivity = 1e-4;

/* One training problem: a fitting dataset or a PINN sample layout.
 * Fitting uses (X, y); PDE tasks use (interior, initial, boundary).
 * For allen-cahn, `boundary` holds the left trace points (-1, t); the loss
 * pairs each with its mirror (+1, t) to penalize the periodicity gap. */
struct Task {
    TaskKind kind = TaskKind::fit1d;
    Box domain;
    double mu_bc = 1.0, mu_ic = 1.0;

    Matrix X;
    std::vector<double> y;

    Matrix interior, initial, boundary;

    // sampling protocol (PDE tasks): counts, base seed, and whether the
    // training loop redraws the sets every step (stochastic collocation)
    std::size_t n_interior = 0, n_initial = 0, n_boundary = 0;
    std::uint64_t sample_seed = 0;
    bool resample = false;

    bool is_fitting() const { return kind == TaskKind::fit1d || kind == TaskKind::fit2d; }
};

namespace detail {

// uniform grid including endpoints; the fitting sample layout
inline std::vector<double> linspace(double a, double b, std::size_t m) {
    std::vector<double> xs(m);
    if (m == 1) {
        xs[0] = 0.5 * (a + b);
        return xs;
    }
    const double h = (b - a) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) xs[i] = a + h * static_cast<double>(i);
    xs.back() = b;
    return xs;
}

inline Matrix uniform_box_points(const Box& box, std::size_t count, Rng& rng) {
    Matrix pts(count, box.dim());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t t = 0; t < box.dim(); ++t)
            pts(i, t) = rng.uniform(box.lo[t], box.hi[t]);
    return pts;
}

} // namespace detail

/* Redraws the PDE sample sets from the task's counts. Each set consumes its
 * own stream, so one count never shifts another set's draw. */
inline void fill_pinn_samples(Task& t, std::uint64_t seed) {
    if (t.is_fitting())
        throw std::domain_error("fill_pinn_samples: fitting tasks have fixed grids");
    if (t.n_interior < 1)
        throw std::invalid_argument("task: interior sample count must be >= 1");

    Rng ri(mix_seed(seed, 0xA11));
    t.interior = detail::uniform_box_points(t.domain, t.n_interior, ri);

    switch (t.kind) {
        case TaskKind::poisson2d: {
            if (t.n_boundary < 1)
                throw std::invalid_argument("task: boundary sample count must be >= 1");
            Rng rb(mix_seed(seed, 0xB0));
            t.boundary = Matrix(t.n_boundary, 2);
            for (std::size_t i = 0; i < t.n_boundary; ++i) {
                const std::uint64_t side = rb.below(4);
                const double u = rb.uniform(t.domain.lo[side / 2 == 0 ? 1 : 0],
                                            t.domain.hi[side / 2 == 0 ? 1 : 0]);
                if (side == 0) { t.boundary(i, 0) = t.domain.lo[0]; t.boundary(i, 1) = u; }
                if (side == 1) { t.boundary(i, 0) = t.domain.hi[0]; t.boundary(i, 1) = u; }
                if (side == 2) { t.boundary(i, 0) = u; t.boundary(i, 1) = t.domain.lo[1]; }
                if (side == 3) { t.boundary(i, 0) = u; t.boundary(i, 1) = t.domain.hi[1]; }
            }
            t.initial = Matrix(0, 0);
            break;
        }
        case TaskKind::heat2d: {
            if (t.n_initial < 1 || t.n_boundary < 1)
                throw std::invalid_argument("task: initial/boundary sample counts must be >= 1");
            Rng rc(mix_seed(seed, 0xC1));
            t.initial = Matrix(t.n_initial, 3);
            for (std::size_t i = 0; i < t.n_initial; ++i) {
                t.initial(i, 0) = rc.uniform(t.domain.lo[0], t.domain.hi[0]);
                t.initial(i, 1) = rc.uniform(t.domain.lo[1], t.domain.hi[1]);
                t.initial(i, 2) = 0.0;
            }
            Rng rb(mix_seed(seed, 0xB0));
            t.boundary = Matrix(t.n_boundary, 3);
            for (std::size_t i = 0; i < t.n_boundary; ++i) {
                const std::uint64_t side = rb.below(4);
                const double u = rb.uniform(t.domain.lo[side / 2 == 0 ? 1 : 0],
                                            t.domain.hi[side / 2 == 0 ? 1 : 0]);
                if (side == 0) { t.boundary(i, 0) = t.domain.lo[0]; t.boundary(i, 1) = u; }
                if (side == 1) { t.boundary(i, 0) = t.domain.hi[0]; t.boundary(i, 1) = u; }
                if (side == 2) { t.boundary(i, 0) = u; t.boundary(i, 1) = t.domain.lo[1]; }
                if (side == 3) { t.boundary(i, 0) = u; t.boundary(i, 1) = t.domain.hi[1]; }
                t.boundary(i, 2) = rb.uniform(0.0, 1.0);
            }
            break;
        }
        case TaskKind::allen_cahn: {
            if (t.n_initial < 1 || t.n_boundary < 1)
                throw std::invalid_argument("task: initial/boundary sample counts must be >= 1");
            Rng rc(mix_seed(seed, 0xC1));
            t.initial = Matrix(t.n_initial, 2);
            for (std::size_t i = 0; i < t.n_initial; ++i) {
                t.initial(i, 0) = rc.uniform(-1.0, 1.0);
                t.initial(i, 1) = 0.0;
            }
            Rng rb(mix_seed(seed, 0xB0));
            t.boundary = Matrix(t.n_boundary, 2); // left trace (-1, t)
            for (std::size_t i = 0; i < t.n_boundary; ++i) {
                t.boundary(i, 0) = -1.0;
                t.boundary(i, 1) = rb.uniform(0.0, 1.0);
            }
            break;
        }
        default:
            throw std::domain_error("fill_pinn_samples: not a PDE task");
    }
}

/* Fitting task over a uniform grid: fit1d uses `samples` points on [-1,1];
 * fit2d uses the largest g x g grid with g^2 <= samples on [-1,1]^2. */
inline Task make_fit_task(TaskKind kind, std::size_t samples) {
    if (samples < 2) throw std::invalid_argument("task: need at least 2 samples");
    Task t;
    t.kind = kind;
    if (kind == TaskKind::fit1d) {
        t.domain = Box::cube(-1.0, 1.0, 1);
        const std::vector<double> xs = detail::linspace(-1.0, 1.0, samples);
        t.X = Matrix(samples, 1, std::vector<double>(xs));
        t.y.resize(samples);
        for (std::size_t i = 0; i < samples; ++i) t.y[i] = target_multiscale_1d(xs[i]);
    } else if (kind == TaskKind::fit2d) {
        t.domain = Box::cube(-1.0, 1.0, 2);
        const std::size_t g = static_cast<std::size_t>(std::sqrt(static_cast<double>(samples)));
        if (g < 2) throw std::invalid_argument("task: fit2d needs >= 4 samples");
        const std::vector<double> xs = detail::linspace(-1.0, 1.0, g);
        t.X = Matrix(g * g, 2);
        t.y.resize(g * g);
        for (std::size_t i = 0; i < g; ++i)
            for (std::size_t j = 0; j < g; ++j) {
                t.X(i * g + j, 0) = xs[i];
                t.X(i * g + j, 1) = xs[j];
                t.y[i * g + j] = target_bump_2d(xs[i], xs[j]);
            }
    } else {
        throw std::domain_error("make_fit_task: not a fitting task");
    }
    return t;
}

inline Task make_poisson_task(std::size_t n_interior, std::size_t n_boundary, double mu_bc,
                              std::uint64_t seed) {
    Task t;
    t.kind = TaskKind::poisson2d;
    const double h = 3.14159265358979323846 / 2.0;
    t.domain = Box::cube(-h, h, 2);
    t.mu_bc = mu_bc;
    t.n_interior = n_interior;
    t.n_boundary = n_boundary;
    t.sample_seed = seed;
    fill_pinn_samples(t, seed);
    return t;
}

inline Task make_heat_task(std::size_t n_interior, std::size_t n_initial,
                           std::size_t n_boundary, std::uint64_t seed) {
    Task t;
    t.kind = TaskKind::heat2d;
    const double pi = 3.14159265358979323846;
    t.domain = Box({-pi, -pi, 0.0}, {pi, pi, 1.0});
    t.n_interior = n_interior;
    t.n_initial = n_initial;
    t.n_boundary = n_boundary;
    t.sample_seed = seed;
    fill_pinn_samples(t, seed);
    return t;
}

inline Task make_allen_cahn_task(std::size_t n_interior, std::size_t n_initial,
                                 std::size_t n_boundary, std::uint64_t seed) {
    Task t;
    t.kind = TaskKind::allen_cahn;
    t.domain = Box({-1.0, 0.0}, {1.0, 1.0});
    t.n_interior = n_interior;
    t.n_initial = n_initial;
    t.n_boundary = n_boundary;
    t.sample_seed = seed;
    fill_pinn_samples(t, seed);
    return t;
}

} // namespace epsrank
