#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "epsrank/autodiff.hpp"
#include "epsrank/network.hpp"
#include "epsrank/task.hpp"

namespace epsrank {

/* interior/initial/boundary hold unweighted means over their sample sets;
 * total folds in the mu weights. Unused terms stay zero. */
struct LossTerms {
    double total = 0.0;
    double interior = 0.0;
    double initial = 0.0;
    double boundary = 0.0;
};

namespace detail {

// accumulate dst += src elementwise; adopts src when dst is empty
inline void add_flat(std::vector<double>& dst, std::vector<double>&& src) {
    if (dst.empty()) {
        dst = std::move(src);
        return;
    }
    if (dst.size() != src.size())
        throw std::logic_error("loss: gradient length mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// mean over the batch of u^2 with u already shifted by its target
inline double mean_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s / static_cast<double>(v.size());
}

} // namespace detail

/* Composite loss and (optionally) its exact parameter gradient in canonical
 * flat order. Fitting tasks: mean square error over the dataset. PDE tasks:
 * mean-square interior residual + mu_ic * initial term + mu_bc * boundary
 * term, each term a mean over its own sample set. */
inline LossTerms task_loss_impl(const Network& net, const Task& task,
                                std::vector<double>* grad) {
    LossTerms out;
    if (grad) grad->clear();

    if (task.is_fitting()) {
        if (task.X.rows == 0) throw std::invalid_argument("loss: empty fitting dataset");
        const std::size_t N = task.X.rows;
        BatchTrace tr;
        const DerivSpec spec; // values only
        const BatchDerivs f = forward_batch(net, task.X, spec, grad ? &tr : nullptr);
        std::vector<double> e(N);
        for (std::size_t i = 0; i < N; ++i) e[i] = f.y[i] - task.y[i];
        out.interior = detail::mean_sq(e);
        out.total = out.interior;
        if (grad) {
            std::vector<double> ybar(N);
            for (std::size_t i = 0; i < N; ++i)
                ybar[i] = 2.0 * e[i] / static_cast<double>(N);
            detail::add_flat(*grad, backward_batch(net, tr, ybar, Matrix(N, 0), Matrix(N, 0)));
        }
        return out;
    }

    if (task.interior.rows == 0) throw std::invalid_argument("loss: empty interior sample set");

    switch (task.kind) {
        case TaskKind::poisson2d: {
            if (task.boundary.rows == 0)
                throw std::invalid_argument("loss: empty boundary sample set");
            const std::size_t N = task.interior.rows;
            DerivSpec spec;
            spec.hess = {{0, 0}, {1, 1}};
            BatchTrace tr;
            const BatchDerivs f =
                forward_batch(net, task.interior, spec, grad ? &tr : nullptr);
            std::vector<double> r(N);
            for (std::size_t i = 0; i < N; ++i)
                r[i] = f.hess(i, 0) + f.hess(i, 1) +
                       poisson_forcing(task.interior(i, 0), task.interior(i, 1));
            out.interior = detail::mean_sq(r);
            if (grad) {
                std::vector<double> ybar(N, 0.0);
                Matrix hb(N, 2);
                for (std::size_t i = 0; i < N; ++i) {
                    const double s = 2.0 * r[i] / static_cast<double>(N);
                    hb(i, 0) = s;
                    hb(i, 1) = s;
                }
                detail::add_flat(*grad, backward_batch(net, tr, ybar, Matrix(N, 0), hb));
            }

            const std::size_t Nb = task.boundary.rows;
            BatchTrace trb;
            const BatchDerivs fb =
                forward_batch(net, task.boundary, DerivSpec{}, grad ? &trb : nullptr);
            out.boundary = detail::mean_sq(fb.y);
            if (grad) {
                std::vector<double> ybar(Nb);
                for (std::size_t i = 0; i < Nb; ++i)
                    ybar[i] = task.mu_bc * 2.0 * fb.y[i] / static_cast<double>(Nb);
                detail::add_flat(*grad,
                                 backward_batch(net, trb, ybar, Matrix(Nb, 0), Matrix(Nb, 0)));
            }
            out.total = out.interior + task.mu_bc * out.boundary;
            return out;
        }

        case TaskKind::heat2d: {
            if (task.initial.rows == 0 || task.boundary.rows == 0)
                throw std::invalid_argument("loss: empty initial/boundary sample set");
            const std::size_t N = task.interior.rows;
            DerivSpec spec;
            spec.grads = {2};
            spec.hess = {{0, 0}, {1, 1}};
            BatchTrace tr;
            const BatchDerivs f =
                forward_batch(net, task.interior, spec, grad ? &tr : nullptr);
            std::vector<double> r(N);
            for (std::size_t i = 0; i < N; ++i)
                r[i] = f.grad(i, 0) - kHeatDiffusivity * (f.hess(i, 0) + f.hess(i, 1));
            out.interior = detail::mean_sq(r);
            if (grad) {
                std::vector<double> ybar(N, 0.0);
                Matrix gb(N, 1), hb(N, 2);
                for (std::size_t i = 0; i < N; ++i) {
                    const double s = 2.0 * r[i] / static_cast<double>(N);
                    gb(i, 0) = s;
                    hb(i, 0) = -kHeatDiffusivity * s;
                    hb(i, 1) = -kHeatDiffusivity * s;
                }
                detail::add_flat(*grad, backward_batch(net, tr, ybar, gb, hb));
            }

            const std::size_t N0 = task.initial.rows;
            BatchTrace tr0;
            const BatchDerivs f0 =
                forward_batch(net, task.initial, DerivSpec{}, grad ? &tr0 : nullptr);
            std::vector<double> ic(N0);
            for (std::size_t i = 0; i < N0; ++i)
                ic[i] = f0.y[i] - heat_initial(task.initial(i, 0), task.initial(i, 1));
            out.initial = detail::mean_sq(ic);
            if (grad) {
                std::vector<double> ybar(N0);
                for (std::size_t i = 0; i < N0; ++i)
                    ybar[i] = task.mu_ic * 2.0 * ic[i] / static_cast<double>(N0);
                detail::add_flat(*grad,
                                 backward_batch(net, tr0, ybar, Matrix(N0, 0), Matrix(N0, 0)));
            }

            const std::size_t Nb = task.boundary.rows;
            BatchTrace trb;
            const BatchDerivs fb =
                forward_batch(net, task.boundary, DerivSpec{}, grad ? &trb : nullptr);
            out.boundary = detail::mean_sq(fb.y);
            if (grad) {
                std::vector<double> ybar(Nb);
                for (std::size_t i = 0; i < Nb; ++i)
                    ybar[i] = task.mu_bc * 2.0 * fb.y[i] / static_cast<double>(Nb);
                detail::add_flat(*grad,
                                 backward_batch(net, trb, ybar, Matrix(Nb, 0), Matrix(Nb, 0)));
            }
            out.total = out.interior + task.mu_ic * out.initial + task.mu_bc * out.boundary;
            return out;
        }

        case TaskKind::allen_cahn: {
            if (task.initial.rows == 0 || task.boundary.rows == 0)
                throw std::invalid_argument("loss: empty initial/boundary sample set");
            const std::size_t N = task.interior.rows;
            DerivSpec spec;
            spec.grads = {1};
            spec.hess = {{0, 0}};
            BatchTrace tr;
            const BatchDerivs f =
                forward_batch(net, task.interior, spec, grad ? &tr : nullptr);
            std::vector<double> r(N);
            for (std::size_t i = 0; i < N; ++i) {
                const double u = f.y[i];
                r[i] = f.grad(i, 0) - kAllenCahnDiffusivity * f.hess(i, 0) - u + u * u * u;
            }
            out.interior = detail::mean_sq(r);
            if (grad) {
                std::vector<double> ybar(N);
                Matrix gb(N, 1), hb(N, 1);
                for (std::size_t i = 0; i < N; ++i) {
                    const double s = 2.0 * r[i] / static_cast<double>(N);
                    const double u = f.y[i];
                    ybar[i] = s * (3.0 * u * u - 1.0);
                    gb(i, 0) = s;
                    hb(i, 0) = -kAllenCahnDiffusivity * s;
                }
                detail::add_flat(*grad, backward_batch(net, tr, ybar, gb, hb));
            }

            const std::size_t N0 = task.initial.rows;
            BatchTrace tr0;
            const BatchDerivs f0 =
                forward_batch(net, task.initial, DerivSpec{}, grad ? &tr0 : nullptr);
            std::vector<double> ic(N0);
            for (std::size_t i = 0; i < N0; ++i)
                ic[i] = f0.y[i] - allen_cahn_initial(task.initial(i, 0));
            out.initial = detail::mean_sq(ic);
            if (grad) {
                std::vector<double> ybar(N0);
                for (std::size_t i = 0; i < N0; ++i)
                    ybar[i] = task.mu_ic * 2.0 * ic[i] / static_cast<double>(N0);
                detail::add_flat(*grad,
                                 backward_batch(net, tr0, ybar, Matrix(N0, 0), Matrix(N0, 0)));
            }

            // periodicity gap u(-1, t) - u(+1, t) on a stacked left/right batch
            const std::size_t Nb = task.boundary.rows;
            Matrix both(2 * Nb, 2);
            for (std::size_t i = 0; i < Nb; ++i) {
                both(i, 0) = -1.0;
                both(i, 1) = task.boundary(i, 1);
                both(Nb + i, 0) = 1.0;
                both(Nb + i, 1) = task.boundary(i, 1);
            }
            BatchTrace trb;
            const BatchDerivs fb = forward_batch(net, both, DerivSpec{}, grad ? &trb : nullptr);
            std::vector<double> gap(Nb);
            for (std::size_t i = 0; i < Nb; ++i) gap[i] = fb.y[i] - fb.y[Nb + i];
            out.boundary = detail::mean_sq(gap);
            if (grad) {
                std::vector<double> ybar(2 * Nb);
                for (std::size_t i = 0; i < Nb; ++i) {
                    const double s = task.mu_bc * 2.0 * gap[i] / static_cast<double>(Nb);
                    ybar[i] = s;
                    ybar[Nb + i] = -s;
                }
                detail::add_flat(*grad, backward_batch(net, trb, ybar, Matrix(2 * Nb, 0),
                                                       Matrix(2 * Nb, 0)));
            }
            out.total = out.interior + task.mu_ic * out.initial + task.mu_bc * out.boundary;
            return out;
        }

        default:
            throw std::domain_error("loss: unsupported task kind");
    }
}

inline LossTerms task_loss(const Network& net, const Task& task) {
    return task_loss_impl(net, task, nullptr);
}

inline LossTerms task_loss_grad(const Network& net, const Task& task,
                                std::vector<double>& grad) {
    return task_loss_impl(net, task, &grad);
}

/* Relative L2 error against the task's exact solution, integrated on the
 * given quadrature grid. Defined for tasks with a closed-form solution. */
inline double relative_l2_error(const Network& net, const Task& task,
                                const QuadratureGrid& grid) {
    const BatchDerivs f = forward_batch(net, grid.points, DerivSpec{}, nullptr);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double ex = 0.0;
        switch (task.kind) {
            case TaskKind::fit1d: ex = target_multiscale_1d(grid.points(i, 0)); break;
            case TaskKind::fit2d:
                ex = target_bump_2d(grid.points(i, 0), grid.points(i, 1));
                break;
            case TaskKind::poisson2d:
                ex = poisson_solution(grid.points(i, 0), grid.points(i, 1));
                break;
            case TaskKind::heat2d:
                ex = heat_solution(grid.points(i, 0), grid.points(i, 1), grid.points(i, 2));
                break;
            default:
                throw std::domain_error("relative_l2_error: no closed-form solution");
        }
        const double d = f.y[i] - ex;
        num += grid.weights[i] * d * d;
        den += grid.weights[i] * ex * ex;
    }
    if (den == 0.0) throw std::domain_error("relative_l2_error: zero reference norm");
    return std::sqrt(num / den);
}

} // namespace epsrank
