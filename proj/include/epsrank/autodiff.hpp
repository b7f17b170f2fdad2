#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "epsrank/matrix.hpp"
#include "epsrank/network.hpp"

namespace epsrank {

/* Which input derivatives a batch evaluation must produce. grads lists
 * input dimensions s for dy/dx_s; hess lists (s, r) pairs for
 * d2y/dx_s dx_r. */
struct DerivSpec {
    std::vector<std::size_t> grads;
    std::vector<std::pair<std::size_t, std::size_t>> hess;

    bool empty() const { return grads.empty() && hess.empty(); }
};

struct BatchDerivs {
    std::vector<double> y; // N
    Matrix grad;           // N x grads.size()
    Matrix hess;           // N x hess.size()
};

/* Everything the reverse pass needs, cached per layer during the forward
 * pass. m holds M^c = J^c_prev W^T per first-derivative channel; q holds
 * Q^p = H^p_prev W^T per second-derivative channel. J and H themselves are
 * cheap elementwise combinations and are recomputed on the way back. */
struct LayerTrace {
    Matrix y;            // sigma(P)
    Matrix d1, d2, d3;   // sigma'(P), sigma''(P), sigma'''(P) (d2/d3 optional)
    std::vector<Matrix> m;
    std::vector<Matrix> q;
};

struct BatchTrace {
    Matrix x; // input batch
    DerivSpec spec;
    std::vector<std::size_t> jdims;                     // union of grads and hess dims, sorted
    std::vector<std::pair<std::size_t, std::size_t>> hess_ch; // hess pairs as jdims channel indices
    std::vector<LayerTrace> layers;
};

namespace detail {

inline std::size_t channel_of(const std::vector<std::size_t>& dims, std::size_t d) {
    const auto it = std::lower_bound(dims.begin(), dims.end(), d);
    return static_cast<std::size_t>(it - dims.begin());
}

// out[j] += sum_i mat(i, j) * v[i]
inline void add_colsum_weighted(const Matrix& mat, const std::vector<double>& v,
                                double* out) {
    for (std::size_t i = 0; i < mat.rows; ++i) {
        const double* r = mat.row(i);
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t j = 0; j < mat.cols; ++j) out[j] += vi * r[j];
    }
}

} // namespace detail

/* Extended batched forward pass. Propagates per-layer value, first- and
 * second-derivative channels:
 *   P = Y_prev W^T + b,          Y = sigma(P)
 *   M^s = J^s_prev W^T,          J^s = sigma'(P) . M^s
 *   Q^sr = H^sr_prev W^T,        H^sr = sigma''(P) . M^s . M^r + sigma'(P) . Q^sr
 * Layer 0 uses J^s_0 = e_s (so M^s_1 broadcasts column s of W_0) and
 * H^sr_0 = 0. Pass a trace to enable backward_batch afterwards. */
inline BatchDerivs forward_batch(const Network& net, const Matrix& x,
                                 const DerivSpec& spec, BatchTrace* trace) {
    if (x.cols != net.d)
        throw std::invalid_argument("forward_batch: input dimension mismatch");
    for (std::size_t s : spec.grads)
        if (s >= net.d) throw std::domain_error("forward_batch: gradient dim out of range");
    for (auto [s, r] : spec.hess)
        if (s >= net.d || r >= net.d)
            throw std::domain_error("forward_batch: hessian dim out of range");
    if (!spec.hess.empty() && !net.act.has_second_derivative())
        throw std::domain_error("forward_batch: activation lacks second derivatives");

    const std::size_t N = x.rows, n = net.n;

    std::vector<std::size_t> jdims = spec.grads;
    for (auto [s, r] : spec.hess) { jdims.push_back(s); jdims.push_back(r); }
    std::sort(jdims.begin(), jdims.end());
    jdims.erase(std::unique(jdims.begin(), jdims.end()), jdims.end());
    const std::size_t nj = jdims.size(), nh = spec.hess.size();
    const bool want_d2 = nj > 0 && net.act.has_second_derivative();
    const bool want_d3 = nh > 0;

    std::vector<std::pair<std::size_t, std::size_t>> hess_ch(nh);
    for (std::size_t p = 0; p < nh; ++p)
        hess_ch[p] = {detail::channel_of(jdims, spec.hess[p].first),
                      detail::channel_of(jdims, spec.hess[p].second)};

    BatchTrace local;
    BatchTrace& tr = trace ? *trace : local;
    tr.x = x;
    tr.spec = spec;
    tr.jdims = jdims;
    tr.hess_ch = hess_ch;
    tr.layers.assign(net.L, LayerTrace{});

    std::vector<Matrix> J(nj), H(nh);
    const Matrix* prev_y = &x;

    for (std::size_t k = 0; k < net.L; ++k) {
        LayerTrace& lt = tr.layers[k];
        gemm_nt(*prev_y, net.W[k], lt.y); // holds P for now
        lt.d1 = Matrix(N, n);
        if (want_d2) lt.d2 = Matrix(N, n);
        if (want_d3) lt.d3 = Matrix(N, n);
        for (std::size_t i = 0; i < N; ++i) {
            double* py = lt.y.row(i);
            double* p1 = lt.d1.row(i);
            double* p2 = want_d2 ? lt.d2.row(i) : nullptr;
            double* p3 = want_d3 ? lt.d3.row(i) : nullptr;
            for (std::size_t j = 0; j < n; ++j) {
                double f;
                net.act.eval(py[j] + net.b[k][j], f, &p1[j],
                             p2 ? &p2[j] : nullptr, p3 ? &p3[j] : nullptr);
                py[j] = f;
                if (!std::isfinite(f))
                    throw std::runtime_error("forward_batch: non-finite activation at layer " +
                                             std::to_string(k));
            }
        }

        lt.m.resize(nj);
        for (std::size_t c = 0; c < nj; ++c) {
            if (k == 0) {
                lt.m[c] = Matrix(N, n);
                for (std::size_t i = 0; i < N; ++i) {
                    double* r = lt.m[c].row(i);
                    for (std::size_t j = 0; j < n; ++j) r[j] = net.W[0](j, jdims[c]);
                }
            } else {
                gemm_nt(J[c], net.W[k], lt.m[c]);
            }
        }
        lt.q.resize(nh);
        for (std::size_t p = 0; p < nh; ++p) {
            if (k == 0) lt.q[p] = Matrix(0, 0); // identically zero, skipped below
            else gemm_nt(H[p], net.W[k], lt.q[p]);
        }

        // J = d1 . M ; H = d2 . M_s . M_r + d1 . Q
        for (std::size_t c = 0; c < nj; ++c) {
            J[c] = Matrix(N, n);
            const double* m = lt.m[c].data.data();
            const double* d1 = lt.d1.data.data();
            double* out = J[c].data.data();
            for (std::size_t t = 0; t < N * n; ++t) out[t] = d1[t] * m[t];
        }
        for (std::size_t p = 0; p < nh; ++p) {
            H[p] = Matrix(N, n);
            const double* ms = lt.m[hess_ch[p].first].data.data();
            const double* mr = lt.m[hess_ch[p].second].data.data();
            const double* d1 = lt.d1.data.data();
            const double* d2 = lt.d2.data.data();
            double* out = H[p].data.data();
            if (k == 0) {
                for (std::size_t t = 0; t < N * n; ++t) out[t] = d2[t] * ms[t] * mr[t];
            } else {
                const double* q = lt.q[p].data.data();
                for (std::size_t t = 0; t < N * n; ++t)
                    out[t] = d2[t] * ms[t] * mr[t] + d1[t] * q[t];
            }
        }
        prev_y = &lt.y;
    }

    BatchDerivs out;
    out.y.assign(N, 0.0);
    const Matrix& yl = tr.layers.back().y;
    for (std::size_t i = 0; i < N; ++i) {
        const double* r = yl.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += net.beta[j] * r[j];
        out.y[i] = s;
    }
    out.grad = Matrix(N, spec.grads.size());
    for (std::size_t g = 0; g < spec.grads.size(); ++g) {
        const Matrix& jc = J[detail::channel_of(jdims, spec.grads[g])];
        for (std::size_t i = 0; i < N; ++i) {
            const double* r = jc.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += net.beta[j] * r[j];
            out.grad(i, g) = s;
        }
    }
    out.hess = Matrix(N, nh);
    for (std::size_t p = 0; p < nh; ++p) {
        for (std::size_t i = 0; i < N; ++i) {
            const double* r = H[p].row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += net.beta[j] * r[j];
            out.hess(i, p) = s;
        }
    }
    return out;
}

/* Reverse pass over the extended graph. ybar/gradbar/hessbar are the
 * per-sample loss cotangents of y, the requested first derivatives, and the
 * requested second derivatives. Returns the gradient in canonical flat
 * order (W_0, b_0, W_1, b_1, ..., beta). */
inline std::vector<double> backward_batch(const Network& net, const BatchTrace& tr,
                                          const std::vector<double>& ybar,
                                          const Matrix& gradbar, const Matrix& hessbar) {
    const std::size_t N = tr.x.rows, n = net.n;
    const std::size_t nj = tr.jdims.size(), nh = tr.spec.hess.size();
    if (ybar.size() != N || gradbar.rows != N || hessbar.rows != N ||
        gradbar.cols != tr.spec.grads.size() || hessbar.cols != nh)
        throw std::invalid_argument("backward_batch: cotangent shape mismatch");

    std::vector<Matrix> gW(net.L);
    std::vector<std::vector<double>> gb(net.L, std::vector<double>(n, 0.0));
    std::vector<double> gbeta(n, 0.0);

    // seeds at the top layer: Xbar = outer(xbar, beta)
    auto outer_beta = [&](const std::vector<double>& v) {
        Matrix o(N, n);
        for (std::size_t i = 0; i < N; ++i) {
            double* r = o.row(i);
            const double vi = v[i];
            for (std::size_t j = 0; j < n; ++j) r[j] = vi * net.beta[j];
        }
        return o;
    };

    // recompute J/H of a layer from its trace
    auto recompute_J = [&](std::size_t k, std::size_t c) {
        const LayerTrace& lt = tr.layers[k];
        Matrix j(N, n);
        for (std::size_t t = 0; t < N * n; ++t)
            j.data[t] = lt.d1.data[t] * lt.m[c].data[t];
        return j;
    };
    auto recompute_H = [&](std::size_t k, std::size_t p) {
        const LayerTrace& lt = tr.layers[k];
        const auto [cs, cr] = tr.hess_ch[p];
        Matrix h(N, n);
        if (k == 0) {
            for (std::size_t t = 0; t < N * n; ++t)
                h.data[t] = lt.d2.data[t] * lt.m[cs].data[t] * lt.m[cr].data[t];
        } else {
            for (std::size_t t = 0; t < N * n; ++t)
                h.data[t] = lt.d2.data[t] * lt.m[cs].data[t] * lt.m[cr].data[t] +
                            lt.d1.data[t] * lt.q[p].data[t];
        }
        return h;
    };

    Matrix Ybar = outer_beta(ybar);
    std::vector<Matrix> Jbar(nj, Matrix(N, n)), Hbar(nh);
    for (std::size_t g = 0; g < tr.spec.grads.size(); ++g) {
        const std::size_t c = detail::channel_of(tr.jdims, tr.spec.grads[g]);
        std::vector<double> col(N);
        for (std::size_t i = 0; i < N; ++i) col[i] = gradbar(i, g);
        Matrix o = outer_beta(col);
        for (std::size_t t = 0; t < N * n; ++t) Jbar[c].data[t] += o.data[t];
    }
    for (std::size_t p = 0; p < nh; ++p) {
        std::vector<double> col(N);
        for (std::size_t i = 0; i < N; ++i) col[i] = hessbar(i, p);
        Hbar[p] = outer_beta(col);
    }

    // beta gradient reads the top layer's value/derivative features
    {
        const std::size_t k = net.L - 1;
        detail::add_colsum_weighted(tr.layers[k].y, ybar, gbeta.data());
        for (std::size_t g = 0; g < tr.spec.grads.size(); ++g) {
            const std::size_t c = detail::channel_of(tr.jdims, tr.spec.grads[g]);
            const Matrix jc = recompute_J(k, c);
            std::vector<double> col(N);
            for (std::size_t i = 0; i < N; ++i) col[i] = gradbar(i, g);
            detail::add_colsum_weighted(jc, col, gbeta.data());
        }
        for (std::size_t p = 0; p < nh; ++p) {
            const Matrix hp = recompute_H(k, p);
            std::vector<double> col(N);
            for (std::size_t i = 0; i < N; ++i) col[i] = hessbar(i, p);
            detail::add_colsum_weighted(hp, col, gbeta.data());
        }
    }

    for (std::size_t k = net.L; k-- > 0;) {
        const LayerTrace& lt = tr.layers[k];
        const bool has_d2 = lt.d2.rows > 0;
        const bool has_d3 = lt.d3.rows > 0;

        // Pbar = d1.Ybar + sum_c d2.M^c.Jbar^c + sum_p (d3.M^s.M^r + d2.Q^p).Hbar^p
        Matrix Pbar(N, n);
        for (std::size_t t = 0; t < N * n; ++t)
            Pbar.data[t] = lt.d1.data[t] * Ybar.data[t];
        if (has_d2)
            for (std::size_t c = 0; c < nj; ++c)
                for (std::size_t t = 0; t < N * n; ++t)
                    Pbar.data[t] += lt.d2.data[t] * lt.m[c].data[t] * Jbar[c].data[t];
        for (std::size_t p = 0; p < nh; ++p) {
            const auto [cs, cr] = tr.hess_ch[p];
            if (has_d3)
                for (std::size_t t = 0; t < N * n; ++t)
                    Pbar.data[t] += lt.d3.data[t] * lt.m[cs].data[t] * lt.m[cr].data[t] *
                                    Hbar[p].data[t];
            if (k > 0)
                for (std::size_t t = 0; t < N * n; ++t)
                    Pbar.data[t] += lt.d2.data[t] * lt.q[p].data[t] * Hbar[p].data[t];
        }

        // Mbar^c = d1.Jbar^c + pair terms; Qbar^p = d1.Hbar^p
        std::vector<Matrix> Mbar(nj, Matrix(N, n));
        for (std::size_t c = 0; c < nj; ++c)
            for (std::size_t t = 0; t < N * n; ++t)
                Mbar[c].data[t] = lt.d1.data[t] * Jbar[c].data[t];
        for (std::size_t p = 0; p < nh; ++p) {
            const auto [cs, cr] = tr.hess_ch[p];
            for (std::size_t t = 0; t < N * n; ++t) {
                const double d2h = lt.d2.data[t] * Hbar[p].data[t];
                Mbar[cs].data[t] += d2h * lt.m[cr].data[t];
                Mbar[cr].data[t] += d2h * lt.m[cs].data[t];
            }
        }

        // parameter gradients of this layer
        const Matrix& A = (k == 0) ? tr.x : tr.layers[k - 1].y;
        gemm_tn(Pbar, A, gW[k]);
        for (std::size_t i = 0; i < N; ++i) {
            const double* r = Pbar.row(i);
            for (std::size_t j = 0; j < n; ++j) gb[k][j] += r[j];
        }
        if (k == 0) {
            for (std::size_t c = 0; c < nj; ++c) {
                const std::size_t dim = tr.jdims[c];
                for (std::size_t i = 0; i < N; ++i) {
                    const double* r = Mbar[c].row(i);
                    for (std::size_t j = 0; j < n; ++j) gW[0](j, dim) += r[j];
                }
            }
            // H^p_0 = 0: no Q contribution at the bottom layer
        } else {
            Matrix tmp;
            for (std::size_t c = 0; c < nj; ++c) {
                const Matrix jprev = recompute_J(k - 1, c);
                gemm_tn(Mbar[c], jprev, tmp);
                for (std::size_t t = 0; t < n * tmp.cols; ++t) gW[k].data[t] += tmp.data[t];
            }
            for (std::size_t p = 0; p < nh; ++p) {
                Matrix Qbar(N, n);
                for (std::size_t t = 0; t < N * n; ++t)
                    Qbar.data[t] = lt.d1.data[t] * Hbar[p].data[t];
                const Matrix hprev = recompute_H(k - 1, p);
                gemm_tn(Qbar, hprev, tmp);
                for (std::size_t t = 0; t < n * tmp.cols; ++t) gW[k].data[t] += tmp.data[t];
            }
        }

        // cotangents for the layer below
        if (k > 0) {
            gemm_nn(Pbar, net.W[k], Ybar);
            Matrix next;
            for (std::size_t c = 0; c < nj; ++c) {
                gemm_nn(Mbar[c], net.W[k], next);
                Jbar[c] = std::move(next);
            }
            for (std::size_t p = 0; p < nh; ++p) {
                Matrix Qbar(N, n);
                for (std::size_t t = 0; t < N * n; ++t)
                    Qbar.data[t] = lt.d1.data[t] * Hbar[p].data[t];
                gemm_nn(Qbar, net.W[k], next);
                Hbar[p] = std::move(next);
            }
        }
    }

    std::vector<double> flat;
    flat.reserve(net.param_count());
    for (std::size_t k = 0; k < net.L; ++k) {
        flat.insert(flat.end(), gW[k].data.begin(), gW[k].data.end());
        flat.insert(flat.end(), gb[k].begin(), gb[k].end());
    }
    flat.insert(flat.end(), gbeta.begin(), gbeta.end());
    return flat;
}

struct PointDerivs {
    double y = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;
};

/* Exact derivatives of the network output at one point: full input
 * gradient plus the requested second-derivative pairs. */
inline PointDerivs input_derivatives(const Network& net, const std::vector<double>& x,
                                     const std::vector<std::pair<std::size_t, std::size_t>>&
                                         hess_pairs = {}) {
    DerivSpec spec;
    spec.grads.resize(net.d);
    for (std::size_t s = 0; s < net.d; ++s) spec.grads[s] = s;
    spec.hess = hess_pairs;
    Matrix xm(1, net.d, std::vector<double>(x));
    const BatchDerivs out = forward_batch(net, xm, spec, nullptr);
    PointDerivs pd;
    pd.y = out.y[0];
    pd.grad.assign(out.grad.data.begin(), out.grad.data.end());
    pd.hess.assign(out.hess.data.begin(), out.hess.data.end());
    return pd;
}

} // namespace epsrank
