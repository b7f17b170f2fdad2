#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epsrank/activation.hpp"
#include "epsrank/matrix.hpp"

namespace epsrank {

inline constexpr const char* kCheckpointMagic = "epsrank-net-v1";

struct EvalRecord {
    std::vector<std::vector<double>> layer_outputs; // y_0 = x, ..., y_L
    double y = 0.0;
};

/* Fully connected net with uniform hidden width:
 *   y_0 = x;  y_{k+1} = sigma(W_k y_k + b_k);  y = beta . y_L.
 * W[0] is n x d, every later W[k] is n x n. Hidden layers are indexed
 * 0..L-1 throughout the API. */
struct Network {
    std::size_t d = 1, L = 1, n = 1;
    Activation act;
    std::vector<Matrix> W;
    std::vector<std::vector<double>> b;
    std::vector<double> beta;

    static Network make(std::size_t d, std::size_t L, std::size_t n, Activation act) {
        if (d < 1 || L < 1 || n < 1)
            throw std::invalid_argument("network: dimensions must be >= 1");
        Network net;
        net.d = d; net.L = L; net.n = n; net.act = act;
        net.W.reserve(L);
        for (std::size_t k = 0; k < L; ++k)
            net.W.emplace_back(n, k == 0 ? d : n);
        net.b.assign(L, std::vector<double>(n, 0.0));
        net.beta.assign(n, 0.0);
        return net;
    }

    std::size_t depth() const { return L; }

    std::size_t param_count() const {
        std::size_t c = n * d + n + (L - 1) * (n * n + n);
        return c + n;
    }

    // canonical flat order: W_0 row-major, b_0, W_1, b_1, ..., beta
    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(param_count());
        for (std::size_t k = 0; k < L; ++k) {
            out.insert(out.end(), W[k].data.begin(), W[k].data.end());
            out.insert(out.end(), b[k].begin(), b[k].end());
        }
        out.insert(out.end(), beta.begin(), beta.end());
        return out;
    }

    void unflatten(const std::vector<double>& p) {
        if (p.size() != param_count())
            throw std::invalid_argument("network: flat parameter length mismatch");
        std::size_t at = 0;
        for (std::size_t k = 0; k < L; ++k) {
            std::copy(p.begin() + at, p.begin() + at + W[k].data.size(), W[k].data.begin());
            at += W[k].data.size();
            std::copy(p.begin() + at, p.begin() + at + n, b[k].begin());
            at += n;
        }
        std::copy(p.begin() + at, p.end(), beta.begin());
    }

    EvalRecord forward(const std::vector<double>& x) const {
        if (x.size() != d)
            throw std::invalid_argument("forward: input dimension mismatch");
        EvalRecord rec;
        rec.layer_outputs.reserve(L + 1);
        rec.layer_outputs.push_back(x);
        std::vector<double> cur = x;
        for (std::size_t k = 0; k < L; ++k) {
            std::vector<double> next(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double* wj = W[k].row(j);
                double s = b[k][j];
                for (std::size_t t = 0; t < cur.size(); ++t) s += wj[t] * cur[t];
                double f;
                act.eval(s, f, nullptr, nullptr, nullptr);
                next[j] = f;
            }
            rec.layer_outputs.push_back(next);
            cur = std::move(next);
        }
        double y = 0.0;
        for (std::size_t j = 0; j < n; ++j) y += beta[j] * cur[j];
        rec.y = y;
        return rec;
    }

    /* Hidden features of layer k on a batch of points: row i holds the n
     * neuron outputs of layer k at points(i, :). */
    Matrix layer_features(const Matrix& points, std::size_t k) const {
        if (k >= L)
            throw std::domain_error("layer_features: layer index out of range");
        if (points.cols != d)
            throw std::invalid_argument("layer_features: point dimension mismatch");
        Matrix cur = points;
        for (std::size_t layer = 0; layer <= k; ++layer) {
            Matrix pre;
            gemm_nt(cur, W[layer], pre);
            for (std::size_t i = 0; i < pre.rows; ++i) {
                double* r = pre.row(i);
                for (std::size_t j = 0; j < n; ++j) {
                    double f;
                    act.eval(r[j] + b[layer][j], f, nullptr, nullptr, nullptr);
                    r[j] = f;
                }
            }
            cur = std::move(pre);
        }
        return cur;
    }

    std::vector<double> forward_values(const Matrix& points) const {
        const Matrix feats = layer_features(points, L - 1);
        std::vector<double> y(points.rows, 0.0);
        for (std::size_t i = 0; i < feats.rows; ++i) {
            const double* r = feats.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += beta[j] * r[j];
            y[i] = s;
        }
        return y;
    }

    /* Checkpoint: magic line, activation line, dims line, then the canonical
     * flat parameter array as hex floats (exact round-trip). */
    void save(std::ostream& os) const {
        os << kCheckpointMagic << "\n";
        os << act_name(act.kind) << " ";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%a", act.alpha);
        os << buf << "\n" << d << " " << L << " " << n << "\n";
        for (double v : flatten()) {
            std::snprintf(buf, sizeof buf, "%a", v);
            os << buf << "\n";
        }
    }

    static Network load(std::istream& is) {
        std::string magic;
        if (!std::getline(is, magic) || magic != kCheckpointMagic)
            throw std::runtime_error("checkpoint: bad or missing magic string");
        std::string act_tag, alpha_str;
        std::size_t d, L, n;
        if (!(is >> act_tag >> alpha_str >> d >> L >> n))
            throw std::runtime_error("checkpoint: truncated header");
        Activation a{act_from_name(act_tag), std::strtod(alpha_str.c_str(), nullptr)};
        Network net = make(d, L, n, a);
        std::vector<double> p(net.param_count());
        std::string tok;
        for (double& v : p) {
            if (!(is >> tok))
                throw std::runtime_error("checkpoint: truncated parameter block");
            v = std::strtod(tok.c_str(), nullptr);
        }
        net.unflatten(p);
        return net;
    }
};

} // namespace epsrank
