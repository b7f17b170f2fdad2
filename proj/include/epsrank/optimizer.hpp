#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace epsrank {

enum class OptimizerKind { sgd, adam };

inline std::string optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::sgd ? "sgd" : "adam";
}

inline OptimizerKind optimizer_from_name(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw std::domain_error("unknown optimizer: " + s);
}

/* First-order optimizer over the canonical flat parameter vector. Adam
 * moments are allocated on the first step and stay aligned with it. */
struct Optimizer {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::vector<double> m, v;
    std::size_t t = 0;

    static Optimizer sgd(double lr) {
        Optimizer o;
        o.kind = OptimizerKind::sgd;
        o.lr = lr;
        return o;
    }

    static Optimizer adam(double lr, double b1 = 0.9, double b2 = 0.999, double e = 1e-8) {
        Optimizer o;
        o.kind = OptimizerKind::adam;
        o.lr = lr;
        o.beta1 = b1;
        o.beta2 = b2;
        o.eps = e;
        return o;
    }

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (params.size() != grad.size())
            throw std::invalid_argument("optimizer: parameter/gradient length mismatch");
        if (!(lr > 0.0)) throw std::invalid_argument("optimizer: learning rate must be > 0");

        if (kind == OptimizerKind::sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
            return;
        }

        if (m.empty()) {
            m.assign(params.size(), 0.0);
            v.assign(params.size(), 0.0);
        }
        if (m.size() != params.size())
            throw std::invalid_argument("optimizer: moment arrays misaligned with parameters");

        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double mh = m[i] / c1;
            const double vh = v[i] / c2;
            params[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
};

} // namespace epsrank
