#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace epsrank {

enum class Act { tanh, relu, elu, cosine, sigmoid };

inline std::string act_name(Act a) {
    switch (a) {
        case Act::tanh: return "tanh";
        case Act::relu: return "relu";
        case Act::elu: return "elu";
        case Act::cosine: return "cosine";
        case Act::sigmoid: return "sigmoid";
    }
    return "?";
}

inline Act act_from_name(const std::string& s) {
    if (s == "tanh") return Act::tanh;
    if (s == "relu") return Act::relu;
    if (s == "elu") return Act::elu;
    if (s == "cosine") return Act::cosine;
    if (s == "sigmoid") return Act::sigmoid;
    throw std::domain_error("unknown activation: " + s);
}

/* Scalar activation with derivatives up to third order. Reverse mode
 * through second input derivatives needs sigma'''. relu has no second
 * derivative; callers requesting one get an error. */
struct Activation {
    Act kind = Act::tanh;
    double alpha = 1.0; // elu scale

    bool has_second_derivative() const { return kind != Act::relu; }

    /* Evaluates sigma and requested derivatives in one call; d2/d3 may be
     * null when the caller only propagates values or first derivatives. */
    void eval(double x, double& f, double* d1, double* d2, double* d3) const {
        switch (kind) {
            case Act::tanh: {
                const double t = std::tanh(x);
                const double u = 1.0 - t * t;
                f = t;
                if (d1) *d1 = u;
                if (d2) *d2 = -2.0 * t * u;
                if (d3) *d3 = -2.0 * u * (1.0 - 3.0 * t * t);
                return;
            }
            case Act::sigmoid: {
                const double s = 1.0 / (1.0 + std::exp(-x));
                const double u = s * (1.0 - s);
                f = s;
                if (d1) *d1 = u;
                if (d2) *d2 = u * (1.0 - 2.0 * s);
                if (d3) *d3 = u * (1.0 - 6.0 * s + 6.0 * s * s);
                return;
            }
            case Act::elu: {
                if (x > 0.0) {
                    f = x;
                    if (d1) *d1 = 1.0;
                    if (d2) *d2 = 0.0;
                    if (d3) *d3 = 0.0;
                } else {
                    const double e = alpha * std::exp(x);
                    f = e - alpha;
                    if (d1) *d1 = e;
                    if (d2) *d2 = e;
                    if (d3) *d3 = e;
                }
                return;
            }
            case Act::cosine: {
                const double c = std::cos(x), s = std::sin(x);
                f = c;
                if (d1) *d1 = -s;
                if (d2) *d2 = -c;
                if (d3) *d3 = s;
                return;
            }
            case Act::relu: {
                if (d2 || d3)
                    throw std::domain_error("relu has no second derivative");
                f = x > 0.0 ? x : 0.0;
                if (d1) *d1 = x > 0.0 ? 1.0 : 0.0;
                return;
            }
        }
        throw std::domain_error("unknown activation kind");
    }
};

} // namespace epsrank
