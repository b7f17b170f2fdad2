#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "epsrank/network.hpp"
#include "epsrank/rng.hpp"

namespace epsrank {

/* Xavier baseline: every weight, bias, and output coefficient drawn i.i.d.
 * U(-1/sqrt(n), 1/sqrt(n)) with n the hidden width. Each layer consumes its
 * own stream derived from the master seed, so first-layer overrides (grid,
 * UDI) leave the deeper layers' draws unchanged. */
inline Network xavier_init(Network net, std::uint64_t seed) {
    const double s = 1.0 / std::sqrt(static_cast<double>(net.n));
    for (std::size_t k = 0; k < net.L; ++k) {
        Rng rng(mix_seed(seed, k));
        for (double& v : net.W[k].data) v = rng.uniform(-s, s);
        for (double& v : net.b[k]) v = rng.uniform(-s, s);
    }
    Rng rng(mix_seed(seed, net.L));
    for (double& v : net.beta) v = rng.uniform(-s, s);
    return net;
}

/* Deterministic 1-d first layer: neuron j computes tanh(n/2 (x - x_j)) with
 * nodes x_j = -1 + 2(j-1)/n, mirroring nodal basis functions. Only the
 * first layer is touched. */
inline Network grid_init_1d(Network net) {
    if (net.d != 1)
        throw std::domain_error("grid_init_1d: requires input dimension 1");
    if (net.act.kind != Act::tanh)
        throw std::domain_error("grid_init_1d: requires tanh activation");
    const double half_n = static_cast<double>(net.n) / 2.0;
    for (std::size_t j = 0; j < net.n; ++j) {
        const double xj = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(net.n);
        net.W[0](j, 0) = half_n;
        net.b[0][j] = -half_n * xj;
    }
    return net;
}

struct UdiConfig {
    double gamma = 1.0; // shape parameter
    double R = 1.0;     // offset range
    std::uint64_t seed = 0;

    UdiConfig(double g, double r, std::uint64_t s) : gamma(g), R(r), seed(s) {
        if (!(gamma > 0.0) || !(R > 0.0))
            throw std::invalid_argument("udi: gamma and R must be > 0");
    }
};

/* Uniform distribution initialization: first-layer neuron j computes
 * tanh(gamma (a_j . x + b_j)) with a_j uniform on the unit sphere (normalized
 * Gaussian) and b_j ~ U(0, R). Only the first layer is touched. */
inline Network udi_init(Network net, const UdiConfig& cfg) {
    if (net.act.kind != Act::tanh)
        throw std::domain_error("udi_init: requires tanh activation");
    Rng rng(mix_seed(cfg.seed, 0x0d1));
    std::vector<double> a(net.d);
    for (std::size_t j = 0; j < net.n; ++j) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (std::size_t t = 0; t < net.d; ++t) {
                a[t] = rng.normal();
                norm += a[t] * a[t];
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-12);
        for (std::size_t t = 0; t < net.d; ++t)
            net.W[0](j, t) = cfg.gamma * a[t] / norm;
        net.b[0][j] = cfg.gamma * rng.uniform(0.0, cfg.R);
    }
    return net;
}

} // namespace epsrank
