#include "doctest.h"

#include <cmath>

#include "epsrank/gram.hpp"
#include "epsrank/init.hpp"

using namespace epsrank;

namespace {

std::size_t first_layer_rank(const Network& net, const Box& domain, std::size_t m,
                             double epsilon) {
    const QuadratureGrid grid = build_grid(domain, GridScheme::trapezoid, m);
    const Matrix feats = net.layer_features(grid.points, 0);
    return eps_rank(gram_matrix(feats, grid), epsilon).eps_rank;
}

} // namespace

TEST_SUITE("init") {

TEST_CASE("xavier draws stay inside the +-1/sqrt(n) box") {
    for (std::size_t n : {std::size_t{30}, std::size_t{100}}) {
        const Network net = xavier_init(Network::make(2, 3, n, {Act::tanh, 1.0}), 5);
        const double s = 1.0 / std::sqrt(static_cast<double>(n));
        for (const auto& w : net.W)
            for (double v : w.data) CHECK(std::abs(v) <= s);
        for (const auto& bk : net.b)
            for (double v : bk) CHECK(std::abs(v) <= s);
        for (double v : net.beta) CHECK(std::abs(v) <= s);
    }
}

TEST_CASE("xavier is deterministic per seed and varies across seeds") {
    const Network a = xavier_init(Network::make(1, 2, 8, {Act::tanh, 1.0}), 42);
    const Network b = xavier_init(Network::make(1, 2, 8, {Act::tanh, 1.0}), 42);
    const Network c = xavier_init(Network::make(1, 2, 8, {Act::tanh, 1.0}), 43);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.flatten() != c.flatten());
}

TEST_CASE("per-layer streams: first-layer overrides leave deeper layers alone") {
    const Network base = xavier_init(Network::make(1, 3, 10, {Act::tanh, 1.0}), 7);
    const Network grid = grid_init_1d(xavier_init(Network::make(1, 3, 10, {Act::tanh, 1.0}), 7));
    const Network udi =
        udi_init(xavier_init(Network::make(1, 3, 10, {Act::tanh, 1.0}), 7), {5.0, 1.0, 7});
    for (std::size_t k = 1; k < 3; ++k) {
        CHECK(grid.W[k].data == base.W[k].data);
        CHECK(grid.b[k] == base.b[k]);
        CHECK(udi.W[k].data == base.W[k].data);
        CHECK(udi.b[k] == base.b[k]);
    }
    CHECK(grid.beta == base.beta);
    CHECK(udi.beta == base.beta);
    CHECK(grid.W[0].data != base.W[0].data);
    CHECK(udi.W[0].data != base.W[0].data);
}

TEST_CASE("xavier first-layer rank collapses on [-1,1]") {
    for (std::size_t n : {std::size_t{30}, std::size_t{50}}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Network net = xavier_init(Network::make(1, 2, n, {Act::tanh, 1.0}), seed);
            const std::size_t r = first_layer_rank(net, Box::cube(-1.0, 1.0, 1), 129, 1e-6);
            CHECK(r <= 5);
        }
    }
}

TEST_CASE("grid init writes the nodal first layer exactly") {
    const std::size_t n = 30;
    Network net = grid_init_1d(xavier_init(Network::make(1, 2, n, {Act::tanh, 1.0}), 3));
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = -1.0 + 2.0 * static_cast<double>(j) / n;
        CHECK(net.W[0](j, 0) == n / 2.0);
        CHECK(net.b[0][j] == doctest::Approx(-(n / 2.0) * xj).epsilon(1e-15));
        // neuron j vanishes at its own node
        Matrix pt(1, 1, {xj});
        const Matrix f = net.layer_features(pt, 0);
        CHECK(std::abs(f(0, j)) < 1e-12);
    }
}

TEST_CASE("grid and UDI first-layer rank is near full on [-1,1]") {
    for (std::size_t n : {std::size_t{30}, std::size_t{50}}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Network g =
                grid_init_1d(xavier_init(Network::make(1, 2, n, {Act::tanh, 1.0}), seed));
            CHECK(first_layer_rank(g, Box::cube(-1.0, 1.0, 1), 129, 1e-6) >=
                  static_cast<std::size_t>(0.8 * n));
            const Network u =
                udi_init(xavier_init(Network::make(1, 2, n, {Act::tanh, 1.0}), seed),
                         {n / 2.0, 1.0, seed});
            CHECK(first_layer_rank(u, Box::cube(-1.0, 1.0, 1), 129, 1e-6) >=
                  static_cast<std::size_t>(0.8 * n));
        }
    }
}

TEST_CASE("UDI directions sit on the gamma sphere with offsets in [0, gamma R]") {
    const double gamma = 2.0, R = std::sqrt(2.0);
    const Network net =
        udi_init(xavier_init(Network::make(2, 2, 40, {Act::tanh, 1.0}), 9), {gamma, R, 9});
    for (std::size_t j = 0; j < net.n; ++j) {
        const double norm = std::hypot(net.W[0](j, 0), net.W[0](j, 1));
        CHECK(norm == doctest::Approx(gamma).epsilon(1e-12));
        CHECK(net.b[0][j] >= 0.0);
        CHECK(net.b[0][j] <= gamma * R);
    }
}

TEST_CASE("UDI raises the 2-d first-layer rank over xavier") {
    const Box dom = Box::cube(-1.0, 1.0, 2);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Network x = xavier_init(Network::make(2, 3, 50, {Act::tanh, 1.0}), seed);
        const Network u =
            udi_init(xavier_init(Network::make(2, 3, 50, {Act::tanh, 1.0}), seed),
                     {2.0, std::sqrt(2.0), seed});
        const std::size_t rx = first_layer_rank(x, dom, 65, 1e-6);
        const std::size_t ru = first_layer_rank(u, dom, 65, 1e-6);
        CHECK(ru > rx);
        CHECK(ru >= 25);
    }
}

TEST_CASE("initializer preconditions are enforced") {
    CHECK_THROWS_AS((void)grid_init_1d(Network::make(2, 1, 4, {Act::tanh, 1.0})),
                    std::domain_error);
    CHECK_THROWS_AS((void)grid_init_1d(Network::make(1, 1, 4, {Act::relu, 1.0})),
                    std::domain_error);
    CHECK_THROWS_AS((void)udi_init(Network::make(1, 1, 4, {Act::elu, 1.0}), {1.0, 1.0, 0}),
                    std::domain_error);
    CHECK_THROWS_AS(UdiConfig(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(UdiConfig(1.0, -2.0, 0), std::invalid_argument);
}

TEST_CASE("UDI is deterministic per seed") {
    const Network a = udi_init(Network::make(3, 1, 12, {Act::tanh, 1.0}), {1.5, 2.0, 11});
    const Network b = udi_init(Network::make(3, 1, 12, {Act::tanh, 1.0}), {1.5, 2.0, 11});
    CHECK(a.flatten() == b.flatten());
}

} // TEST_SUITE
