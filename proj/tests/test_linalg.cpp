#include <doctest.h>

#include <cmath>
#include <numeric>

#include "epsrank/linalg.hpp"
#include "epsrank/rng.hpp"

using namespace epsrank;

TEST_SUITE_BEGIN("linalg");

static Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            m(i, j) = m(j, i) = rng.uniform(-1.0, 1.0);
    return m;
}

TEST_CASE("identity eigenvalues are all one") {
    Matrix m(3, 3);
    for (int i = 0; i < 3; ++i) m(i, i) = 1.0;
    const auto eig = sym_eig(m);
    for (double lam : eig.eigenvalues) CHECK(lam == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("analytic gram of {1, x} on [-1,1]") {
    // integrals: <1,1> = 2, <1,x> = 0, <x,x> = 2/3
    Matrix m(2, 2, {2.0, 0.0, 0.0, 2.0 / 3.0});
    const auto eig = sym_eig(m);
    CHECK(eig.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(eig.eigenvalues[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("analytic gram of {sin pi x, cos pi x, sin pi x} on [-1,1]") {
    // <sin,sin> = <cos,cos> = 1, cross terms 0, duplicated sin column
    Matrix m(3, 3, {1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0});
    const auto eig = sym_eig(m);
    CHECK(eig.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(eig.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig.eigenvalues[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("eigen reconstruction and orthonormality on random symmetric matrices") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        for (std::size_t n : {1UL, 2UL, 5UL, 20UL, 60UL}) {
            const Matrix m = random_symmetric(n, seed * 100 + n);
            const auto eig = sym_eig(m);
            const Matrix& q = eig.eigenvectors;
            // Q^T Q = I entrywise to 1e-10
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (std::size_t t = 0; t < n; ++t) dot += q(t, i) * q(t, j);
                    CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
                }
            // || M Q - Q Lambda ||_F small
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double mq = 0.0;
                    for (std::size_t t = 0; t < n; ++t) mq += m(i, t) * q(t, j);
                    const double diff = mq - q(i, j) * eig.eigenvalues[j];
                    err += diff * diff;
                }
            CHECK(std::sqrt(err) <= 1e-10 * std::max(1.0, frobenius_norm(m)));
            // descending order
            for (std::size_t j = 1; j < n; ++j)
                CHECK(eig.eigenvalues[j - 1] >= eig.eigenvalues[j]);
            // trace identity
            double tr = 0.0, sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) tr += m(i, i);
            for (double lam : eig.eigenvalues) sum += lam;
            CHECK(sum == doctest::Approx(tr).epsilon(1e-9));
        }
    }
}

TEST_CASE("asymmetric and non-square inputs are rejected") {
    Matrix bad(2, 3);
    CHECK_THROWS_AS(sym_eig(bad), std::invalid_argument);
    Matrix asym(2, 2, {1.0, 0.5, -0.5, 1.0});
    CHECK_THROWS_AS(sym_eig(asym), std::invalid_argument);
}

TEST_CASE("psd gram matrices stay nonnegative") {
    // A^T A is PSD by construction
    Rng rng(7);
    Matrix a(30, 8);
    for (double& v : a.data) v = rng.normal();
    Matrix g;
    gemm_tn(a, a, g);
    const auto eig = sym_eig(g);
    for (double lam : eig.eigenvalues)
        CHECK(lam >= -1e-10 * frobenius_norm(g));
}

TEST_CASE("least squares identity case") {
    Matrix a(2, 2, {1.0, 0.0, 0.0, 1.0});
    const auto x = truncated_lstsq(a, {3.0, -1.0}, 0.0);
    CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("duplicated column returns the minimum-norm split") {
    Rng rng(11);
    Matrix a(20, 2);
    for (std::size_t i = 0; i < 20; ++i) {
        const double c = rng.normal();
        a(i, 0) = c;
        a(i, 1) = c;
    }
    std::vector<double> b(20);
    for (std::size_t i = 0; i < 20; ++i) b[i] = 2.0 * a(i, 0);
    const auto x = truncated_lstsq(a, b, 1e-12);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("rhs in the column span is reproduced") {
    Rng rng(13);
    Matrix a(20, 5);
    for (double& v : a.data) v = rng.normal();
    std::vector<double> x0(5);
    for (double& v : x0) v = rng.uniform(-2.0, 2.0);
    std::vector<double> b(20, 0.0);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 5; ++j) b[i] += a(i, j) * x0[j];
    const auto x = truncated_lstsq(a, b, 1e-12);
    double res = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * x[j];
        res += (s - b[i]) * (s - b[i]);
        bn += b[i] * b[i];
    }
    CHECK(std::sqrt(res) <= 1e-8 * std::sqrt(bn));
}

TEST_CASE("solution residual never exceeds the zero-solution residual") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        Matrix a(15, 7);
        for (double& v : a.data) v = rng.normal();
        std::vector<double> b(15);
        for (double& v : b) v = rng.normal();
        const auto x = truncated_lstsq(a, b, 1e-10);
        double res = 0.0, bn = 0.0;
        for (std::size_t i = 0; i < 15; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 7; ++j) s += a(i, j) * x[j];
            res += (s - b[i]) * (s - b[i]);
            bn += b[i] * b[i];
        }
        CHECK(res <= bn * (1.0 + 1e-12));
    }
}

TEST_CASE("row permutation of the system leaves the solution unchanged") {
    Rng rng(17);
    Matrix a(12, 4);
    for (double& v : a.data) v = rng.normal();
    std::vector<double> b(12);
    for (double& v : b) v = rng.normal();
    const auto x = truncated_lstsq(a, b, 1e-12);

    // reverse the row order
    Matrix ap(12, 4);
    std::vector<double> bp(12);
    for (std::size_t i = 0; i < 12; ++i) {
        bp[i] = b[11 - i];
        for (std::size_t j = 0; j < 4; ++j) ap(i, j) = a(11 - i, j);
    }
    const auto xp = truncated_lstsq(ap, bp, 1e-12);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::abs(x[j] - xp[j]) < 1e-9);
}

TEST_CASE("shape mismatches are rejected") {
    Matrix a(3, 2);
    CHECK_THROWS_AS(truncated_lstsq(a, {1.0, 2.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(truncated_lstsq(a, {1.0, 2.0, 3.0}, -1.0), std::invalid_argument);
}

TEST_SUITE_END();
