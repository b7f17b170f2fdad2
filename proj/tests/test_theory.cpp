#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "epsrank/grid.hpp"
#include "epsrank/rng.hpp"
#include "epsrank/theory.hpp"

using namespace epsrank;

TEST_SUITE_BEGIN("theory");

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

QuadratureGrid unit_grid(std::size_t m = 201) {
    return build_grid(Box::cube(-1.0, 1.0, 1), GridScheme::trapezoid, m);
}

// columns sin(k pi x), cos(k pi x), k = 1..count/2; exactly orthonormal in
// L2[-1,1] and integrated exactly by the trapezoid rule (periodic products)
Matrix trig_columns(const QuadratureGrid& g, std::size_t count) {
    Matrix e(g.size(), count);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.points(i, 0);
        for (std::size_t j = 0; j < count; ++j) {
            const double k = static_cast<double>(j / 2 + 1);
            e(i, j) = (j % 2 == 0) ? std::sin(k * kPi * x) : std::cos(k * kPi * x);
        }
    }
    return e;
}

// orthonormal columns from a Gaussian draw, modified Gram-Schmidt, two passes
Matrix haar(std::size_t n, std::size_t p, Rng& rng) {
    Matrix q(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = rng.normal();
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q(i, k) * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q(i, k);
            }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / norm;
    }
    return q;
}

std::set<std::size_t> kept_set(const SubsetSelection& sel, std::size_t p) {
    return {sel.permutation.begin(), sel.permutation.begin() + p};
}

} // namespace

TEST_CASE("duplicated function compresses to the exact two-term answer") {
    const QuadratureGrid g = unit_grid();
    const Matrix e = trig_columns(g, 2);
    Matrix f(g.size(), 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
        f(i, 0) = e(i, 0);
        f(i, 1) = e(i, 1);
        f(i, 2) = e(i, 0);
    }
    const CompressionResult res = compress(f, {1.0, 1.0, 1.0}, g, 1e-6);
    CHECK(res.p == 2);
    REQUIRE(res.selected_indices.size() == 2);
    CHECK(res.selected_indices[0] == 0);
    CHECK(res.selected_indices[1] == 1);
    // f = f0 + f1 + f0 collapses to 2 f0 + f1 exactly
    CHECK(res.beta_tilde[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(res.beta_tilde[1] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(res.measured_error <= 1e-10);
    CHECK(res.measured_error <= res.certified_bound);
    CHECK(res.exhaustive_selection);
}

TEST_CASE("full eps-rank keeps every term unchanged") {
    const QuadratureGrid g = unit_grid();
    const Matrix f = trig_columns(g, 2);
    const std::vector<double> beta{0.5, -2.0};
    const CompressionResult res = compress(f, beta, g, 1e-6);
    CHECK(res.p == 2);
    CHECK(res.n == 2);
    REQUIRE(res.selected_indices.size() == 2);
    CHECK(res.selected_indices[0] == 0);
    CHECK(res.selected_indices[1] == 1);
    CHECK(res.beta_tilde == beta);
    CHECK(res.measured_error == 0.0);
    CHECK(res.certified_bound == 0.0);
    CHECK(res.v22_min_sigma == 1.0);
}

TEST_CASE("symmetric two-row selection meets the bound with equality") {
    Matrix q(2, 1);
    q(0, 0) = 1.0 / std::sqrt(2.0);
    q(1, 0) = 1.0 / std::sqrt(2.0);
    const SubsetSelection sel = select_subset(q);
    CHECK(sel.v22_min_sigma == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    // tie between the two rows resolves to the lexicographically smaller one
    REQUIRE(sel.permutation.size() == 2);
    CHECK(sel.permutation[0] == 0);
    CHECK(sel.permutation[1] == 1);
    CHECK(sel.exhaustive);
}

TEST_CASE("axis vector selection keeps the support row") {
    Matrix q(3, 1);
    q(0, 0) = 1.0;
    q(1, 0) = 0.0;
    q(2, 0) = 0.0;
    const SubsetSelection sel = select_subset(q);
    REQUIRE(sel.permutation.size() == 3);
    CHECK(sel.permutation[0] == 0);
    CHECK(sel.v22_min_sigma == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exhaustive selection is invariant under row permutation") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const Matrix q = haar(6, 2, rng);
        Matrix qr(6, 2);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 2; ++j) qr(i, j) = q(5 - i, j);
        const SubsetSelection a = select_subset(q);
        const SubsetSelection b = select_subset(qr);
        CHECK(a.v22_min_sigma == doctest::Approx(b.v22_min_sigma).epsilon(1e-10));
        std::set<std::size_t> mapped;
        for (std::size_t r : kept_set(b, 2)) mapped.insert(5 - r);
        CHECK(mapped == kept_set(a, 2));
    }
}

TEST_CASE("greedy selection tracks the exhaustive optimum within factor two") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const Matrix q = haar(8, 3, rng);
        const SubsetSelection ex = detail::select_exhaustive(q);
        const SubsetSelection gr = detail::select_greedy(q);
        CHECK(ex.exhaustive);
        CHECK_FALSE(gr.exhaustive);
        CHECK(gr.v22_min_sigma <= ex.v22_min_sigma * (1.0 + 1e-10));
        CHECK(gr.v22_min_sigma >= 0.5 * ex.v22_min_sigma);
        // the public entry point stays exhaustive at this size
        CHECK(select_subset(q).exhaustive);
    }
}

TEST_CASE("planted-spectrum instances all satisfy the certificate") {
    const QuadratureGrid g = unit_grid();
    const Matrix e = trig_columns(g, 10);
    const std::size_t n = 10;
    const double eps = 1e-6;
    bool saw_positive_error = false;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t p = 2 + static_cast<std::size_t>(inst % 7); // 2..8
        Rng rng(1000 + static_cast<std::uint64_t>(inst));
        const Matrix u = haar(n, n, rng);
        const Matrix w = haar(n, n, rng);
        // eigenvalues of the Gram: p values near 1, the rest below eps;
        // instance 0 plants a 0.1% gap hugging eps from both sides
        std::vector<double> lam(n);
        for (std::size_t i = 0; i < n; ++i)
            lam[i] = (i < p) ? 0.7 + 0.8 * rng.unit() : eps * (0.01 + 0.29 * rng.unit());
        if (inst == 0) {
            lam[p - 1] = eps * 1.001;
            lam[p] = eps * 0.999;
        }
        Matrix sw(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) sw(i, j) = std::sqrt(lam[i]) * w(j, i);
        Matrix a;
        gemm_nn(u, sw, a);
        Matrix f;
        gemm_nn(e, a, f);

        std::vector<double> beta(n);
        double norm = 0.0;
        for (double& b : beta) {
            b = rng.uniform(-1.0, 1.0);
            norm += b * b;
        }
        for (double& b : beta) b /= std::sqrt(norm);

        const CompressionResult res = compress(f, beta, g, eps);
        CHECK(res.p == p);
        CHECK(res.measured_error >= 0.0);
        CHECK(res.measured_error <= res.certified_bound);
        CHECK(res.exhaustive_selection);
        const double np = static_cast<double>(n - p);
        const double lemma =
            1.0 / std::sqrt(static_cast<double>(p) * np + std::min(static_cast<double>(p), np));
        CHECK(res.v22_min_sigma >= lemma - 1e-8);
        if (res.measured_error > 0.0) saw_positive_error = true;

        if (inst % 10 == 0) {
            // sigma of the kept p x p block equals sigma of the dropped
            // complement block measured inside compress
            const SymEigResult eig = sym_eig(gram_matrix(f, g));
            Matrix q1(n, p);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < p; ++j) q1(i, j) = eig.eigenvectors(i, j);
            const SubsetSelection sel = select_subset(q1);
            CHECK(sel.v22_min_sigma == doctest::Approx(res.v22_min_sigma).epsilon(1e-8));
        }
    }
    CHECK(saw_positive_error);
}

TEST_CASE("compress rejects malformed inputs") {
    const QuadratureGrid g = unit_grid(33);
    const Matrix f = trig_columns(g, 2);
    CHECK_THROWS_AS(compress(f, {1.0}, g, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(compress(f, {1.0, 2.0}, g, -1e-6), std::invalid_argument);
    CHECK_THROWS_AS(compress(f, {1.0, std::nan("")}, g, 1e-6), std::invalid_argument);
    Matrix tiny(g.size(), 1);
    for (std::size_t i = 0; i < g.size(); ++i) tiny(i, 0) = 1e-9 * f(i, 0);
    // every eigenvalue sits below epsilon: eps-rank zero has nothing to keep
    CHECK_THROWS_AS(compress(tiny, {1.0}, g, 1e-6), std::invalid_argument);
}

TEST_CASE("probe matches the closed-form bounds") {
    const LemmaProbe two = probe_lemma(2, 1, 300, 7);
    CHECK(two.paper_bound == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    // a unit vector always has a coordinate of magnitude at least 1/sqrt(2)
    CHECK(two.worst_best_sigma >= two.paper_bound - 1e-10);

    const LemmaProbe four = probe_lemma(4, 2, 300, 11);
    CHECK(four.paper_bound == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(four.worst_best_sigma >= four.paper_bound - 1e-10);
    CHECK(four.conjecture_bound == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("probe sampling finds no violations at scale") {
    const LemmaProbe probe = probe_lemma(6, 3, 3000, 123);
    CHECK(probe.trials == 3000);
    CHECK(probe.worst_best_sigma >= probe.paper_bound - 1e-10);
    CHECK(probe.worst_best_sigma <= 1.0);
}

TEST_CASE("probe rejects out-of-range arguments") {
    CHECK_THROWS_AS(probe_lemma(4, 4, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(probe_lemma(4, 0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(probe_lemma(11, 2, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(probe_lemma(4, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("reports serialize with the documented fields") {
    const QuadratureGrid g = unit_grid(65);
    const Matrix f = trig_columns(g, 4);
    const CompressionResult res = compress(f, {1.0, 1.0, 1.0, 1.0}, g, 1e-6);
    const nlohmann::json cj = res.to_json();
    for (const char* key : {"n", "p", "epsilon", "selected_indices", "beta_tilde",
                            "certified_bound", "lemma_bound", "measured_error",
                            "v22_min_sigma", "exhaustive_selection"})
        CHECK(cj.contains(key));
    CHECK(cj["p"].get<std::size_t>() == res.p);

    const nlohmann::json pj = probe_lemma(4, 2, 50, 3).to_json();
    for (const char* key :
         {"n", "p", "trials", "worst_best_sigma", "paper_bound", "conjecture_bound",
          "conjecture_holds"})
        CHECK(pj.contains(key));
    CHECK(pj["conjecture_holds"].is_boolean());
}

TEST_SUITE_END();
