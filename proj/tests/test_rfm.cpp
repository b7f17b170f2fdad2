#include <doctest.h>

#include <cmath>
#include <vector>

#include "epsrank/rfm.hpp"
#include "epsrank/task.hpp"

using namespace epsrank;

namespace {

// target wrapper around a fitted/planted model
std::function<double(const double*)> model_as_target(const RandomFeatureModel& m) {
    return [&m](const double* x) {
        Matrix p(1, m.part.domain.dim());
        for (std::size_t t = 0; t < m.part.domain.dim(); ++t) p(0, t) = x[t];
        return model_values(m, p)[0];
    };
}

} // namespace

TEST_SUITE("rfm") {

TEST_CASE("partition cells tile the domain with the top face closed") {
    Partition part;
    part.domain = Box::cube(-1.0, 1.0, 2);
    part.cells_per_dim = 3;
    CHECK(part.cell_count() == 9);

    // interior point of each cell maps back to that cell
    for (std::size_t c = 0; c < 9; ++c) {
        const Box b = part.cell_box(c);
        const double mid[2] = {0.5 * (b.lo[0] + b.hi[0]), 0.5 * (b.lo[1] + b.hi[1])};
        CHECK(part.cell_of(mid) == c);
    }

    // internal boundaries belong to the upper cell, the domain edge to the last
    const double edge[2] = {-1.0 + 2.0 / 3.0, 0.0};
    CHECK(part.axis_cell(edge[0], 0) == 1);
    CHECK(part.axis_cell(1.0, 0) == 2);
    CHECK(part.axis_cell(-1.0, 0) == 0);
}

TEST_CASE("features of different cells are exactly orthogonal") {
    const Box dom = Box::cube(-1.0, 1.0, 2);
    RandomFeatureModel m = build_model(dom, 2, 6, 1.0, 11);
    const QuadratureGrid g = build_grid(dom, GridScheme::trapezoid, 17);
    const Matrix d = feature_matrix(m, g.points);
    const Matrix gram = gram_matrix(d, g);
    for (std::size_t i = 0; i < gram.rows; ++i)
        for (std::size_t j = 0; j < gram.cols; ++j)
            if (i / m.J != j / m.J) CHECK(std::abs(gram(i, j)) <= 1e-12);
}

TEST_CASE("build_model is deterministic and validates inputs") {
    const Box dom = Box::cube(0.0, 1.0, 2);
    RandomFeatureModel a = build_model(dom, 3, 5, 0.7, 42);
    RandomFeatureModel b = build_model(dom, 3, 5, 0.7, 42);
    CHECK(a.A.data == b.A.data);
    CHECK(a.b == b.b);
    CHECK(a.total_features() == 45);
    for (std::size_t f = 0; f < a.A.rows; ++f) {
        double n = 0.0;
        for (std::size_t t = 0; t < 2; ++t) n += a.A(f, t) * a.A(f, t);
        CHECK(n == doctest::Approx(1.0)); // unit-sphere directions
    }
    CHECK_THROWS_AS(build_model(dom, 0, 5, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_model(dom, 2, 0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_model(dom, 2, 5, 0.0, 1), std::invalid_argument);
}

TEST_CASE("fit recovers a target planted in the model span") {
    const Box dom = Box::cube(-1.0, 1.0, 2);
    RandomFeatureModel planted = build_model(dom, 2, 8, 1.0, 7);
    Rng rng(99);
    for (double& c : planted.coef) c = rng.uniform(-1.0, 1.0);

    RandomFeatureModel m = build_model(dom, 2, 8, 1.0, 7); // same features, zero coef
    const QuadratureGrid coll = build_grid(dom, GridScheme::uniform_mesh, 21);
    const double res = fit(m, model_as_target(planted), coll, 1e-12);
    CHECK(res <= 1e-8);

    // values agree on an independent grid even if coefficients differ
    const QuadratureGrid ev = build_grid(dom, GridScheme::trapezoid, 19);
    const std::vector<double> got = model_values(m, ev.points);
    const std::vector<double> want = model_values(planted, ev.points);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-7));

    // a fitted model evaluated against itself reports zero error
    const ModelReport rep = model_rank_and_error(m, model_as_target(m), ev, 1e-12);
    CHECK(rep.l2_error <= 1e-10);
    CHECK(rep.rel_l2_error <= 1e-10);
}

TEST_CASE("zero target yields the zero minimum-norm solution") {
    const Box dom = Box::cube(-1.0, 1.0, 2);
    RandomFeatureModel m = build_model(dom, 1, 10, 1.0, 3);
    const QuadratureGrid coll = build_grid(dom, GridScheme::uniform_mesh, 9);
    const double res = fit(m, [](const double*) { return 0.0; }, coll, 1e-12);
    CHECK(res == 0.0);
    for (double c : m.coef) CHECK(c == 0.0);
}

TEST_CASE("single-feature model rank is zero or one") {
    const Box dom = Box::cube(-1.0, 1.0, 1);
    RandomFeatureModel m = build_model(dom, 1, 1, 1.0, 5);
    const QuadratureGrid g = build_grid(dom, GridScheme::trapezoid, 33);
    const ModelReport rep = model_rank_and_error(m, [](const double*) { return 0.0; }, g, 1e-6);
    CHECK(rep.spectrum.eigenvalues.size() == 1);
    CHECK(rep.spectrum.eps_rank <= 1);
}

TEST_CASE("partitioned features beat one global set on rank and error") {
    // same total feature budget, localized vs global, multiscale target
    const Box dom = Box::cube(-1.0, 1.0, 2);
    const QuadratureGrid coll = build_grid(dom, GridScheme::uniform_mesh, 31);
    const QuadratureGrid ev = build_grid(dom, GridScheme::trapezoid, 33);
    auto target = [](const double* x) { return target_twoscale_2d(x[0], x[1]); };

    int rank_wins = 0, err_wins = 0;
    const int seeds = 3;
    for (int s = 0; s < seeds; ++s) {
        RandomFeatureModel rfm = build_model(dom, 2, 64, 0.5, 100 + s);
        RandomFeatureModel elm = build_model(dom, 1, 256, 0.5, 100 + s);
        fit(rfm, target, coll, 1e-12);
        fit(elm, target, coll, 1e-12);
        const ModelReport rr = model_rank_and_error(rfm, target, ev, 1e-12);
        const ModelReport re = model_rank_and_error(elm, target, ev, 1e-12);
        if (rr.spectrum.eps_rank > re.spectrum.eps_rank) ++rank_wins;
        if (rr.rel_l2_error < re.rel_l2_error) ++err_wins;
    }
    CHECK(rank_wins >= 2);
    CHECK(err_wins >= 2);
}

TEST_CASE("feature_matrix rejects mismatched point dimensions") {
    RandomFeatureModel m = build_model(Box::cube(-1.0, 1.0, 2), 2, 4, 1.0, 1);
    Matrix pts(3, 3);
    CHECK_THROWS_AS(feature_matrix(m, pts), std::invalid_argument);
}

} // TEST_SUITE
