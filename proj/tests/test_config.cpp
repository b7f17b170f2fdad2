#include <doctest.h>

#include <cmath>
#include <string>

#include "epsrank/config.hpp"

using namespace epsrank;

TEST_SUITE_BEGIN("config");

namespace {

std::size_t error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line;
    }
    return static_cast<std::size_t>(-1);
}

} // namespace

TEST_CASE("every preset echoes to text and parses back unchanged") {
    for (const std::string& name : preset_names()) {
        const ExperimentConfig c = preset_config(name);
        const std::string text = config_to_text(c);
        const ExperimentConfig back = parse_config(text);
        CHECK(back == c);
        // a second round trip is also stable
        CHECK(parse_config(config_to_text(back)) == c);
    }
}

TEST_CASE("preset values mirror the settings table") {
    const ExperimentConfig a = preset_config("ex2.1a");
    CHECK(a.task.kind == "fit1d");
    CHECK(a.task.samples == 250);
    CHECK(a.network.depth == 2);
    CHECK(a.network.width == 50);
    CHECK(a.network.activation == "tanh");
    CHECK(a.rank.m == 129);
    CHECK(a.rank.epsilon == 1e-6);
    CHECK(a.steps == 20000);
    CHECK(a.seeds.size() == 5);

    const ExperimentConfig h = preset_config("ex3.1-failed");
    CHECK(h.task.kind == "heat2d");
    CHECK(h.task.interior == 1000);
    CHECK(h.task.initial == 1000);
    CHECK(h.task.boundary == 50);
    CHECK(h.task.resample);
    CHECK(h.network.depth == 3);
    CHECK(h.network.width == 100);
    CHECK(h.rank.m == 50);
    CHECK(h.seeds.size() == 3);

    const ExperimentConfig t = preset_config("ex3.1-trainable");
    CHECK(t.task.interior == 2500);
    CHECK(t.task.initial == 10000);
    CHECK(t.task.boundary == 50);

    const ExperimentConfig ac = preset_config("ex2.2");
    CHECK(ac.task.kind == "allen-cahn");
    CHECK(ac.rank.epsilon == 1e-8);
    CHECK(ac.rank.m == 100);
    CHECK(ac.task.mu_bc == 1.0);
    CHECK(ac.task.mu_ic == 1.0);

    const ExperimentConfig p = preset_config("ex4.3-udi");
    CHECK(p.task.kind == "poisson2d");
    CHECK(p.task.mu_bc == 20.0);
    CHECK(p.init.kind == "udi");
    CHECK(p.init.gamma == 1.0);
    const ExperimentConfig pw = preset_config("ex4.3-n100-udi");
    CHECK(pw.network.width == 100);
    CHECK(pw.init.gamma == 2.0);

    const ExperimentConfig f2 = preset_config("ex4.2-udi");
    CHECK(f2.task.kind == "fit2d");
    CHECK(f2.init.gamma == 2.0);
    CHECK(f2.init.radius == doctest::Approx(std::sqrt(2.0)));

    const ExperimentConfig act = preset_config("ex2.1b-elu");
    CHECK(act.network.activation == "elu");
    CHECK(act.network.depth == 3);

    CHECK(preset_config("ex2.1c").rank.per_layer);
}

TEST_CASE("unknown preset lists the available names") {
    try {
        preset_config("ex9.9");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("ex9.9") != std::string::npos);
        CHECK(msg.find("ex2.1a") != std::string::npos);
        CHECK(msg.find("ex3.1-failed") != std::string::npos);
    }
}

TEST_CASE("rfm preset carries reduced and full scales") {
    const RfmCompareConfig r = rfm_preset_config("ex3.2", false);
    CHECK(r.cells == 2);
    CHECK(r.features_per_cell == 64);
    CHECK(r.elm_features == 256);
    CHECK(r.epsilon == 1e-12);
    CHECK(r.trunc_tol == 1e-12);
    const RfmCompareConfig full = rfm_preset_config("ex3.2", true);
    CHECK(full.cells == 3);
    CHECK(full.features_per_cell == 100);
    CHECK(full.elm_features == 900);
    CHECK_THROWS_AS(rfm_preset_config("ex2.1a", false), ConfigError);
}

TEST_CASE("parse errors carry their line number") {
    const std::string good = config_to_text(preset_config("ex2.1a"));

    // line 3 is "[experiment]"; inject garbage right after it
    CHECK(error_line("# c\n\n[experiment]\nbogus_key = 1\n") == 4);
    CHECK(error_line("[bogus]\n") == 1);
    CHECK(error_line("[experiment]\nsteps ten\n") == 2);
    CHECK(error_line("[experiment]\nsteps = ten\n") == 2);
    CHECK(error_line("[experiment]\nsteps =\n") == 2);
    CHECK(error_line("steps = 10\n") == 1); // key before any section
    CHECK(error_line("[network]\nactivation = swish\n") == 2);
    CHECK(error_line("[rank]\nper_layer = yes\n") == 2);
    CHECK(error_line("[experiment]\n[task\n") == 2);

    // missing required fields are whole-file errors (line 0)
    CHECK(error_line("[task]\nkind = fit1d\n") == 0);
    CHECK(parse_config(good) == preset_config("ex2.1a"));
}

TEST_CASE("kind-dependent required fields are enforced") {
    std::string txt = "[experiment]\nsteps = 10\nseeds = 0\nout = o\n"
                      "[task]\nkind = fit1d\nsamples = 16\n";
    CHECK_NOTHROW(parse_config(txt));
    CHECK(error_line("[experiment]\nsteps = 10\nseeds = 0\nout = o\n"
                     "[task]\nkind = fit1d\n") == 0); // no samples
    CHECK(error_line("[experiment]\nsteps = 10\nseeds = 0\nout = o\n"
                     "[task]\nkind = heat2d\ninterior = 5\n") == 0); // no boundary/initial
    CHECK(error_line("[experiment]\nsteps = 10\nseeds = 0\nout = o\n"
                     "[task]\nkind = fit1d\nsamples = 16\nresample = true\n") == 0);
    CHECK(error_line("[experiment]\nsteps = 10\nseeds = 0\nout = o\n"
                     "[task]\nkind = fit1d\nsamples = 16\n"
                     "[init]\nkind = udi\n") == 0); // udi without gamma/radius
}

TEST_CASE("value guards reject nonsense") {
    CHECK(error_line("[optimizer]\nlr = 0\n") == 2);
    CHECK(error_line("[optimizer]\nlr = -1\n") == 2);
    CHECK(error_line("[rank]\nm = 1\n") == 2);
    CHECK(error_line("[rank]\nevery = 0\n") == 2);
    CHECK(error_line("[rank]\nepsilon = -1e-6\n") == 2);
    CHECK(error_line("[network]\ndepth = 0\n") == 2);
    CHECK(error_line("[experiment]\nseeds = 0 -3\n") == 2);
    CHECK(error_line("[init]\nkind = random\n") == 2);
    CHECK(error_line("[optimizer]\nkind = lbfgs\n") == 2);
}

TEST_CASE("comments, blank lines, and CR line endings are tolerated") {
    std::string txt = "# top comment\r\n\r\n[experiment]\r\n"
                      "steps = 12 # trailing comment\r\n"
                      "seeds = 3 1 4\r\nout = runs/x\r\n"
                      "[task]\r\nkind = fit1d\r\nsamples = 32\r\n";
    const ExperimentConfig c = parse_config(txt);
    CHECK(c.steps == 12);
    REQUIRE(c.seeds.size() == 3);
    CHECK(c.seeds[0] == 3);
    CHECK(c.seeds[1] == 1);
    CHECK(c.seeds[2] == 4);
    CHECK(c.task.samples == 32);
}

TEST_CASE("emitted numbers use the shortest exact form") {
    const std::string text = config_to_text(preset_config("ex2.1a"));
    CHECK(text.find("epsilon = 1e-06") != std::string::npos);
    CHECK(text.find("lr = 0.001") != std::string::npos);
    CHECK(text.find("seeds = 0 1 2 3 4") != std::string::npos);
}

TEST_CASE("builders realize the configured experiment") {
    const ExperimentConfig a = preset_config("ex2.1a");
    const Task t = make_task_from(a, 0);
    CHECK(t.kind == TaskKind::fit1d);
    CHECK(t.X.rows == 250);
    CHECK(t.domain.lo[0] == -1.0);
    CHECK(t.domain.hi[0] == 1.0);

    const Network net = make_network_from(a, 0);
    CHECK(net.d == 1);
    CHECK(net.L == 2);
    CHECK(net.n == 50);

    const Optimizer opt = make_optimizer_from(a);
    CHECK(opt.kind == OptimizerKind::adam);
    CHECK(opt.lr == 1e-3);

    const QuadratureGrid g = make_rank_grid_from(a, t.domain);
    CHECK(g.size() == 129);
    CHECK(g.points.cols == 1);

    const TrainOptions topt = make_train_options_from(a);
    CHECK(topt.steps == 20000);
    CHECK(topt.rank_every == 100);
    CHECK(topt.epsilon == 1e-6);
    CHECK_FALSE(topt.per_layer_ranks);
}

TEST_CASE("grid and udi presets shape the first layer") {
    const ExperimentConfig g = preset_config("ex4.1-grid");
    const Network gn = make_network_from(g, 7);
    for (std::size_t j = 0; j < gn.n; ++j)
        CHECK(gn.W[0](j, 0) == doctest::Approx(15.0)); // width 30 slope n/2

    const ExperimentConfig u = preset_config("ex4.3-udi");
    const Network un = make_network_from(u, 7);
    for (std::size_t j = 0; j < un.n; ++j) {
        double norm = 0.0;
        for (std::size_t t = 0; t < un.d; ++t) norm += un.W[0](j, t) * un.W[0](j, t);
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12)); // gamma = 1
        CHECK(un.b[0][j] >= 0.0);
        CHECK(un.b[0][j] <= 3.14159265358979323846 / std::sqrt(2.0) + 1e-12);
    }

    const Task heat = make_task_from(preset_config("ex3.1-failed"), 1);
    CHECK(heat.interior.rows == 1000);
    CHECK(heat.initial.rows == 1000);
    CHECK(heat.boundary.rows == 50);
    CHECK(heat.resample);
    const QuadratureGrid hg = make_rank_grid_from(preset_config("ex3.1-failed"), heat.domain);
    CHECK(hg.size() == 50 * 50 * 50);
    CHECK(hg.points.cols == 3);
}

TEST_SUITE_END();
