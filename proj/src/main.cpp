#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "epsrank/config.hpp"
#include "epsrank/rfm.hpp"
#include "epsrank/svg.hpp"
#include "epsrank/theory.hpp"
#include "epsrank/train.hpp"

namespace fs = std::filesystem;
using namespace epsrank;

namespace {

// relative output paths land under EPSRANK_OUT_ROOT when it is set
fs::path resolve_out(const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv("EPSRANK_OUT_ROOT"); root && *root)
        return fs::path(root) / path;
    return path;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
    f << s;
    if (!f) throw std::runtime_error("write failed: " + p.string());
}

std::string fmt_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

struct SeedOutcome {
    TrainResult result;
    bool failed = false; // setup failed before training could start
    std::string error;
};

int do_run(ExperimentConfig cfg) {
    const fs::path out = resolve_out(cfg.out);
    fs::create_directories(out);
    write_text(out / "config.txt", config_to_text(cfg));

    std::vector<SeedOutcome> outcomes(cfg.seeds.size());
    auto run_seed = [&](std::size_t i) {
        SeedOutcome& oc = outcomes[i];
        const std::uint64_t seed = cfg.seeds[i];
        try {
            const Task task = make_task_from(cfg, seed);
            Network net = make_network_from(cfg, seed);
            const QuadratureGrid grid = make_rank_grid_from(cfg, task.domain);
            oc.result = train_run(std::move(net), task, make_optimizer_from(cfg),
                                  make_train_options_from(cfg), grid);
            const std::string stem = "seed" + std::to_string(seed);
            std::ofstream csv(out / (stem + ".csv"), std::ios::binary);
            write_trajectory_csv(csv, oc.result);
            std::ofstream jsl(out / (stem + ".jsonl"), std::ios::binary);
            write_trajectory_jsonl(jsl, oc.result);
        } catch (const std::exception& e) {
            oc.failed = true;
            oc.error = e.what();
        }
    };

    // seeds fan out to a worker pool; all artifact files are per-seed
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(cfg.seeds.size(), hw);
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= outcomes.size()) return;
            run_seed(i);
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
    for (std::thread& t : pool) t.join();

    const std::size_t rank_goal =
        static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(cfg.network.width)));
    nlohmann::json summary{{"preset", cfg.preset},
                           {"steps", cfg.steps},
                           {"epsilon", cfg.rank.epsilon},
                           {"width", cfg.network.width},
                           {"seeds", nlohmann::json::array()}};
    bool any_failed = false, any_aborted = false;
    std::vector<TrajectoryData> curves;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const SeedOutcome& oc = outcomes[i];
        nlohmann::json s{{"seed", cfg.seeds[i]}};
        if (oc.failed) {
            any_failed = true;
            s["error"] = oc.error;
            std::cerr << "seed " << cfg.seeds[i] << ": error: " << oc.error << "\n";
        } else {
            const auto& recs = oc.result.records;
            s["aborted"] = oc.result.aborted;
            if (oc.result.aborted) {
                any_aborted = true;
                s["abort_iteration"] = oc.result.abort_iteration;
                s["abort_message"] = oc.result.abort_message;
                std::cerr << "seed " << cfg.seeds[i] << ": aborted at iteration "
                          << oc.result.abort_iteration << ": " << oc.result.abort_message
                          << " (partial artifacts retained)\n";
            }
            if (!recs.empty()) {
                s["initial_loss"] = recs.front().loss;
                s["initial_rank"] = recs.front().eps_rank_last_layer;
                s["final_loss"] = recs.back().loss;
                s["final_rank"] = recs.back().eps_rank_last_layer;
                s["first_iteration_loss_le_1e-2"] = nullptr;
                s["first_iteration_rank_ge_95pct"] = nullptr;
                for (const TrajectoryRecord& r : recs)
                    if (r.loss <= 1e-2) {
                        s["first_iteration_loss_le_1e-2"] = r.iteration;
                        break;
                    }
                for (const TrajectoryRecord& r : recs)
                    if (r.eps_rank_last_layer >= rank_goal) {
                        s["first_iteration_rank_ge_95pct"] = r.iteration;
                        break;
                    }
                TrajectoryData t;
                t.label = "seed" + std::to_string(cfg.seeds[i]);
                for (const TrajectoryRecord& r : recs) {
                    t.iterations.push_back(static_cast<double>(r.iteration));
                    t.losses.push_back(r.loss);
                    t.ranks.push_back(static_cast<double>(r.eps_rank_last_layer));
                }
                curves.push_back(std::move(t));
                if (!oc.result.aborted)
                    std::cout << "seed " << cfg.seeds[i] << ": loss " << fmt_sci(recs.front().loss)
                              << " -> " << fmt_sci(recs.back().loss) << ", eps-rank "
                              << recs.front().eps_rank_last_layer << " -> "
                              << recs.back().eps_rank_last_layer << " over "
                              << recs.back().iteration << " iterations\n";
            }
        }
        summary["seeds"].push_back(std::move(s));
    }
    write_text(out / "summary.json", summary.dump(2) + "\n");
    if (!curves.empty()) write_text(out / "trajectory.svg", render_plot_svg(curves));
    std::cout << "artifacts in " << out.string() << "\n";
    if (any_failed) return 2;
    if (any_aborted) return 3;
    return 0;
}

int do_plot(const std::vector<std::string>& files, const std::string& out_file) {
    std::vector<TrajectoryData> ts;
    ts.reserve(files.size());
    for (const std::string& f : files) ts.push_back(read_trajectory_csv(f));

    std::set<std::string> labels;
    bool dup = false;
    for (const TrajectoryData& t : ts)
        if (!labels.insert(t.label).second) dup = true;
    if (dup) // disambiguate colliding file stems by their parent directory
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const std::string parent = fs::path(files[i]).parent_path().filename().string();
            if (!parent.empty()) ts[i].label = parent + "/" + ts[i].label;
        }

    const fs::path out = resolve_out(out_file);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    write_text(out, render_plot_svg(ts));
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int do_rfm_compare(const RfmCompareConfig& cfg) {
    const Box dom = Box::cube(-1.0, 1.0, 2);
    const auto target = [](const double* x) { return target_twoscale_2d(x[0], x[1]); };
    const QuadratureGrid coll = build_grid(dom, GridScheme::uniform_mesh, cfg.collocation);
    const QuadratureGrid ev = build_grid(dom, GridScheme::trapezoid, cfg.eval_m);

    nlohmann::json report{{"preset", cfg.preset},
                          {"cells_per_dim", cfg.cells},
                          {"features_per_cell", cfg.features_per_cell},
                          {"elm_features", cfg.elm_features},
                          {"gamma", cfg.gamma},
                          {"epsilon", cfg.epsilon},
                          {"trunc_tol", cfg.trunc_tol},
                          {"seeds", nlohmann::json::array()}};
    std::size_t rank_wins = 0, err_wins = 0;
    for (const std::uint64_t seed : cfg.seeds) {
        RandomFeatureModel rfm =
            build_model(dom, cfg.cells, cfg.features_per_cell, cfg.gamma, seed);
        RandomFeatureModel elm = build_model(dom, 1, cfg.elm_features, cfg.gamma, seed);
        fit(rfm, target, coll, cfg.trunc_tol);
        fit(elm, target, coll, cfg.trunc_tol);
        const ModelReport rr = model_rank_and_error(rfm, target, ev, cfg.epsilon);
        const ModelReport er = model_rank_and_error(elm, target, ev, cfg.epsilon);
        const bool rank_win = rr.spectrum.eps_rank > er.spectrum.eps_rank;
        const bool err_win = rr.rel_l2_error < er.rel_l2_error;
        rank_wins += rank_win;
        err_wins += err_win;
        report["seeds"].push_back(
            nlohmann::json{{"seed", seed},
                           {"rfm", {{"eps_rank", rr.spectrum.eps_rank},
                                    {"rel_l2_error", rr.rel_l2_error}}},
                           {"elm", {{"eps_rank", er.spectrum.eps_rank},
                                    {"rel_l2_error", er.rel_l2_error}}},
                           {"rank_win", rank_win},
                           {"error_win", err_win}});
        std::cout << "seed " << seed << ": rfm rank " << rr.spectrum.eps_rank << " err "
                  << fmt_sci(rr.rel_l2_error) << " | elm rank " << er.spectrum.eps_rank
                  << " err " << fmt_sci(er.rel_l2_error) << "\n";
    }
    report["rank_wins"] = rank_wins;
    report["error_wins"] = err_wins;
    report["seed_count"] = cfg.seeds.size();
    std::cout << "partitioned features win on rank " << rank_wins << "/" << cfg.seeds.size()
              << " and on error " << err_wins << "/" << cfg.seeds.size() << "\n";

    const fs::path out = resolve_out(cfg.out);
    fs::create_directories(out);
    write_text(out / "rfm-compare.json", report.dump(2) + "\n");
    std::cout << "report in " << (out / "rfm-compare.json").string() << "\n";
    return 0;
}

void emit_report(const nlohmann::json& j, const std::string& out_file) {
    if (out_file.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    const fs::path out = resolve_out(out_file);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    write_text(out, j.dump(2) + "\n");
    std::cout << "wrote " << out.string() << "\n";
}

// compress a dictionary of random tanh features down to its eps-rank and
// report the certified vs measured L2 error of the re-coefficiented model
int do_theory_compress(std::size_t n, double gamma, std::size_t m, double epsilon,
                       std::uint64_t seed, const std::string& out_file) {
    const Box dom = Box::cube(-1.0, 1.0, 1);
    const RandomFeatureModel model = build_model(dom, 1, n, gamma, seed);
    const QuadratureGrid grid = build_grid(dom, GridScheme::trapezoid, m);
    const Matrix f_evals = feature_matrix(model, grid.points);

    Rng rng(mix_seed(seed, 0xBE7AULL));
    std::vector<double> beta(n);
    for (double& b : beta) b = rng.normal() / std::sqrt(static_cast<double>(n));

    const CompressionResult res = compress(f_evals, beta, grid, epsilon);
    nlohmann::json j = res.to_json();
    j["gamma"] = gamma;
    j["grid_m"] = m;
    j["seed"] = seed;
    emit_report(j, out_file);
    std::cerr << "kept " << res.p << " of " << res.n << " functions; measured error "
              << fmt_sci(res.measured_error) << " <= certified " << fmt_sci(res.certified_bound)
              << "\n";
    return 0;
}

int do_theory_probe(std::size_t n, std::size_t p, std::size_t trials, std::uint64_t seed,
                    const std::string& out_file) {
    const LemmaProbe res = probe_lemma(n, p, trials, seed);
    nlohmann::json j = res.to_json();
    j["seed"] = seed;
    emit_report(j, out_file);
    std::cerr << "worst best-submatrix sigma over " << trials << " trials: "
              << fmt_sci(res.worst_best_sigma) << " (proved floor " << fmt_sci(res.paper_bound)
              << ", conjectured " << fmt_sci(res.conjecture_bound) << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the eps-rank of neuron dictionaries"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "train a network and record loss/eps-rank curves");
    std::string run_preset, run_config, run_out;
    std::uint64_t run_seed = 0;
    std::size_t run_steps = 0;
    auto* opt_preset =
        run->add_option("--preset", run_preset, "named experiment preset (see docs)");
    auto* opt_config = run->add_option("--config", run_config, "experiment config file");
    opt_preset->excludes(opt_config);
    auto* opt_seed = run->add_option("--seed", run_seed, "run only this seed");
    auto* opt_steps = run->add_option("--steps", run_steps, "override the step count")
                          ->check(CLI::PositiveNumber);
    auto* opt_out = run->add_option("--out", run_out, "output directory");

    // plot
    auto* plot = app.add_subcommand("plot", "render trajectory CSVs as a dual-axis SVG");
    std::vector<std::string> plot_files;
    std::string plot_out;
    plot->add_option("files", plot_files, "trajectory CSV files")->required();
    plot->add_option("--out", plot_out, "output SVG path")->required();

    // rfm-compare
    auto* rfmc = app.add_subcommand(
        "rfm-compare", "partitioned random features vs one global set, same budget");
    std::string rfm_preset = "ex3.2", rfm_out;
    std::uint64_t rfm_seed = 0;
    bool rfm_full = false;
    rfmc->add_option("--preset", rfm_preset, "comparison preset (default ex3.2)");
    rfmc->add_flag("--full", rfm_full, "paper-scale feature counts (slower)");
    auto* opt_rfm_seed = rfmc->add_option("--seed", rfm_seed, "run only this seed");
    auto* opt_rfm_out = rfmc->add_option("--out", rfm_out, "output directory");

    // theory
    auto* theory =
        app.add_subcommand("theory", "compression certificates and subset-selection probes");
    theory->require_subcommand(1);
    auto* tc = theory->add_subcommand(
        "compress", "compress a random tanh dictionary and certify the L2 error");
    std::size_t tc_n = 40, tc_m = 201;
    double tc_gamma = 2.0, tc_eps = 1e-6;
    std::uint64_t tc_seed = 0;
    std::string tc_out;
    tc->add_option("--n", tc_n, "dictionary size")->check(CLI::PositiveNumber);
    tc->add_option("--gamma", tc_gamma, "feature scale")->check(CLI::PositiveNumber);
    tc->add_option("--m", tc_m, "quadrature points")->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    tc->add_option("--epsilon", tc_eps, "spectral cutoff")->check(CLI::NonNegativeNumber);
    tc->add_option("--seed", tc_seed, "rng seed");
    tc->add_option("--out", tc_out, "write the JSON report here instead of stdout");

    auto* tp = theory->add_subcommand(
        "probe", "worst-case best p-row submatrix of random orthonormal frames");
    std::size_t tp_n = 4, tp_p = 2, tp_trials = 1000;
    std::uint64_t tp_seed = 0;
    std::string tp_out;
    tp->add_option("--n", tp_n, "frame rows")->check(CLI::Range(std::size_t{2}, std::size_t{10}));
    tp->add_option("--p", tp_p, "frame columns / rows kept")->check(CLI::PositiveNumber);
    tp->add_option("--trials", tp_trials, "random frames to draw")->check(CLI::PositiveNumber);
    tp->add_option("--seed", tp_seed, "rng seed");
    tp->add_option("--out", tp_out, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            if (opt_preset->count() == 0 && opt_config->count() == 0) {
                std::cerr << "error: run needs --preset or --config\n";
                return 2;
            }
            ExperimentConfig cfg = opt_preset->count() ? preset_config(run_preset)
                                                       : parse_config_file(run_config);
            if (opt_seed->count()) cfg.seeds = {run_seed};
            if (opt_steps->count()) cfg.steps = run_steps;
            if (opt_out->count()) cfg.out = run_out;
            return do_run(std::move(cfg));
        }
        if (plot->parsed()) return do_plot(plot_files, plot_out);
        if (rfmc->parsed()) {
            RfmCompareConfig cfg = rfm_preset_config(rfm_preset, rfm_full);
            if (opt_rfm_seed->count()) cfg.seeds = {rfm_seed};
            if (opt_rfm_out->count()) cfg.out = rfm_out;
            return do_rfm_compare(cfg);
        }
        if (tc->parsed()) return do_theory_compress(tc_n, tc_gamma, tc_m, tc_eps, tc_seed, tc_out);
        if (tp->parsed()) return do_theory_probe(tp_n, tp_p, tp_trials, tp_seed, tp_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
