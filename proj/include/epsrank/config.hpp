#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epsrank/grid.hpp"
#include "epsrank/init.hpp"
#include "epsrank/network.hpp"
#include "epsrank/optimizer.hpp"
#include "epsrank/task.hpp"
#include "epsrank/train.hpp"

namespace epsrank {

/* Parse or validation failure with the 1-based line it was found on;
 * line 0 means the problem concerns the file as a whole. */
struct ConfigError : std::runtime_error {
    std::size_t line;
    ConfigError(std::size_t ln, const std::string& msg)
        : std::runtime_error(ln ? "config line " + std::to_string(ln) + ": " + msg
                                : "config: " + msg),
          line(ln) {}
};

struct TaskConfig {
    std::string kind = "fit1d";
    std::size_t samples = 0; // fitting tasks
    std::size_t interior = 0, initial = 0, boundary = 0; // pde tasks
    double mu_bc = 1.0;
    double mu_ic = 1.0;
    bool resample = false;
    bool operator==(const TaskConfig&) const = default;
};

struct NetworkConfig {
    std::size_t depth = 2;
    std::size_t width = 50;
    std::string activation = "tanh";
    bool operator==(const NetworkConfig&) const = default;
};

struct InitConfig {
    std::string kind = "xavier"; // xavier | grid | udi
    double gamma = 1.0;          // udi shape
    double radius = 1.0;         // udi offset range
    bool operator==(const InitConfig&) const = default;
};

struct OptimizerConfig {
    std::string kind = "adam"; // adam | sgd
    double lr = 1e-3;
    bool operator==(const OptimizerConfig&) const = default;
};

struct RankConfig {
    std::string scheme = "trapezoid";
    std::size_t m = 129; // rank-grid points per dimension
    double epsilon = 1e-6;
    std::size_t every = 100; // record cadence in steps
    bool per_layer = false;
    bool operator==(const RankConfig&) const = default;
};

/* One fully resolved experiment: what to train, how to initialize and
 * optimize it, how often to measure rank, and where artifacts go. The
 * text round trip (config_to_text -> parse_config) is lossless. */
struct ExperimentConfig {
    std::string preset; // name this config was resolved from, if any
    std::size_t steps = 1000;
    std::vector<std::uint64_t> seeds{0};
    std::string out = "runs/out";
    TaskConfig task;
    NetworkConfig network;
    InitConfig init;
    OptimizerConfig optimizer;
    RankConfig rank;
    bool operator==(const ExperimentConfig&) const = default;
};

/* Reduced-scale random-feature comparison (one global feature set against
 * the same total split over subdomain cells). `full` presets restore the
 * 3x3-cell, 900-feature configuration. */
struct RfmCompareConfig {
    std::string preset = "ex3.2";
    std::size_t cells = 2;             // cells per dimension
    std::size_t features_per_cell = 64;
    std::size_t elm_features = 256;    // equals cells^2 * features_per_cell
    double gamma = 0.5;
    double epsilon = 1e-12;
    double trunc_tol = 1e-12;
    std::size_t collocation = 63; // uniform mesh per dimension for the fit
    std::size_t eval_m = 65;      // trapezoid grid per dimension for rank/error
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string out = "runs/ex3.2";
    bool operator==(const RfmCompareConfig&) const = default;
};

namespace detail {

// shortest decimal form that parses back to exactly the same double
inline std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline bool task_is_fitting(const std::string& kind) {
    return kind == "fit1d" || kind == "fit2d";
}

inline bool task_has_initial(const std::string& kind) {
    return kind == "heat2d" || kind == "allen-cahn";
}

} // namespace detail

inline std::string config_to_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "# resolved experiment configuration\n\n[experiment]\n";
    if (!c.preset.empty()) o << "preset = " << c.preset << "\n";
    o << "steps = " << c.steps << "\nseeds =";
    for (std::uint64_t s : c.seeds) o << " " << s;
    o << "\nout = " << c.out << "\n\n[task]\nkind = " << c.task.kind << "\n";
    if (detail::task_is_fitting(c.task.kind)) {
        o << "samples = " << c.task.samples << "\n";
    } else {
        o << "interior = " << c.task.interior << "\n";
        if (detail::task_has_initial(c.task.kind))
            o << "initial = " << c.task.initial << "\n";
        o << "boundary = " << c.task.boundary << "\n";
        o << "mu_bc = " << detail::format_double(c.task.mu_bc) << "\n";
        if (detail::task_has_initial(c.task.kind))
            o << "mu_ic = " << detail::format_double(c.task.mu_ic) << "\n";
        o << "resample = " << (c.task.resample ? "true" : "false") << "\n";
    }
    o << "\n[network]\ndepth = " << c.network.depth << "\nwidth = " << c.network.width
      << "\nactivation = " << c.network.activation << "\n\n[init]\nkind = " << c.init.kind
      << "\n";
    if (c.init.kind == "udi")
        o << "gamma = " << detail::format_double(c.init.gamma)
          << "\nradius = " << detail::format_double(c.init.radius) << "\n";
    o << "\n[optimizer]\nkind = " << c.optimizer.kind
      << "\nlr = " << detail::format_double(c.optimizer.lr) << "\n\n[rank]\nscheme = "
      << c.rank.scheme << "\nm = " << c.rank.m
      << "\nepsilon = " << detail::format_double(c.rank.epsilon) << "\nevery = " << c.rank.every
      << "\nper_layer = " << (c.rank.per_layer ? "true" : "false") << "\n";
    return o.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::size_t parse_count(const std::string& v, std::size_t line, const std::string& key) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || v[0] == '-')
        throw ConfigError(line, "value for '" + key + "' is not a non-negative integer: " + v);
    return static_cast<std::size_t>(x);
}

inline double parse_real(const std::string& v, std::size_t line, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
        throw ConfigError(line, "value for '" + key + "' is not a finite number: " + v);
    return x;
}

inline bool parse_flag(const std::string& v, std::size_t line, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(line, "value for '" + key + "' must be true or false: " + v);
}

} // namespace detail

/* Parse the flat key = value format emitted by config_to_text. Unknown
 * sections or keys, malformed values, and missing required fields are
 * reported with their line number (missing fields with line 0). */
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    c.seeds.clear();
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    bool saw_samples = false, saw_interior = false, saw_initial = false, saw_boundary = false;
    bool saw_steps = false, saw_seeds = false, saw_out = false, saw_kind = false;
    bool saw_gamma = false, saw_radius = false;

    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = detail::trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(line, "unterminated section header");
            section = s.substr(1, s.size() - 2);
            if (section != "experiment" && section != "task" && section != "network" &&
                section != "init" && section != "optimizer" && section != "rank")
                throw ConfigError(line, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(line, "empty key");
        if (val.empty()) throw ConfigError(line, "empty value for '" + key + "'");
        if (section.empty()) throw ConfigError(line, "key '" + key + "' before any section");

        if (section == "experiment") {
            if (key == "preset") {
                c.preset = val;
            } else if (key == "steps") {
                c.steps = detail::parse_count(val, line, key);
                saw_steps = true;
            } else if (key == "seeds") {
                std::istringstream sv(val);
                std::string tok;
                while (sv >> tok)
                    c.seeds.push_back(detail::parse_count(tok, line, "seeds"));
                if (c.seeds.empty()) throw ConfigError(line, "seeds list is empty");
                saw_seeds = true;
            } else if (key == "out") {
                c.out = val;
                saw_out = true;
            } else {
                throw ConfigError(line, "unknown key '" + key + "' in [experiment]");
            }
        } else if (section == "task") {
            if (key == "kind") {
                task_from_name(val); // validates
                c.task.kind = val;
                saw_kind = true;
            } else if (key == "samples") {
                c.task.samples = detail::parse_count(val, line, key);
                saw_samples = true;
            } else if (key == "interior") {
                c.task.interior = detail::parse_count(val, line, key);
                saw_interior = true;
            } else if (key == "initial") {
                c.task.initial = detail::parse_count(val, line, key);
                saw_initial = true;
            } else if (key == "boundary") {
                c.task.boundary = detail::parse_count(val, line, key);
                saw_boundary = true;
            } else if (key == "mu_bc") {
                c.task.mu_bc = detail::parse_real(val, line, key);
            } else if (key == "mu_ic") {
                c.task.mu_ic = detail::parse_real(val, line, key);
            } else if (key == "resample") {
                c.task.resample = detail::parse_flag(val, line, key);
            } else {
                throw ConfigError(line, "unknown key '" + key + "' in [task]");
            }
        } else if (section == "network") {
            if (key == "depth") {
                c.network.depth = detail::parse_count(val, line, key);
                if (c.network.depth < 1) throw ConfigError(line, "depth must be >= 1");
            } else if (key == "width") {
                c.network.width = detail::parse_count(val, line, key);
                if (c.network.width < 1) throw ConfigError(line, "width must be >= 1");
            } else if (key == "activation") {
                try {
                    act_from_name(val);
                } catch (const std::exception& e) {
                    throw ConfigError(line, e.what());
                }
                c.network.activation = val;
            } else {
                throw ConfigError(line, "unknown key '" + key + "' in [network]");
            }
        } else if (section == "init") {
            if (key == "kind") {
                if (val != "xavier" && val != "grid" && val != "udi")
                    throw ConfigError(line, "init kind must be xavier, grid, or udi: " + val);
                c.init.kind = val;
            } else if (key == "gamma") {
                c.init.gamma = detail::parse_real(val, line, key);
                if (!(c.init.gamma > 0.0)) throw ConfigError(line, "gamma must be > 0");
                saw_gamma = true;
            } else if (key == "radius") {
                c.init.radius = detail::parse_real(val, line, key);
                if (!(c.init.radius > 0.0)) throw ConfigError(line, "radius must be > 0");
                saw_radius = true;
            } else {
                throw ConfigError(line, "unknown key '" + key + "' in [init]");
            }
        } else if (section == "optimizer") {
            if (key == "kind") {
                if (val != "adam" && val != "sgd")
                    throw ConfigError(line, "optimizer kind must be adam or sgd: " + val);
                c.optimizer.kind = val;
            } else if (key == "lr") {
                c.optimizer.lr = detail::parse_real(val, line, key);
                if (!(c.optimizer.lr > 0.0)) throw ConfigError(line, "lr must be > 0");
            } else {
                throw ConfigError(line, "unknown key '" + key + "' in [optimizer]");
            }
        } else { // rank
            if (key == "scheme") {
                try {
                    scheme_from_name(val);
                } catch (const std::exception& e) {
                    throw ConfigError(line, e.what());
                }
                c.rank.scheme = val;
            } else if (key == "m") {
                c.rank.m = detail::parse_count(val, line, key);
                if (c.rank.m < 2) throw ConfigError(line, "rank grid m must be >= 2");
            } else if (key == "epsilon") {
                c.rank.epsilon = detail::parse_real(val, line, key);
                if (c.rank.epsilon < 0.0) throw ConfigError(line, "epsilon must be >= 0");
            } else if (key == "every") {
                c.rank.every = detail::parse_count(val, line, key);
                if (c.rank.every < 1) throw ConfigError(line, "every must be >= 1");
            } else if (key == "per_layer") {
                c.rank.per_layer = detail::parse_flag(val, line, key);
            } else {
                throw ConfigError(line, "unknown key '" + key + "' in [rank]");
            }
        }
    }

    if (!saw_kind) throw ConfigError(0, "missing task.kind");
    if (!saw_steps) throw ConfigError(0, "missing experiment.steps");
    if (!saw_seeds) throw ConfigError(0, "missing experiment.seeds");
    if (!saw_out) throw ConfigError(0, "missing experiment.out");
    if (c.steps < 1) throw ConfigError(0, "steps must be >= 1");
    if (detail::task_is_fitting(c.task.kind)) {
        if (!saw_samples) throw ConfigError(0, "missing task.samples for a fitting task");
        if (c.task.resample) throw ConfigError(0, "resample applies only to pde tasks");
    } else {
        if (!saw_interior || !saw_boundary)
            throw ConfigError(0, "missing task.interior/boundary for a pde task");
        if (detail::task_has_initial(c.task.kind) && !saw_initial)
            throw ConfigError(0, "missing task.initial for a time-dependent task");
    }
    if (c.init.kind == "udi" && (!saw_gamma || !saw_radius))
        throw ConfigError(0, "udi init requires gamma and radius");
    return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/* Preset catalog mirroring the published experiment settings. Fitting rows:
 * staircase nets on cos x + cos 2x + cos 30x, 250 samples, 129-point rank
 * grid; pde rows carry their sample counts and penalty weights; the -xavier
 * / -grid / -udi suffixes pick the initializer being compared. */
inline std::vector<std::string> preset_names() {
    return {"ex2.1a",        "ex2.1a-n25",     "ex2.1a-l4",     "ex2.1a-l4n25",
            "ex2.1b-tanh",   "ex2.1b-relu",    "ex2.1b-elu",    "ex2.1b-cosine",
            "ex2.1c",        "ex2.2",          "ex3.1-failed",  "ex3.1-trainable",
            "ex4.1-xavier",  "ex4.1-grid",     "ex4.1-l4-xavier", "ex4.1-l4-grid",
            "ex4.2-xavier",  "ex4.2-udi",      "ex4.3-xavier",  "ex4.3-udi",
            "ex4.3-n100-xavier", "ex4.3-n100-udi"};
}

inline ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    c.out = "runs/" + name;
    c.seeds = {0, 1, 2, 3, 4};

    auto fit1d = [&](std::size_t depth, std::size_t width) {
        c.task.kind = "fit1d";
        c.task.samples = 250;
        c.network.depth = depth;
        c.network.width = width;
        c.steps = 20000;
    };

    if (name == "ex2.1a") {
        fit1d(2, 50);
    } else if (name == "ex2.1a-n25") {
        fit1d(2, 25);
    } else if (name == "ex2.1a-l4") {
        fit1d(4, 50);
    } else if (name == "ex2.1a-l4n25") {
        fit1d(4, 25);
    } else if (name == "ex2.1b-tanh" || name == "ex2.1b-relu" || name == "ex2.1b-elu" ||
               name == "ex2.1b-cosine") {
        fit1d(3, 50);
        c.network.activation = name.substr(7);
    } else if (name == "ex2.1c") {
        fit1d(4, 50);
        c.rank.per_layer = true;
    } else if (name == "ex2.2") {
        c.task.kind = "allen-cahn";
        c.task.interior = 250;
        c.task.initial = 100;
        c.task.boundary = 50;
        c.network.depth = 3;
        c.network.width = 50;
        c.steps = 20000;
        c.rank.m = 100;
        c.rank.epsilon = 1e-8;
    } else if (name == "ex3.1-failed" || name == "ex3.1-trainable") {
        c.task.kind = "heat2d";
        const bool failed = (name == "ex3.1-failed");
        c.task.interior = failed ? 1000 : 2500;
        c.task.initial = failed ? 1000 : 10000;
        c.task.boundary = 50;
        c.task.resample = true;
        c.network.depth = 3;
        c.network.width = 100;
        c.steps = 5000;
        c.rank.m = 50;
        c.rank.every = 250;
        c.seeds = {0, 1, 2};
    } else if (name == "ex4.1-xavier" || name == "ex4.1-grid") {
        fit1d(2, 30);
        c.steps = 10000;
        if (name == "ex4.1-grid") c.init.kind = "grid";
    } else if (name == "ex4.1-l4-xavier" || name == "ex4.1-l4-grid") {
        fit1d(4, 50);
        c.steps = 10000;
        if (name == "ex4.1-l4-grid") c.init.kind = "grid";
    } else if (name == "ex4.2-xavier" || name == "ex4.2-udi") {
        c.task.kind = "fit2d";
        c.task.samples = 550;
        c.network.depth = 3;
        c.network.width = 50;
        c.steps = 20000;
        if (name == "ex4.2-udi") {
            c.init.kind = "udi";
            c.init.gamma = 2.0;
            c.init.radius = std::sqrt(2.0);
        }
    } else if (name == "ex4.3-xavier" || name == "ex4.3-udi" || name == "ex4.3-n100-xavier" ||
               name == "ex4.3-n100-udi") {
        const bool wide = name.find("n100") != std::string::npos;
        c.task.kind = "poisson2d";
        c.task.interior = 250;
        c.task.boundary = 200;
        c.task.mu_bc = 20.0;
        c.network.depth = 2;
        c.network.width = wide ? 100 : 50;
        c.steps = 5000;
        if (name.find("-udi") != std::string::npos) {
            c.init.kind = "udi";
            c.init.gamma = wide ? 2.0 : 1.0; // gamma = width / 50
            c.init.radius = 3.14159265358979323846 / std::sqrt(2.0);
        }
    } else {
        std::string msg = "unknown preset '" + name + "'; available:";
        for (const std::string& p : preset_names()) msg += " " + p;
        throw ConfigError(0, msg);
    }
    return c;
}

inline RfmCompareConfig rfm_preset_config(const std::string& name, bool full) {
    if (name != "ex3.2") {
        throw ConfigError(0, "unknown preset '" + name + "' for rfm-compare; available: ex3.2");
    }
    RfmCompareConfig c;
    if (full) {
        c.cells = 3;
        c.features_per_cell = 100;
        c.elm_features = 900;
        c.out = "runs/ex3.2-full";
    }
    return c;
}

inline std::size_t task_input_dim(const std::string& kind) {
    if (kind == "fit1d") return 1;
    if (kind == "heat2d") return 3; // (x, y, t)
    return 2;                       // fit2d, poisson2d, allen-cahn
}

inline Task make_task_from(const ExperimentConfig& c, std::uint64_t seed) {
    const TaskKind kind = task_from_name(c.task.kind);
    if (kind == TaskKind::fit1d || kind == TaskKind::fit2d)
        return make_fit_task(kind, c.task.samples);
    Task t;
    if (kind == TaskKind::poisson2d) {
        t = make_poisson_task(c.task.interior, c.task.boundary, c.task.mu_bc, seed);
    } else if (kind == TaskKind::heat2d) {
        t = make_heat_task(c.task.interior, c.task.initial, c.task.boundary, seed);
    } else {
        t = make_allen_cahn_task(c.task.interior, c.task.initial, c.task.boundary, seed);
    }
    t.mu_bc = c.task.mu_bc;
    t.mu_ic = c.task.mu_ic;
    t.resample = c.task.resample;
    return t;
}

inline Network make_network_from(const ExperimentConfig& c, std::uint64_t seed) {
    Network net = Network::make(task_input_dim(c.task.kind), c.network.depth, c.network.width,
                                Activation{act_from_name(c.network.activation)});
    net = xavier_init(std::move(net), seed);
    if (c.init.kind == "grid") net = grid_init_1d(std::move(net));
    if (c.init.kind == "udi")
        net = udi_init(std::move(net), UdiConfig(c.init.gamma, c.init.radius, seed));
    return net;
}

inline Optimizer make_optimizer_from(const ExperimentConfig& c) {
    return (c.optimizer.kind == "sgd") ? Optimizer::sgd(c.optimizer.lr)
                                       : Optimizer::adam(c.optimizer.lr);
}

inline QuadratureGrid make_rank_grid_from(const ExperimentConfig& c, const Box& domain) {
    return build_grid(domain, scheme_from_name(c.rank.scheme), c.rank.m);
}

inline TrainOptions make_train_options_from(const ExperimentConfig& c) {
    TrainOptions opt;
    opt.steps = c.steps;
    opt.rank_every = c.rank.every;
    opt.epsilon = c.rank.epsilon;
    opt.per_layer_ranks = c.rank.per_layer;
    return opt;
}

} // namespace epsrank
