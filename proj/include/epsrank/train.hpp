#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epsrank/gram.hpp"
#include "epsrank/loss.hpp"
#include "epsrank/network.hpp"
#include "epsrank/optimizer.hpp"
#include "epsrank/task.hpp"

namespace epsrank {

struct TrajectoryRecord {
    std::size_t iteration = 0;
    double loss = 0.0;
    std::size_t eps_rank_last_layer = 0;
    std::vector<std::size_t> eps_rank_per_layer; // filled when per-layer enabled
    std::vector<double> top_eigenvalues;         // in-memory diagnostics, not serialized
    std::uint64_t wall_ms = 0;                   // in-memory diagnostics, not serialized
};

struct TrainOptions {
    std::size_t steps = 1000;
    std::size_t rank_every = 100;
    double epsilon = 1e-6;
    bool per_layer_ranks = false;
    std::size_t top_k = 5;
};

struct TrainResult {
    Network net;
    std::vector<TrajectoryRecord> records;
    bool aborted = false;
    std::size_t abort_iteration = 0;
    std::string abort_message;
};

// sampling salt for the fixed evaluation sets used when resampling is on
inline constexpr std::uint64_t kEvalSampleSalt = 0xE7A15ULL;

/* Training loop with rank instrumentation. Deterministic given (net, task,
 * opt, opts). Emits a record at iteration 0, every rank_every steps, and at
 * the final step; the recorded loss is recomputed at the current parameters.
 *
 * With task.resample set (PDE tasks), each step draws fresh sample sets from
 * the task's counts, and records measure the loss on a fixed evaluation set
 * drawn once from the same counts, so the recorded curve estimates the
 * continuous objective rather than the fit to one batch.
 *
 * A non-finite loss aborts the run: no further records are emitted and the
 * abort iteration/message land in the result. */
inline TrainResult train_run(Network net, const Task& task, Optimizer opt,
                             const TrainOptions& opts, const QuadratureGrid& rank_grid) {
    if (opts.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
    if (opts.rank_every < 1) throw std::invalid_argument("train: rank_every must be >= 1");
    if (opts.epsilon < 0.0) throw std::invalid_argument("train: epsilon must be >= 0");
    if (task.resample && task.is_fitting())
        throw std::invalid_argument("train: resampling applies to PDE tasks only");
    if (rank_grid.points.cols != net.d)
        throw std::invalid_argument("train: rank grid dimension mismatch");

    TrainResult res;
    res.records.reserve(opts.steps / opts.rank_every + 2);

    Task eval_storage;
    const Task* record_task = &task;
    if (task.resample) {
        eval_storage = task;
        fill_pinn_samples(eval_storage, mix_seed(task.sample_seed, kEvalSampleSalt));
        record_task = &eval_storage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                              std::chrono::steady_clock::now() - t0)
                                              .count());
    };

    auto abort_run = [&](std::size_t k, const std::string& msg) {
        res.aborted = true;
        res.abort_iteration = k;
        res.abort_message = msg;
    };

    // emits the record for iteration k at the current parameters;
    // returns false when the recomputed loss is non-finite
    auto emit = [&](std::size_t k) {
        double loss;
        try {
            loss = task_loss(net, *record_task).total;
        } catch (const std::runtime_error& e) {
            abort_run(k, e.what());
            return false;
        }
        if (!std::isfinite(loss)) {
            abort_run(k, "non-finite loss");
            return false;
        }
        TrajectoryRecord rec;
        rec.iteration = k;
        rec.loss = loss;
        const Matrix feats = net.layer_features(rank_grid.points, net.L - 1);
        GramSpectrum spec = eps_rank(gram_matrix(feats, rank_grid), opts.epsilon);
        rec.eps_rank_last_layer = spec.eps_rank;
        const std::size_t nk = std::min(opts.top_k, spec.eigenvalues.size());
        rec.top_eigenvalues.assign(spec.eigenvalues.begin(), spec.eigenvalues.begin() + nk);
        if (opts.per_layer_ranks)
            rec.eps_rank_per_layer = layer_rank_profile(net, rank_grid, opts.epsilon);
        rec.wall_ms = elapsed_ms();
        res.records.push_back(std::move(rec));
        return true;
    };

    if (!emit(0)) {
        res.net = std::move(net);
        return res;
    }

    std::vector<double> params = net.flatten();
    std::vector<double> grad;
    Task batch_storage;

    for (std::size_t k = 1; k <= opts.steps; ++k) {
        const Task* batch = &task;
        if (task.resample) {
            if (k == 1) batch_storage = task;
            fill_pinn_samples(batch_storage, mix_seed(task.sample_seed, k));
            batch = &batch_storage;
        }

        double batch_loss;
        try {
            batch_loss = task_loss_grad(net, *batch, grad).total;
        } catch (const std::runtime_error& e) {
            abort_run(k, e.what());
            break;
        }
        if (!std::isfinite(batch_loss)) {
            abort_run(k, "non-finite loss");
            break;
        }

        opt.step(params, grad);
        net.unflatten(params);

        if (k % opts.rank_every == 0 || k == opts.steps)
            if (!emit(k)) break;
    }

    res.net = std::move(net);
    return res;
}

/* CSV serialization: iteration, loss, eps_rank, then one column per layer
 * when per-layer ranks were recorded. Byte-deterministic for a given record
 * stream. An aborted run ends with a comment line naming the abort. */
inline void write_trajectory_csv(std::ostream& os, const TrainResult& res) {
    os << "iteration,loss,eps_rank";
    const std::size_t layers =
        res.records.empty() ? 0 : res.records.front().eps_rank_per_layer.size();
    for (std::size_t k = 0; k < layers; ++k) os << ",rank_layer_" << k;
    os << "\n";
    char buf[40];
    for (const TrajectoryRecord& r : res.records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.loss);
        os << r.iteration << "," << buf << "," << r.eps_rank_last_layer;
        for (std::size_t v : r.eps_rank_per_layer) os << "," << v;
        os << "\n";
    }
    if (res.aborted)
        os << "# aborted: " << res.abort_message << " at iteration " << res.abort_iteration
           << "\n";
}

/* JSON-lines serialization: one object per record (keys sorted by the json
 * library, values shortest-round-trip), plus a final abort object when the
 * run aborted. */
inline void write_trajectory_jsonl(std::ostream& os, const TrainResult& res) {
    for (const TrajectoryRecord& r : res.records) {
        nlohmann::json j{{"iteration", r.iteration},
                         {"loss", r.loss},
                         {"eps_rank", r.eps_rank_last_layer}};
        if (!r.eps_rank_per_layer.empty()) j["eps_rank_per_layer"] = r.eps_rank_per_layer;
        os << j.dump() << "\n";
    }
    if (res.aborted) {
        nlohmann::json j{{"aborted", true},
                         {"iteration", res.abort_iteration},
                         {"message", res.abort_message}};
        os << j.dump() << "\n";
    }
}

} // namespace epsrank
