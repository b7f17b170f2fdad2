#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "epsrank/config.hpp"
#include "epsrank/gram.hpp"
#include "epsrank/rfm.hpp"
#include "epsrank/theory.hpp"
#include "epsrank/train.hpp"

namespace py = pybind11;
using namespace epsrank;

namespace {

Matrix matrix_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::memcpy(m.data.data(), a.data(), sizeof(double) * m.data.size());
    return m;
}

std::vector<double> vector_from(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
    return {a.data(), a.data() + a.shape(0)};
}

// nlohmann::json -> native python objects via the stdlib json parser
py::object to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

// quadrature container for externally supplied points/weights
QuadratureGrid grid_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& pts,
                         const py::array_t<double, py::array::c_style | py::array::forcecast>& w) {
    QuadratureGrid g;
    g.points = matrix_from(pts);
    g.weights = vector_from(w);
    if (g.weights.size() != g.points.rows)
        throw std::invalid_argument("weights length must match point count");
    return g;
}

py::dict record_to_dict(const TrajectoryRecord& r) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["loss"] = r.loss;
    d["eps_rank"] = r.eps_rank_last_layer;
    if (!r.eps_rank_per_layer.empty()) d["eps_rank_per_layer"] = r.eps_rank_per_layer;
    return d;
}

py::dict run_preset(const std::string& preset, std::uint64_t seed, std::size_t steps) {
    ExperimentConfig cfg = preset_config(preset);
    if (steps) cfg.steps = steps;
    cfg.seeds = {seed};
    const Task task = make_task_from(cfg, seed);
    Network net = make_network_from(cfg, seed);
    const QuadratureGrid grid = make_rank_grid_from(cfg, task.domain);
    const TrainResult res = train_run(std::move(net), task, make_optimizer_from(cfg),
                                      make_train_options_from(cfg), grid);
    py::list records;
    for (const TrajectoryRecord& r : res.records) records.append(record_to_dict(r));
    py::dict out;
    out["preset"] = preset;
    out["seed"] = seed;
    out["records"] = records;
    out["aborted"] = res.aborted;
    if (res.aborted) {
        out["abort_iteration"] = res.abort_iteration;
        out["abort_message"] = res.abort_message;
    }
    return out;
}

py::object gram_spectrum(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
    double epsilon) {
    const Matrix d = matrix_from(features);
    const QuadratureGrid g = grid_from(points, weights);
    return to_py(eps_rank(gram_matrix(d, g), epsilon).to_json());
}

py::object compress_py(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& f_evals,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& beta,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
    double epsilon) {
    return to_py(compress(matrix_from(f_evals), vector_from(beta), grid_from(points, weights),
                          epsilon)
                     .to_json());
}

py::object probe_lemma_py(std::size_t n, std::size_t p, std::size_t trials,
                          std::uint64_t seed) {
    return to_py(probe_lemma(n, p, trials, seed).to_json());
}

py::dict rfm_compare(std::uint64_t seed, bool full) {
    const RfmCompareConfig cfg = rfm_preset_config("ex3.2", full);
    const Box dom = Box::cube(-1.0, 1.0, 2);
    const auto target = [](const double* x) { return target_twoscale_2d(x[0], x[1]); };
    const QuadratureGrid coll = build_grid(dom, GridScheme::uniform_mesh, cfg.collocation);
    const QuadratureGrid ev = build_grid(dom, GridScheme::trapezoid, cfg.eval_m);
    RandomFeatureModel rfm = build_model(dom, cfg.cells, cfg.features_per_cell, cfg.gamma, seed);
    RandomFeatureModel elm = build_model(dom, 1, cfg.elm_features, cfg.gamma, seed);
    fit(rfm, target, coll, cfg.trunc_tol);
    fit(elm, target, coll, cfg.trunc_tol);
    const ModelReport rr = model_rank_and_error(rfm, target, ev, cfg.epsilon);
    const ModelReport er = model_rank_and_error(elm, target, ev, cfg.epsilon);
    py::dict out;
    out["seed"] = seed;
    out["rfm_eps_rank"] = rr.spectrum.eps_rank;
    out["rfm_rel_l2_error"] = rr.rel_l2_error;
    out["elm_eps_rank"] = er.spectrum.eps_rank;
    out["elm_rel_l2_error"] = er.rel_l2_error;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "numerical laboratory for the eps-rank of neuron dictionaries";

    m.def("preset_names", &preset_names, "names accepted by run_preset");
    m.def("preset_text", [](const std::string& name) { return config_to_text(preset_config(name)); },
          py::arg("name"), "resolved configuration of a preset, as config-file text");
    m.def("run_preset", &run_preset, py::arg("preset"), py::arg("seed") = 0,
          py::arg("steps") = 0,
          "train one seed of a preset; steps=0 keeps the preset's step count. "
          "Returns the trajectory records (iteration, loss, eps_rank).");
    m.def("gram_spectrum", &gram_spectrum, py::arg("features"), py::arg("points"),
          py::arg("weights"), py::arg("epsilon") = 1e-6,
          "quadrature Gram spectrum and eps-rank of feature columns sampled at points");
    m.def("compress", &compress_py, py::arg("f_evals"), py::arg("beta"), py::arg("points"),
          py::arg("weights"), py::arg("epsilon") = 1e-6,
          "compress an n-function dictionary to its eps-rank with a certified L2 bound");
    m.def("probe_lemma", &probe_lemma_py, py::arg("n"), py::arg("p"),
          py::arg("trials") = 1000, py::arg("seed") = 0,
          "worst best-submatrix minimum singular value over random orthonormal frames");
    m.def("rfm_compare", &rfm_compare, py::arg("seed") = 0, py::arg("full") = false,
          "localized random features vs one global set at the same budget");
}
