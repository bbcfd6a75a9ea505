// Python bindings. Configs and reports cross the boundary as JSON text (the
// package wrapper turns them into dicts); scans cross as numpy arrays.

#include "rttloc/config.hpp"
#include "rttloc/errors.hpp"
#include "rttloc/eval.hpp"
#include "rttloc/ftm.hpp"
#include "rttloc/io.hpp"
#include "rttloc/localizer.hpp"
#include "rttloc/sim.hpp"

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rttloc;
using json = nlohmann::json;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using B8 = py::array_t<bool, py::array::c_style | py::array::forcecast>;

ExperimentConfig parse_config(const std::string& text) {
    return config_from_json(text.empty() ? json::object() : json::parse(text));
}

// (n, K) values plus an optional (n, K) detection mask -> state vectors.
// Without a mask every slot counts as detected.
std::vector<StateVector> states_of(const F64& rtt, const std::optional<B8>& detected) {
    if (rtt.ndim() != 2) throw ValidationError("rtt must be a 2-D array (scans x pairs)");
    const auto n = static_cast<std::size_t>(rtt.shape(0)), k = static_cast<std::size_t>(rtt.shape(1));
    if (detected && (detected->ndim() != 2 || detected->shape(0) != rtt.shape(0) || detected->shape(1) != rtt.shape(1)))
        throw ValidationError("detected must have the same shape as rtt");
    const double* v = rtt.data();
    const bool* d = detected ? detected->data() : nullptr;
    std::vector<StateVector> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].values.assign(v + i * k, v + (i + 1) * k);
        out[i].detected.assign(k, true);
        if (d)
            for (std::size_t j = 0; j < k; ++j) out[i].detected[j] = d[i * k + j];
        out[i] = fill_undetected(std::move(out[i]));
    }
    return out;
}

py::dict dataset_arrays(const std::vector<ScanRecord>& rows, std::size_t k) {
    const auto n = static_cast<py::ssize_t>(rows.size());
    const auto kk = static_cast<py::ssize_t>(k);
    // fresh arrays are C-contiguous; fill through the raw pointers
    py::array_t<int> ids(std::vector<py::ssize_t>{n});
    py::array_t<double> pos(std::vector<py::ssize_t>{n, 2});
    py::array_t<double> rtt(std::vector<py::ssize_t>{n, kk});
    py::array_t<bool> det(std::vector<py::ssize_t>{n, kk});
    int* I = ids.mutable_data();
    double* P = pos.mutable_data();
    double* R = rtt.mutable_data();
    bool* D = det.mutable_data();
    for (const auto& r : rows) {
        *I++ = r.ref_id;
        *P++ = r.position.x;
        *P++ = r.position.y;
        for (std::size_t j = 0; j < k; ++j) {
            *R++ = r.state.values[j];
            *D++ = r.state.detected[j];
        }
    }
    py::dict out;
    out["ref_id"] = ids;
    out["position"] = pos;
    out["rtt"] = rtt;
    out["detected"] = det;
    return out;
}

py::dict estimate_dict(const LocalizationEstimate& est) {
    py::list dets;
    for (const auto& d : est.detected) {
        py::dict x;
        x["ref_point_id"] = d.ref_point_id;
        x["x"] = d.position.x;
        x["y"] = d.position.y;
        x["score"] = d.score;
        dets.append(x);
    }
    py::dict out;
    out["detections"] = dets;
    out["threshold"] = est.threshold_used;
    out["posterior"] = est.posterior;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Device-free WiFi RTT localization core";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.def(
        "compute_rtt", [](Nanoseconds t1, Nanoseconds t2, Nanoseconds t3, Nanoseconds t4) {
            return compute_rtt({t1, t2, t3, t4});
        },
        py::arg("t1"), py::arg("t2"), py::arg("t3"), py::arg("t4"));
    m.def("rtt_to_distance", &rtt_to_distance, py::arg("rtt_ns"));
    m.def("distance_to_rtt", &distance_to_rtt, py::arg("meters"));

    m.def("default_config", [](const std::string& preset) { return config_to_json(default_experiment(preset)).dump(); },
          py::arg("preset") = "testbed1");
    m.def("normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)).dump(); });

    // Training rows (stream 0) of the configured world, as numpy arrays.
    m.def("simulate", [](const std::string& config, std::uint64_t stream) {
        const auto cfg = parse_config(config);
        const SimConfig sim = experiment_sim(cfg);
        return dataset_arrays(generate_dataset(sim, cfg.scans_per_point, stream), sim.testbed.pair_count());
    });

    m.def("run_experiment", [](const std::string& config) {
        const auto result = [&] {
            py::gil_scoped_release unlocked;
            return run_experiment(parse_config(config));
        }();
        return report_to_json(result.report).dump();
    });

    py::class_<ModelRegistry>(m, "Registry")
        .def_static(
            "train",
            [](const std::string& config, const F64& rtt, const std::optional<B8>& detected,
               const py::array_t<int>& ref_id, const std::vector<int>& points) {
                const auto cfg = parse_config(config);
                const SimConfig sim = experiment_sim(cfg);
                auto states = states_of(rtt, detected);
                if (static_cast<std::size_t>(ref_id.size()) != states.size())
                    throw ValidationError("ref_id needs one label per scan");
                std::vector<ScanRecord> rows(states.size());
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    rows[i].ref_id = ref_id.at(static_cast<py::ssize_t>(i));
                    rows[i].state = std::move(states[i]);
                }
                py::gil_scoped_release unlocked;
                return train_registry(sim.testbed, rows, experiment_train(cfg), points, cfg.threads);
            },
            py::arg("config"), py::arg("rtt"), py::arg("detected"), py::arg("ref_id"), py::arg("points"))
        .def_static("from_json", [](const std::string& text) { return store_from_json(json::parse(text)); })
        .def_static("load", [](const std::string& path) { return load_model_store(path); })
        .def("to_json", [](const ModelRegistry& r) { return dump_json(store_to_json(r)); })
        .def("save", [](const ModelRegistry& r, const std::string& path) { save_model_store(path, r); })
        .def("__len__", &ModelRegistry::size)
        .def_property_readonly("input_dim", &ModelRegistry::input_dim)
        .def_property_readonly("ids",
                               [](const ModelRegistry& r) {
                                   std::vector<int> ids;
                                   for (const auto& kv : r.models()) ids.push_back(kv.first);
                                   return ids;
                               })
        .def(
            "reconstruction_errors",
            [](const ModelRegistry& r, const F64& rtt, const std::optional<B8>& detected) {
                const auto states = states_of(rtt, detected);
                std::vector<std::vector<double>> out;
                for (const auto& s : states) out.push_back(reconstruction_errors(r, normalize(s, r.norm())));
                return out;
            },
            py::arg("rtt"), py::arg("detected") = std::nullopt)
        .def(
            "localize",
            [](const ModelRegistry& r, const F64& rtt, const std::optional<B8>& detected, std::optional<double> tau,
               std::size_t k_neighbors, std::optional<std::size_t> n_expected) {
                LocalizerConfig cfg;
                cfg.tau = tau;
                cfg.k_neighbors = k_neighbors;
                cfg.n_expected = n_expected;
                return estimate_dict(localize_scans(r, states_of(rtt, detected), cfg));
            },
            py::arg("rtt"), py::arg("detected") = std::nullopt, py::arg("tau") = std::nullopt,
            py::arg("k_neighbors") = 3, py::arg("n_expected") = std::nullopt)
        .def(py::self == py::self);
}
