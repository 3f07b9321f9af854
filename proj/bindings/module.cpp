#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "survtraj/beran.hpp"
#include "survtraj/datasets.hpp"
#include "survtraj/evaluation.hpp"
#include "survtraj/generation.hpp"
#include "survtraj/model.hpp"
#include "survtraj/trajectory.hpp"
#include "survtraj/training.hpp"

namespace py = pybind11;
using namespace survtraj;

namespace {

struct PyDataset {
    std::vector<std::vector<double>> features;
    std::vector<double> times;
    std::vector<int> events;
};

PyDataset to_py(const SurvivalDataset& ds) {
    PyDataset out;
    for (const auto& rec : ds.records) {
        out.features.push_back(rec.x);
        out.times.push_back(rec.time);
        out.events.push_back(rec.event);
    }
    return out;
}

SurvivalDataset from_py(const PyDataset& ds) {
    if (ds.features.size() != ds.times.size() || ds.features.size() != ds.events.size()) {
        throw ContractError("dataset: features/times/events lengths differ");
    }
    SurvivalDataset out;
    for (size_t i = 0; i < ds.features.size(); ++i) {
        out.records.push_back({ds.features[i], ds.times[i], ds.events[i]});
    }
    return out;
}

DataSchema schema_for_dataset(const PyDataset& ds, const std::string& schema_json) {
    if (!schema_json.empty()) return schema_from_json_string(schema_json);
    DataSchema s;
    const size_t d = ds.features.empty() ? 0 : ds.features[0].size();
    for (size_t i = 0; i < d; ++i) {
        s.features.push_back({"x" + std::to_string(i + 1), FeatureKind::continuous, {}});
    }
    return s;
}

TrainSettings settings_from(const std::string& config_json) {
    if (config_json.empty()) return TrainSettings{};
    return settings_from_json_string(config_json);
}

}  // namespace

PYBIND11_MODULE(_survtraj, m) {
    m.doc() = "Survival trajectories: estimator, training, generation";

    py::register_exception<ShapeError>(m, "ShapeError");
    py::register_exception<NumericError>(m, "NumericError");
    py::register_exception<ContractError>(m, "ContractError");
    py::register_exception<DataError>(m, "DataError");

    py::class_<PyDataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("features", &PyDataset::features)
        .def_readwrite("times", &PyDataset::times)
        .def_readwrite("events", &PyDataset::events)
        .def("__len__", [](const PyDataset& ds) { return ds.times.size(); });

    m.def(
        "synth_linear",
        [](int n, double noise, uint64_t seed, double censor_rate) {
            Rng rng(seed);
            return to_py(synth_linear(n, noise, rng, censor_rate));
        },
        py::arg("n") = 200, py::arg("noise") = 0.15, py::arg("seed") = 42,
        py::arg("censor_rate") = 0.2);
    m.def(
        "synth_two_parabolas",
        [](int n, double noise, uint64_t seed, double censor_rate) {
            Rng rng(seed);
            return to_py(synth_two_parabolas(n, noise, rng, censor_rate));
        },
        py::arg("n") = 200, py::arg("noise") = 0.1, py::arg("seed") = 42,
        py::arg("censor_rate") = 0.2);
    m.def(
        "synth_two_circles",
        [](int n, double noise, uint64_t seed, double censor_rate) {
            Rng rng(seed);
            return to_py(synth_two_circles(n, noise, rng, censor_rate));
        },
        py::arg("n") = 200, py::arg("noise") = 0.05, py::arg("seed") = 42,
        py::arg("censor_rate") = 0.2);

    m.def(
        "kaplan_meier",
        [](const std::vector<double>& times, const std::vector<int>& events) {
            SurvivalDataset ds;
            for (size_t i = 0; i < times.size(); ++i) ds.records.push_back({{}, times[i], events[i]});
            const auto sf = kaplan_meier(ds);
            return py::make_tuple(sf.times, sf.values);
        },
        py::arg("times"), py::arg("events"));

    m.def(
        "beran_sf",
        [](const std::vector<double>& query, const std::vector<std::vector<double>>& embeddings,
           const std::vector<double>& times, const std::vector<int>& events, double tau) {
            std::vector<BeranItem> bg(embeddings.size());
            for (size_t i = 0; i < embeddings.size(); ++i) {
                bg[i] = {embeddings[i], times[i], events[i]};
            }
            const auto sf = beran_sf(query, bg, tau);
            return py::make_tuple(sf.times, sf.values);
        },
        py::arg("query"), py::arg("embeddings"), py::arg("times"), py::arg("events"),
        py::arg("tau") = 1.0);

    m.def(
        "expected_event_time",
        [](const std::vector<double>& times, const std::vector<double>& values) {
            return expected_event_time(StepSurvivalFunction{times, values});
        },
        py::arg("times"), py::arg("values"));

    m.def(
        "c_index",
        [](const std::vector<double>& pred, const std::vector<double>& times,
           const std::vector<int>& events) -> std::optional<double> {
            return c_index_hard(pred, times, events);
        },
        py::arg("pred"), py::arg("times"), py::arg("events"));

    m.def(
        "km_fidelity",
        [](const PyDataset& a, const PyDataset& b) { return km_fidelity(from_py(a), from_py(b)); },
        py::arg("original"), py::arg("generated"));

    py::class_<TrainedModel>(m, "Model")
        .def("save", [](const TrainedModel& model, const std::string& path) { save_model(model, path); })
        .def("to_json", [](const TrainedModel& model) { return model_to_json_string(model); })
        .def(
            "predict",
            [](const TrainedModel& model, const std::vector<std::vector<double>>& rows) {
                const auto preds = predict(model, rows);
                py::list out;
                for (const auto& p : preds) {
                    py::dict d;
                    d["expected_time"] = p.expected_time;
                    d["sf_times"] = p.sf.times;
                    d["sf_values"] = p.sf.values;
                    out.append(d);
                }
                return out;
            },
            py::arg("rows"))
        .def(
            "generate",
            [](const TrainedModel& model, const std::vector<std::vector<double>>& rows, uint64_t seed) {
                SurvivalDataset conditioning;
                for (const auto& r : rows) conditioning.records.push_back({r, 0.0, 1});
                Rng rng(seed);
                return to_py(generate_like(model, conditioning, rng));
            },
            py::arg("rows"), py::arg("seed") = 42)
        .def(
            "trajectory",
            [](const TrainedModel& model, const std::vector<double>& row, uint64_t seed, int v) {
                Rng rng(seed);
                const Trajectory traj = compute_trajectory(model, row, rng, v);
                py::dict d;
                d["grid"] = traj.grid.points;
                auto matrix = [](const Tensor& t) {
                    std::vector<std::vector<double>> rows;
                    for (int i = 0; i < t.rows(); ++i) {
                        rows.emplace_back(t.data() + static_cast<size_t>(i) * t.cols(),
                                          t.data() + static_cast<size_t>(i + 1) * t.cols());
                    }
                    return rows;
                };
                d["latent"] = matrix(traj.latent_points);
                d["features"] = matrix(traj.feature_points);
                d["alpha"] = matrix(traj.weights);
                return d;
            },
            py::arg("row"), py::arg("seed") = 42, py::arg("v") = 0)
        .def_property_readonly("tau", [](const TrainedModel& model) { return model.vae.tau(); })
        .def_property_readonly("eta", [](const TrainedModel& model) { return model.vae.eta[0]; });

    m.def(
        "fit",
        [](const PyDataset& ds, const std::string& config_json, const std::string& schema_json,
           uint64_t seed) {
            TrainSettings settings = settings_from(config_json);
            settings.train.seed = seed;
            Rng rng(seed);
            return fit(from_py(ds), schema_for_dataset(ds, schema_json), settings, rng);
        },
        py::arg("dataset"), py::arg("config_json") = "", py::arg("schema_json") = "",
        py::arg("seed") = 42);

    m.def("load_model", [](const std::string& path) { return load_model(path); }, py::arg("path"));

    m.def(
        "cross_validate",
        [](const PyDataset& ds, const std::string& config_json, const std::string& schema_json, int reps,
           uint64_t seed, int threads) {
            TrainSettings settings = settings_from(config_json);
            settings.train.seed = seed;
            Rng rng(seed);
            const auto report =
                cross_validate(from_py(ds), schema_for_dataset(ds, schema_json), settings, reps, rng,
                               threads);
            return report_to_json_string(report);
        },
        py::arg("dataset"), py::arg("config_json") = "", py::arg("schema_json") = "", py::arg("reps") = 5,
        py::arg("seed") = 42, py::arg("threads") = 1);

    m.def(
        "grad_check_quadratic",
        [](double theta, double h) {
            return grad_check([](const Value& t) { return sum(mul(t, t)); }, Tensor::scalar(theta), h);
        },
        py::arg("theta") = 3.0, py::arg("h") = 1e-5);
}
