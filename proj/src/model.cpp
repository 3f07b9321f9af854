#include "survtraj/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "survtraj/beran.hpp"
#include "survtraj/errors.hpp"

namespace survtraj {

using json = nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    j["values"] = std::vector<double>(t.data(), t.data() + t.size());
    return j;
}

Tensor tensor_from_json(const json& j) {
    std::vector<int> shape = j.at("shape").get<std::vector<int>>();
    std::vector<double> values = j.at("values").get<std::vector<double>>();
    return Tensor::from(std::move(values), std::move(shape));
}

json mlp_to_json(const Mlp& mlp) {
    json layers = json::array();
    for (const auto& l : mlp.layers) {
        json jl;
        jl["w"] = tensor_to_json(l.w);
        jl["b"] = tensor_to_json(l.b);
        layers.push_back(jl);
    }
    return layers;
}

Mlp mlp_from_json(const json& j) {
    Mlp mlp;
    for (const auto& jl : j) {
        mlp.layers.push_back({tensor_from_json(jl.at("w")), tensor_from_json(jl.at("b"))});
    }
    return mlp;
}

json schema_to_json(const DataSchema& s) {
    json j = json::parse(schema_to_json_string(s));
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    j["fitted"] = s.fitted;
    return j;
}

DataSchema schema_from_json(const json& j) {
    DataSchema s = schema_from_json_string(j.dump());
    s.mean = j.value("mean", std::vector<double>{});
    s.stddev = j.value("stddev", std::vector<double>{});
    s.fitted = j.value("fitted", false);
    return s;
}

}  // namespace

std::string model_to_json_string(const TrainedModel& model) {
    json j;
    j["format"] = "survtraj-model";
    j["version"] = 1;
    j["schema"] = schema_to_json(model.schema);

    json v;
    v["input_dim"] = model.vae.cfg.input_dim;
    v["d_z"] = model.vae.cfg.d_z;
    v["hidden_units"] = model.vae.cfg.hidden_units;
    v["hidden_layers"] = model.vae.cfg.hidden_layers;
    v["trunk"] = mlp_to_json(model.vae.trunk);
    v["mu_head"] = mlp_to_json(Mlp{{model.vae.mu_head}});
    v["sigma_head"] = mlp_to_json(Mlp{{model.vae.sigma_head}});
    v["decoder"] = mlp_to_json(model.vae.decoder);
    v["tau_log"] = model.vae.tau_log[0];
    v["eta"] = model.vae.eta[0];
    j["vae"] = v;

    json bg;
    bg["embeddings"] = tensor_to_json(model.background.embeddings);
    bg["features"] = tensor_to_json(model.background.features);
    bg["times"] = model.background.times;
    bg["events"] = model.background.events;
    j["background"] = bg;

    json c;
    c["net"] = mlp_to_json(model.censor.net);
    c["constant"] = model.censor.constant;
    c["constant_p"] = model.censor.constant_p;
    c["time_mean"] = model.censor.time_mean;
    c["time_std"] = model.censor.time_std;
    c["logit_offset"] = model.censor.logit_offset;
    c["input_dim"] = model.censor.input_dim;
    j["censor"] = c;

    j["t_min"] = model.t_min;
    j["t_max"] = model.t_max;
    j["settings"] = json::parse(settings_to_json_string(model.settings));
    return j.dump();
}

TrainedModel model_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model: invalid JSON: ") + e.what());
    }
    if (j.value("format", "") != "survtraj-model") throw DataError("model: unrecognized format");
    TrainedModel m;
    m.schema = schema_from_json(j.at("schema"));

    const json& v = j.at("vae");
    m.vae.cfg.input_dim = v.at("input_dim").get<int>();
    m.vae.cfg.d_z = v.at("d_z").get<int>();
    m.vae.cfg.hidden_units = v.at("hidden_units").get<int>();
    m.vae.cfg.hidden_layers = v.at("hidden_layers").get<int>();
    m.vae.trunk = mlp_from_json(v.at("trunk"));
    m.vae.mu_head = mlp_from_json(v.at("mu_head")).layers.at(0);
    m.vae.sigma_head = mlp_from_json(v.at("sigma_head")).layers.at(0);
    m.vae.decoder = mlp_from_json(v.at("decoder"));
    m.vae.tau_log = Tensor::scalar(v.at("tau_log").get<double>());
    m.vae.eta = Tensor::scalar(v.at("eta").get<double>());

    const json& bg = j.at("background");
    m.background.embeddings = tensor_from_json(bg.at("embeddings"));
    m.background.features = tensor_from_json(bg.at("features"));
    m.background.times = bg.at("times").get<std::vector<double>>();
    m.background.events = bg.at("events").get<std::vector<int>>();

    const json& c = j.at("censor");
    m.censor.net = mlp_from_json(c.at("net"));
    m.censor.constant = c.at("constant").get<bool>();
    m.censor.constant_p = c.at("constant_p").get<double>();
    m.censor.time_mean = c.at("time_mean").get<double>();
    m.censor.time_std = c.at("time_std").get<double>();
    m.censor.logit_offset = c.at("logit_offset").get<double>();
    m.censor.input_dim = c.at("input_dim").get<int>();

    m.t_min = j.at("t_min").get<double>();
    m.t_max = j.at("t_max").get<double>();
    m.settings = settings_from_json_string(j.at("settings").dump());
    return m;
}

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("model: cannot write " + path);
    out << model_to_json_string(model) << "\n";
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("model: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_string(ss.str());
}

Tensor encode_rows(const VaeParams& vae, const Tensor& std_rows) {
    VaeLeaves leaves = make_leaves(vae, false);
    EncodeOut out = encode_graph(leaves, Value::constant(std_rows));
    return out.mu.val();
}

std::vector<Prediction> predict(const TrainedModel& model,
                                const std::vector<std::vector<double>>& raw_rows) {
    if (model.background.size() == 0) throw ContractError("predict: model has no background set");
    const int d = model.schema.encoded_width();
    const int n_rows = static_cast<int>(raw_rows.size());
    Tensor x({std::max(n_rows, 1), d});
    for (int i = 0; i < n_rows; ++i) {
        if (static_cast<int>(raw_rows[static_cast<size_t>(i)].size()) != d) {
            throw ContractError("predict: row " + std::to_string(i) + " has width " +
                                std::to_string(raw_rows[static_cast<size_t>(i)].size()) + ", expected " +
                                std::to_string(d));
        }
        const auto s = standardize_row(raw_rows[static_cast<size_t>(i)], model.schema);
        for (int k = 0; k < d; ++k) x.at(i, k) = s[static_cast<size_t>(k)];
    }
    if (n_rows == 0) return {};

    const Tensor mu = encode_rows(model.vae, x);
    Value w = kernel_weight_matrix(Value::constant(mu), Value::constant(model.background.embeddings),
                                   Value::constant(model.vae.tau()));
    Value curve = beran_curve(w, model.background.events);
    Value that = beran_expected(curve, model.background.times);

    std::vector<Prediction> out(static_cast<size_t>(n_rows));
    const int nb = model.background.size();
    for (int i = 0; i < n_rows; ++i) {
        std::vector<double> row(curve.val().data() + static_cast<size_t>(i) * nb,
                                curve.val().data() + static_cast<size_t>(i + 1) * nb);
        out[static_cast<size_t>(i)].sf = make_step_sf(model.background.times, row);
        out[static_cast<size_t>(i)].expected_time = that.val()[static_cast<size_t>(i)];
    }
    return out;
}

double censor_probability(const CensorClassifier& clf, const std::vector<double>& x_std, double t_raw) {
    if (clf.constant) return clf.constant_p;
    std::vector<double> in = x_std;
    in.push_back((t_raw - clf.time_mean) / clf.time_std);
    if (static_cast<int>(in.size()) != clf.input_dim) {
        throw ContractError("censor_probability: input width mismatch");
    }
    Tensor row({1, clf.input_dim});
    for (int i = 0; i < clf.input_dim; ++i) row.at(0, i) = in[static_cast<size_t>(i)];
    Value h = Value::constant(row);
    for (size_t i = 0; i < clf.net.layers.size(); ++i) {
        h = affine(h, Value::constant(clf.net.layers[i].w), Value::constant(clf.net.layers[i].b));
        if (i + 1 < clf.net.layers.size()) h = tanh_act(h);
    }
    return sigmoid(add_scalar(h, -clf.logit_offset)).val()[0];
}

}  // namespace survtraj
