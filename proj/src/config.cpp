#include "survtraj/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "survtraj/errors.hpp"

namespace survtraj {

using json = nlohmann::json;

namespace {

template <typename T>
void take(json& j, const char* key, T& field) {
    if (j.contains(key)) {
        try {
            field = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw DataError(std::string("config: bad value for '") + key + "'");
        }
        j.erase(key);
    }
}

}  // namespace

TrainSettings settings_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("config: expected a JSON object");
    TrainSettings s;
    take(j, "r", s.train.r);
    take(j, "M", s.train.M);
    take(j, "m", s.train.m);
    take(j, "v", s.train.v);
    take(j, "epochs", s.train.epochs);
    take(j, "warmup", s.train.warmup);
    take(j, "learning_rate", s.train.learning_rate);
    take(j, "seed", s.train.seed);
    take(j, "batch_capacity", s.train.batch_capacity);
    take(j, "d_z", s.train.d_z);
    take(j, "hidden_units", s.train.hidden_units);
    take(j, "hidden_layers", s.train.hidden_layers);
    take(j, "classifier_hidden", s.train.classifier_hidden);
    take(j, "classifier_epochs", s.train.classifier_epochs);
    take(j, "classifier_learning_rate", s.train.classifier_learning_rate);
    take(j, "gamma1", s.loss.gamma1);
    take(j, "gamma2", s.loss.gamma2);
    take(j, "gamma3", s.loss.gamma3);
    take(j, "gamma4", s.loss.gamma4);
    take(j, "lambda", s.loss.lambda);
    if (!j.empty()) {
        throw DataError("config: unknown key '" + j.begin().key() + "'");
    }
    return s;
}

std::string settings_to_json_string(const TrainSettings& s) {
    json j;
    j["r"] = s.train.r;
    j["M"] = s.train.M;
    j["m"] = s.train.m;
    j["v"] = s.train.v;
    j["epochs"] = s.train.epochs;
    j["warmup"] = s.train.warmup;
    j["learning_rate"] = s.train.learning_rate;
    j["seed"] = s.train.seed;
    j["batch_capacity"] = s.train.batch_capacity;
    j["d_z"] = s.train.d_z;
    j["hidden_units"] = s.train.hidden_units;
    j["hidden_layers"] = s.train.hidden_layers;
    j["classifier_hidden"] = s.train.classifier_hidden;
    j["classifier_epochs"] = s.train.classifier_epochs;
    j["classifier_learning_rate"] = s.train.classifier_learning_rate;
    j["gamma1"] = s.loss.gamma1;
    j["gamma2"] = s.loss.gamma2;
    j["gamma3"] = s.loss.gamma3;
    j["gamma4"] = s.loss.gamma4;
    j["lambda"] = s.loss.lambda;
    return j.dump(2);
}

TrainSettings load_settings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return settings_from_json_string(ss.str());
}

}  // namespace survtraj
