#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "survtraj/datasets.hpp"
#include "survtraj/errors.hpp"
#include "survtraj/evaluation.hpp"
#include "survtraj/generation.hpp"
#include "survtraj/logging.hpp"
#include "survtraj/model.hpp"
#include "survtraj/trajectory.hpp"
#include "survtraj/training.hpp"

namespace {

using namespace survtraj;
using json = nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

TrainSettings settings_from_file(const std::string& path) {
    if (path.empty()) return TrainSettings{};
    return load_settings(path);
}

DataSchema schema_for(const std::string& schema_path, const std::string& data_path) {
    if (!schema_path.empty()) return load_schema(schema_path);
    return infer_schema_from_csv(data_path);
}

// Feature rows for predict/generate/trajectory inputs; time/event columns are
// optional and ignored when present.
std::vector<std::vector<double>> load_feature_rows(const std::string& path, const DataSchema& schema) {
    DataSchema probe = schema;
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("csv: " + path + " is empty (header required)");
    std::stringstream hs(header);
    std::string cell;
    bool has_time = false, has_event = false;
    while (std::getline(hs, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        if (cell == schema.time_name) has_time = true;
        if (cell == schema.event_name) has_event = true;
    }
    in.close();

    SurvivalDataset ds;
    if (has_time && has_event) {
        ds = load_csv(path, probe);
    } else {
        // Append stub time/event columns in memory via a temporary parse.
        std::ifstream again(path);
        std::stringstream patched;
        std::string line;
        std::getline(again, line);
        patched << line << "," << schema.time_name << "," << schema.event_name << "\n";
        while (std::getline(again, line)) {
            if (line.empty()) continue;
            patched << line << ",0,1\n";
        }
        const std::string tmp = path + ".rows.tmp";
        std::ofstream out(tmp);
        out << patched.str();
        out.close();
        ds = load_csv(tmp, probe);
        std::remove(tmp.c_str());
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(ds.size());
    for (const auto& rec : ds.records) rows.push_back(rec.x);
    return rows;
}

int cmd_synth(const std::string& kind, int n, double noise, double censor_rate, uint64_t seed,
              const std::string& out, const std::string& schema_out) {
    Rng rng(seed);
    SurvivalDataset ds;
    if (kind == "linear") {
        ds = synth_linear(n, noise, rng, censor_rate);
    } else if (kind == "parabolas") {
        ds = synth_two_parabolas(n, noise, rng, censor_rate);
    } else if (kind == "circles") {
        ds = synth_two_circles(n, noise, rng, censor_rate);
    } else {
        throw CLI::ValidationError("--kind must be linear, parabolas or circles");
    }
    const DataSchema schema = synth_schema();
    save_csv(ds, schema, out);
    if (!schema_out.empty()) save_schema(schema, schema_out);
    return 0;
}

int cmd_train(const std::string& data, const std::string& schema_path, const std::string& config_path,
              const std::string& model_out, const std::string& log_path, double holdout_frac,
              uint64_t seed) {
    const DataSchema schema = schema_for(schema_path, data);
    SurvivalDataset ds = load_csv(data, schema);
    TrainSettings settings = settings_from_file(config_path);
    settings.train.seed = seed;

    SurvivalDataset train = ds, holdout;
    if (holdout_frac > 0.0) {
        Rng split_rng = Rng(seed).split(0x5917);
        std::vector<int> order(ds.size());
        for (size_t i = 0; i < ds.size(); ++i) order[i] = static_cast<int>(i);
        split_rng.shuffle(order);
        const int n_hold = static_cast<int>(holdout_frac * static_cast<double>(ds.size()));
        train.records.clear();
        for (size_t i = 0; i < order.size(); ++i) {
            auto& dst = static_cast<int>(i) < n_hold ? holdout : train;
            dst.records.push_back(ds.records[static_cast<size_t>(order[i])]);
        }
    }

    std::ofstream log_file;
    FitOptions opts;
    if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) throw DataError("train: cannot write " + log_path);
        opts.log = &log_file;
    }
    if (!holdout.records.empty()) opts.holdout = &holdout;

    Rng rng(seed);
    TrainedModel model = fit(train, schema, settings, rng, opts);
    save_model(model, model_out);
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data, const std::string& out,
                const std::string& sf_out) {
    const TrainedModel model = load_model(model_path);
    const auto rows = load_feature_rows(data, model.schema);
    const auto preds = predict(model, rows);
    std::ofstream o(out);
    if (!o) throw DataError("predict: cannot write " + out);
    o << "row,expected_time\n";
    for (size_t i = 0; i < preds.size(); ++i) o << i << "," << fmt(preds[i].expected_time) << "\n";
    if (!sf_out.empty()) {
        std::ofstream s(sf_out);
        if (!s) throw DataError("predict: cannot write " + sf_out);
        s << "row,time,survival\n";
        for (size_t i = 0; i < preds.size(); ++i) {
            for (size_t k = 0; k < preds[i].sf.times.size(); ++k) {
                s << i << "," << fmt(preds[i].sf.times[k]) << "," << fmt(preds[i].sf.values[k]) << "\n";
            }
        }
    }
    return 0;
}

int cmd_generate(const std::string& model_path, const std::string& data, int count,
                 const std::string& out, uint64_t seed) {
    const TrainedModel model = load_model(model_path);
    std::vector<std::vector<double>> rows;
    if (!data.empty()) {
        rows = load_feature_rows(data, model.schema);
    } else {
        if (count < 1) throw CLI::ValidationError("generate: need --data or --count >= 1");
        Rng pick = Rng(seed).split(0x9E7);
        const int n = model.background.size();
        for (int k = 0; k < count; ++k) {
            const int idx = pick.uniform_int(n);
            std::vector<double> row(model.background.features.cols());
            for (int c = 0; c < model.background.features.cols(); ++c) {
                row[static_cast<size_t>(c)] = model.background.features.at(idx, c);
            }
            rows.push_back(std::move(row));
        }
    }
    SurvivalDataset conditioning;
    for (auto& r : rows) conditioning.records.push_back({std::move(r), 0.0, 1});
    Rng rng(seed);
    const SurvivalDataset generated = generate_like(model, conditioning, rng);
    save_csv(generated, model.schema, out);
    return 0;
}

int cmd_trajectory(const std::string& model_path, const std::string& data, const std::string& out_prefix,
                   uint64_t seed) {
    const TrainedModel model = load_model(model_path);
    const auto rows = load_feature_rows(data, model.schema);
    Rng rng(seed);
    for (size_t i = 0; i < rows.size(); ++i) {
        Rng row_rng = rng.split(i);
        const Trajectory traj = compute_trajectory(model, rows[i], row_rng);
        export_trajectory_csv(traj, model.schema, out_prefix + "_row" + std::to_string(i) + ".csv");
        export_trajectory_alpha_json(traj, out_prefix + "_row" + std::to_string(i) + "_alpha.json");
    }
    return 0;
}

int cmd_eval(const std::string& data, const std::string& schema_path, const std::string& config_path,
             int reps, int threads, const std::string& out, uint64_t seed) {
    const DataSchema schema = schema_for(schema_path, data);
    const SurvivalDataset ds = load_csv(data, schema);
    TrainSettings settings = settings_from_file(config_path);
    settings.train.seed = seed;
    Rng rng(seed);
    const CrossValReport report = cross_validate(ds, schema, settings, reps, rng, threads);
    std::ofstream o(out);
    if (!o) throw DataError("eval: cannot write " + out);
    o << report_to_json_string(report) << "\n";
    return 0;
}

int cmd_km_compare(const std::string& original, const std::string& generated,
                   const std::string& schema_path, const std::string& out) {
    const DataSchema schema = schema_for(schema_path, original);
    const SurvivalDataset a = load_csv(original, schema);
    const SurvivalDataset b = load_csv(generated, schema);
    const double dev = km_fidelity(a, b);
    const StepSurvivalFunction sa = kaplan_meier(a);
    const StepSurvivalFunction sb = kaplan_meier(b);
    json j;
    j["max_abs_deviation"] = dev;
    j["original"] = {{"times", sa.times}, {"survival", sa.values}};
    j["generated"] = {{"times", sb.times}, {"survival", sb.values}};
    std::ofstream o(out);
    if (!o) throw DataError("km-compare: cannot write " + out);
    o << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"survtraj: survival trajectories, predictions and data generation"};
    app.require_subcommand(1);

    uint64_t seed = 42;
    std::string config_path;
    bool quiet_flag = false;
    app.add_option("--seed", seed, "root random seed")->capture_default_str();
    app.add_option("--config", config_path, "training config JSON");
    app.add_flag("--quiet", quiet_flag, "suppress warnings");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    std::string synth_kind = "linear", synth_out, synth_schema_out;
    int synth_n = 200;
    double synth_noise = 0.15, synth_censor = 0.2;
    synth->add_option("--kind", synth_kind, "linear | parabolas | circles")->capture_default_str();
    synth->add_option("--n", synth_n, "points per cluster")->capture_default_str();
    synth->add_option("--noise", synth_noise, "coordinate noise")->capture_default_str();
    synth->add_option("--censor-rate", synth_censor, "fraction flagged censored")->capture_default_str();
    synth->add_option("--out", synth_out, "output CSV")->required();
    synth->add_option("--schema-out", synth_schema_out, "also write the schema JSON");

    auto* train = app.add_subcommand("train", "fit a model on a CSV dataset");
    std::string train_data, train_schema, train_model_out, train_log;
    double train_holdout = 0.0;
    train->add_option("--data", train_data, "training CSV")->required();
    train->add_option("--schema", train_schema, "schema JSON (inferred when omitted)");
    train->add_option("--model-out", train_model_out, "model JSON path")->required();
    train->add_option("--log", train_log, "per-epoch JSONL training log");
    train->add_option("--holdout-frac", train_holdout, "fraction held out for the log's C-index")
        ->capture_default_str();

    auto* pred = app.add_subcommand("predict", "expected times and survival curves");
    std::string pred_model, pred_data, pred_out, pred_sf_out;
    pred->add_option("--model", pred_model, "model JSON")->required();
    pred->add_option("--data", pred_data, "input rows CSV")->required();
    pred->add_option("--out", pred_out, "per-row expected-time CSV")->required();
    pred->add_option("--sf-out", pred_sf_out, "long-format survival curves CSV");

    auto* gen = app.add_subcommand("generate", "generate survival triplets");
    std::string gen_model, gen_data, gen_out;
    int gen_count = 0;
    gen->add_option("--model", gen_model, "model JSON")->required();
    gen->add_option("--data", gen_data, "conditioning rows CSV");
    gen->add_option("--count", gen_count, "rows drawn from the training features when --data is absent");
    gen->add_option("--out", gen_out, "output CSV (ingestable schema)")->required();

    auto* traj = app.add_subcommand("trajectory", "prototype trajectories for input rows");
    std::string traj_model, traj_data, traj_out;
    traj->add_option("--model", traj_model, "model JSON")->required();
    traj->add_option("--data", traj_data, "input rows CSV")->required();
    traj->add_option("--out", traj_out, "output prefix (one CSV + alpha JSON per row)")->required();

    auto* ev = app.add_subcommand("eval", "cross-validated C-index report");
    std::string eval_data, eval_schema, eval_out;
    int eval_reps = 20, eval_threads = 2;
    ev->add_option("--data", eval_data, "dataset CSV")->required();
    ev->add_option("--schema", eval_schema, "schema JSON (inferred when omitted)");
    ev->add_option("--reps", eval_reps, "cross-validation repetitions")->capture_default_str();
    ev->add_option("--threads", eval_threads, "worker threads")->capture_default_str();
    ev->add_option("--out", eval_out, "report JSON")->required();

    auto* kmc = app.add_subcommand("km-compare", "Kaplan-Meier fidelity of generated data");
    std::string km_orig, km_gen, km_schema, km_out;
    kmc->add_option("--original", km_orig, "original CSV")->required();
    kmc->add_option("--generated", km_gen, "generated CSV")->required();
    kmc->add_option("--schema", km_schema, "schema JSON (inferred when omitted)");
    kmc->add_option("--out", km_out, "result JSON")->required();

    CLI11_PARSE(app, argc, argv);
    survtraj::set_quiet(quiet_flag);

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_kind, synth_n, synth_noise, synth_censor, seed, synth_out,
                             synth_schema_out);
        }
        if (train->parsed()) {
            return cmd_train(train_data, train_schema, config_path, train_model_out, train_log,
                             train_holdout, seed);
        }
        if (pred->parsed()) return cmd_predict(pred_model, pred_data, pred_out, pred_sf_out);
        if (gen->parsed()) return cmd_generate(gen_model, gen_data, gen_count, gen_out, seed);
        if (traj->parsed()) return cmd_trajectory(traj_model, traj_data, traj_out, seed);
        if (ev->parsed()) {
            return cmd_eval(eval_data, eval_schema, config_path, eval_reps, eval_threads, eval_out, seed);
        }
        if (kmc->parsed()) return cmd_km_compare(km_orig, km_gen, km_schema, km_out);
    } catch (const survtraj::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const survtraj::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const survtraj::ContractError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
