#include "survtraj/evaluation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "survtraj/errors.hpp"
#include "survtraj/model.hpp"
#include "survtraj/training.hpp"

namespace survtraj {

namespace {

double run_rep(const SurvivalDataset& raw, const DataSchema& schema, const TrainSettings& settings,
               Rng rep_rng) {
    const int n = static_cast<int>(raw.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rep_rng.shuffle(order);
    const int n_train = (3 * n) / 4;
    if (n_train < 2 || n_train >= n) throw ContractError("cross_validate: dataset too small to split");

    SurvivalDataset train, test;
    for (int i = 0; i < n; ++i) {
        auto& dst = i < n_train ? train : test;
        dst.records.push_back(raw.records[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    }

    DataSchema rep_schema = schema;
    rep_schema.fitted = false;  // statistics come from this repetition's training split
    Trainer trainer(train, rep_schema, settings, rep_rng.split(1));
    TrainedModel model = trainer.fit();

    std::vector<std::vector<double>> rows;
    std::vector<double> t;
    std::vector<int> e;
    for (const auto& rec : test.records) {
        rows.push_back(rec.x);
        t.push_back(rec.time);
        e.push_back(rec.event);
    }
    const auto preds = predict(model, rows);
    std::vector<double> expected(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) expected[i] = preds[i].expected_time;
    const auto ci = c_index_hard(expected, t, e);
    return ci ? *ci : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

CrossValReport cross_validate(const SurvivalDataset& raw, const DataSchema& schema,
                              const TrainSettings& settings, int reps, Rng& rng, int threads) {
    if (reps < 1) throw ContractError("cross_validate: reps must be >= 1");
    CrossValReport report;
    report.reps = reps;
    report.config = settings;
    report.values.assign(static_cast<size_t>(reps), 0.0);

    const int workers = std::max(1, threads);
    std::vector<Rng> streams;
    streams.reserve(static_cast<size_t>(reps));
    for (int r = 0; r < reps; ++r) streams.push_back(rng.split(static_cast<uint64_t>(r)));

    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int r = next.fetch_add(1);
            if (r >= reps) break;
            report.values[static_cast<size_t>(r)] =
                run_rep(raw, schema, settings, streams[static_cast<size_t>(r)]);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::future<void>> futs;
        for (int w = 0; w < workers; ++w) futs.push_back(std::async(std::launch::async, worker));
        for (auto& f : futs) f.get();
    }

    double s = 0.0;
    int k = 0;
    for (double v : report.values) {
        if (std::isnan(v)) {
            ++report.undefined_count;
        } else {
            s += v;
            ++k;
        }
    }
    report.mean = k > 0 ? s / k : std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (double v : report.values) {
        if (!std::isnan(v)) ss += (v - report.mean) * (v - report.mean);
    }
    report.stddev = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
    return report;
}

std::string report_to_json_string(const CrossValReport& report) {
    nlohmann::json j;
    j["reps"] = report.reps;
    auto values = nlohmann::json::array();
    for (double v : report.values) {
        if (std::isnan(v)) {
            values.push_back(nullptr);
        } else {
            values.push_back(v);
        }
    }
    j["values"] = values;
    j["undefined_count"] = report.undefined_count;
    j["mean"] = report.mean;
    j["stddev"] = report.stddev;
    j["config"] = nlohmann::json::parse(settings_to_json_string(report.config));
    return j.dump(2);
}

double km_fidelity(const SurvivalDataset& original, const SurvivalDataset& generated) {
    if (original.empty() || generated.empty()) throw ContractError("km_fidelity: empty dataset");
    const StepSurvivalFunction sa = kaplan_meier(original);
    const StepSurvivalFunction sb = kaplan_meier(generated);
    std::vector<double> grid = sa.times;
    grid.insert(grid.end(), sb.times.begin(), sb.times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double worst = 0.0;
    for (double t : grid) worst = std::max(worst, std::abs(sa.at(t) - sb.at(t)));
    return worst;
}

}  // namespace survtraj
