#pragma once

#include <string>
#include <vector>

#include "survtraj/config.hpp"
#include "survtraj/datasets.hpp"
#include "survtraj/rng.hpp"

namespace survtraj {

struct CrossValReport {
    int reps = 0;
    std::vector<double> values;  // NaN marks a repetition with undefined C-index
    int undefined_count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    TrainSettings config;
};

// Per repetition: random 75/25 split, fit on the training part, hard C-index
// of expected-time predictions on the test part. Undefined repetitions are
// recorded and excluded from the aggregates. Repetitions run on `threads`
// workers with per-rep derived streams; the report does not depend on the
// scheduling.
CrossValReport cross_validate(const SurvivalDataset& raw, const DataSchema& schema,
                              const TrainSettings& settings, int reps, Rng& rng, int threads = 1);

std::string report_to_json_string(const CrossValReport& report);

// sup_t |S_a(t) - S_b(t)| of the two Kaplan-Meier curves over the merged
// step grid.
double km_fidelity(const SurvivalDataset& original, const SurvivalDataset& generated);

}  // namespace survtraj
