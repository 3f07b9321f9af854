#pragma once

#include <optional>
#include <vector>

#include "survtraj/rng.hpp"
#include "survtraj/tensor.hpp"

namespace survtraj {

// One right-censored observation: features, time, event flag (1 = observed).
struct SurvivalRecord {
    std::vector<double> x;
    double time = 0.0;
    int event = 1;
};

struct SurvivalDataset {
    std::vector<SurvivalRecord> records;

    size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    // Permutation by ascending time; at ties, events before censorings,
    // then original order (stable).
    std::vector<int> sorted_index() const;

    void validate() const;  // T >= 0, event in {0,1}, finite features
};

// Piecewise-constant survival curve: value[j] holds on [times[j], times[j+1i)),
// with the implicit S = 1 on [0, times[0]). Times are strictly increasing.
struct StepSurvivalFunction {
    std::vector<double> times;
    std::vector<double> values;

    // Right-continuous evaluation at t.
    double at(double t) const;
    void validate() const;
};

// Event-time atoms p[j] at times[j] plus the residual mass beyond the horizon.
struct DiscreteEventDistribution {
    std::vector<double> times;
    std::vector<double> masses;
    double residual = 0.0;

    void validate() const;
};

StepSurvivalFunction kaplan_meier(const SurvivalDataset& ds);
DiscreteEventDistribution km_density(const SurvivalDataset& ds);

DiscreteEventDistribution sf_to_density(const StepSurvivalFunction& sf);
double expected_event_time(const StepSurvivalFunction& sf);

// Gumbel-max draw over the atoms; the residual mass maps to the last time.
double gumbel_sample_time(const DiscreteEventDistribution& dist, Rng& rng);

// softmax(-||query - background_i||^2 / tau) over the background.
std::vector<double> kernel_weights(const std::vector<double>& query,
                                   const std::vector<std::vector<double>>& background, double tau);

// Harrell-style hard C-index; nullopt when no admissible pair exists.
std::optional<double> c_index_hard(const std::vector<double>& pred, const std::vector<double>& time,
                                   const std::vector<int>& event);

}  // namespace survtraj
