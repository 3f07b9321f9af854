#pragma once

#include <cstdint>
#include <string>

namespace survtraj {

// Training-loop knobs. M = 0 derives the task count from batch_capacity.
struct TrainConfig {
    int r = 64;        // background size per task before the switch
    int M = 0;         // tasks per epoch (0 = cover the epoch pool)
    int m = 48;        // embeddings sampled per input
    int v = 64;        // trajectory grid size
    int epochs = 200;
    int warmup = 100;  // epochs before the background becomes the full training set
    double learning_rate = 1e-3;
    uint64_t seed = 42;
    int batch_capacity = 64;

    // architecture (unspecified upstream, exposed here)
    int d_z = 8;
    int hidden_units = 64;
    int hidden_layers = 2;

    // censoring classifier (trained separately)
    int classifier_hidden = 32;
    int classifier_epochs = 300;
    double classifier_learning_rate = 1e-2;
};

struct LossWeights {
    double gamma1 = 0.5;
    double gamma2 = 2.0;
    double gamma3 = 1.0;
    double gamma4 = 0.05;
    double lambda = 40.0;
};

struct TrainSettings {
    TrainConfig train;
    LossWeights loss;
};

// Flat JSON object keyed by the field names above; unknown keys are rejected.
TrainSettings settings_from_json_string(const std::string& text);
std::string settings_to_json_string(const TrainSettings& s);
TrainSettings load_settings(const std::string& path);

}  // namespace survtraj
