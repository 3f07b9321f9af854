#pragma once

#include <string>
#include <vector>

#include "survtraj/config.hpp"
#include "survtraj/datasets.hpp"
#include "survtraj/survival.hpp"
#include "survtraj/vae.hpp"

namespace survtraj {

// Embedded training set backing the estimator at inference time, already
// sorted by ascending time (events before censorings at ties). Raw encoded
// feature rows ride along as conditioning inputs for unconditional
// generation.
struct BackgroundSet {
    Tensor embeddings;  // [n, d_z]
    Tensor features;    // [n, encoded width], raw space
    std::vector<double> times;
    std::vector<int> events;

    int size() const { return static_cast<int>(times.size()); }
};

// Small feed-forward net over (encoded standardized features, standardized
// time) predicting the probability of an observed event. Training uses
// inverse-prevalence class weights; logit_offset undoes the implied prior
// shift so the emitted probabilities stay calibrated.
struct CensorClassifier {
    Mlp net;
    bool constant = false;  // single-class training data
    double constant_p = 1.0;
    double time_mean = 0.0;
    double time_std = 1.0;
    double logit_offset = 0.0;  // log(w_pos / w_neg)
    int input_dim = 0;
};

struct TrainedModel {
    VaeParams vae;
    DataSchema schema;  // fitted standardization statistics
    BackgroundSet background;
    CensorClassifier censor;
    TrainSettings settings;
    double t_min = 0.0;
    double t_max = 1.0;
};

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);
std::string model_to_json_string(const TrainedModel& model);
TrainedModel model_from_json_string(const std::string& text);

struct Prediction {
    double expected_time = 0.0;
    StepSurvivalFunction sf;
};

// Raw-space rows in; standardization and encoding happen inside.
std::vector<Prediction> predict(const TrainedModel& model,
                                const std::vector<std::vector<double>>& raw_rows);

// Per-row encoder means over standardized inputs: [rows, d_z].
Tensor encode_rows(const VaeParams& vae, const Tensor& std_rows);

double censor_probability(const CensorClassifier& clf, const std::vector<double>& x_std, double t_raw);

}  // namespace survtraj
