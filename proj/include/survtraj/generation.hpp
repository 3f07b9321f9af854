#pragma once

#include <vector>

#include "survtraj/model.hpp"
#include "survtraj/rng.hpp"

namespace survtraj {

struct GeneratedTriplet {
    std::vector<double> x;  // de-standardized, encoded width
    double time = 0.0;
    int event = 1;
};

// Binary classifier over (standardized features, standardized time) with the
// event flag as label, class-weighted by inverse prevalence. Trained apart
// from the autoencoder; single-class data yields a constant classifier.
CensorClassifier train_censor_classifier(const SurvivalDataset& std_ds, int hidden, int epochs,
                                         double learning_rate, Rng& rng);

int predict_censor_indicator(const CensorClassifier& clf, const std::vector<double>& x_std, double t_raw,
                             Rng& rng);

// Gumbel-max draw from the event distribution of the estimator at mu(x).
double generate_time(const TrainedModel& model, const std::vector<double>& raw_x, Rng& rng);

// Full conditional triplet: trajectory feature vector at the grid point
// nearest the generated time, censor flag from the classifier.
GeneratedTriplet generate_instance(const TrainedModel& model, const std::vector<double>& raw_x, Rng& rng);

// One generated triplet per conditioning row.
SurvivalDataset generate_like(const TrainedModel& model, const SurvivalDataset& conditioning_raw,
                              Rng& rng);

}  // namespace survtraj
