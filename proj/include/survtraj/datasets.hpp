#pragma once

#include <string>
#include <vector>

#include "survtraj/rng.hpp"
#include "survtraj/survival.hpp"

namespace survtraj {

enum class FeatureKind { continuous, categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::vector<std::string> categories;  // categorical only
};

// Column layout plus (once fitted) the standardization statistics over the
// encoded columns. Categorical features are one-hot encoded and pass through
// standardization unchanged.
struct DataSchema {
    std::vector<FeatureSpec> features;
    std::string time_name = "time";
    std::string event_name = "event";

    std::vector<double> mean;    // encoded width, valid when fitted
    std::vector<double> stddev;  // encoded width, valid when fitted
    bool fitted = false;

    int encoded_width() const;
    std::vector<std::string> encoded_names() const;
    // 1 for columns that are z-scored, 0 for one-hot passthrough.
    std::vector<int> continuous_mask() const;
};

DataSchema load_schema(const std::string& path);
void save_schema(const DataSchema& schema, const std::string& path);
std::string schema_to_json_string(const DataSchema& schema);
DataSchema schema_from_json_string(const std::string& text);

// Header-driven inference: every non time/event column becomes continuous.
DataSchema infer_schema_from_csv(const std::string& path, const std::string& time_name = "time",
                                 const std::string& event_name = "event");

SurvivalDataset load_csv(const std::string& path, const DataSchema& schema);
void save_csv(const SurvivalDataset& ds, const DataSchema& schema, const std::string& path);

// Statistics come from the training split only; constant continuous columns
// are rejected.
void fit_standardization(DataSchema& schema, const SurvivalDataset& train);
std::vector<double> standardize_row(const std::vector<double>& x, const DataSchema& schema);
std::vector<double> destandardize_row(const std::vector<double>& x, const DataSchema& schema);
SurvivalDataset standardize(const SurvivalDataset& ds, const DataSchema& schema);

// Synthetic generators. Censoring: `censor_rate` of the records get delta=0
// and their time shrunk by a Uniform(0.5, 1) factor.
SurvivalDataset synth_linear(int n_per_cluster, double noise, Rng& rng, double censor_rate = 0.2);
SurvivalDataset synth_two_parabolas(int n_per_cluster, double noise, Rng& rng, double censor_rate = 0.2);
SurvivalDataset synth_two_circles(int n_per_cluster, double noise, Rng& rng, double censor_rate = 0.2);

// x1, x2 continuous + time/event columns, matching the generators above.
DataSchema synth_schema();

}  // namespace survtraj
