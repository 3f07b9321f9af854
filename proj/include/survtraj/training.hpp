#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "survtraj/config.hpp"
#include "survtraj/model.hpp"
#include "survtraj/rng.hpp"

namespace survtraj {

// Adaptive-moment gradient descent over a fixed parameter list.
class Adam {
public:
    explicit Adam(double lr) : lr_(lr) {}

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
    double learning_rate() const { return lr_; }

private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct TaskMetrics {
    double l_beran = 0.0;
    double l_wae = 0.0;
    double l_tr1 = 0.0;
    double l_tr2 = 0.0;
    double total = 0.0;
    int batch = 0;
    bool skipped = false;  // non-finite loss aborted the step
};

struct FitOptions {
    const SurvivalDataset* holdout = nullptr;  // raw rows, standardized internally
    std::ostream* log = nullptr;               // one JSON line per epoch
};

// Owns the standardized training data and the model parameters across the
// epoch/task loop.
class Trainer {
public:
    Trainer(const SurvivalDataset& raw_train, const DataSchema& schema, const TrainSettings& settings,
            Rng rng);

    // One optimizer step on one task: background indices parameterize the
    // estimator, batch indices flow through the model and the losses.
    TaskMetrics run_task(const std::vector<int>& background_idx, const std::vector<int>& batch_idx);

    TrainedModel fit(const FitOptions& opts = {});

    VaeParams& params() { return params_; }
    const DataSchema& fitted_schema() const { return schema_; }
    int size() const { return n_; }
    Rng& rng() { return rng_; }

    // Current-parameter C-index of expected-time predictions for raw rows
    // against the full training background.
    std::optional<double> evaluate_c_index(const SurvivalDataset& raw) const;

    TrainedModel snapshot() const;  // current params + full background + classifier

private:
    struct TaskGraph;
    TaskGraph build_task_graph(const std::vector<int>& background_idx,
                               const std::vector<int>& batch_idx);
    BackgroundSet full_background() const;

    TrainSettings settings_;
    DataSchema schema_;
    SurvivalDataset std_ds_;  // standardized copy
    Tensor features_;         // [n, d], standardized
    Tensor raw_features_;     // [n, d], raw encoded
    std::vector<double> times_;
    std::vector<int> events_;
    int n_ = 0;
    int d_ = 0;
    double t_min_ = 0.0;
    double t_max_ = 1.0;
    std::vector<double> grid_;
    std::vector<double> km_mass_at_;  // KM density mass at each record's time
    VaeParams params_;
    Adam adam_;
    Rng rng_;
};

TrainedModel fit(const SurvivalDataset& raw_train, const DataSchema& schema, const TrainSettings& settings,
                 Rng& rng, const FitOptions& opts = {});

}  // namespace survtraj
