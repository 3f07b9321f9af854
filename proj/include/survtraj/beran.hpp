#pragma once

#include <vector>

#include "survtraj/autodiff.hpp"
#include "survtraj/survival.hpp"

namespace survtraj {

// Background item for the Beran estimator outside of training.
struct BeranItem {
    std::vector<double> embedding;
    double time = 0.0;
    int event = 1;
};

// Graph pieces of the kernel-weighted product-limit estimator. Queries and
// background embeddings are graph values, so gradients reach the encoder,
// the embeddings and the temperature. Background items must already be in
// ascending-time order (events before censorings at ties).

// max(||a_i - b_j||^2, 0) for all pairs: [na, dz] x [nb, dz] -> [na, nb].
Value pairwise_sqdist(const Value& a, const Value& b);

// Row-wise softmax(-dist^2 / tau): [nq, nb]; rows sum to 1.
Value kernel_weight_matrix(const Value& queries, const Value& background, const Value& tau);

// Survival values at every background item time: S(t_j | query), [nq, nb].
// The running-sum denominator is clamped below at 1e-8 and each factor into
// [0, 1]; censored items contribute a unit factor.
Value beran_curve(const Value& weights, const std::vector<int>& events_sorted);

// T_hat = t_1 + sum_{i>=1} S_i (t_{i+1} - t_i): [nq, 1].
Value beran_expected(const Value& curve, const std::vector<double>& times_sorted);

// Event-time masses p_j = S_{j-1} - S_j: [nq, nb]. The residual beyond the
// horizon is the last curve column.
Value beran_masses(const Value& curve);

// Collapse an itemized curve row to a step SF on distinct times.
StepSurvivalFunction make_step_sf(const std::vector<double>& item_times,
                                  const std::vector<double>& item_values);

// Convenience single-query estimator over unsorted background items.
StepSurvivalFunction beran_sf(const std::vector<double>& query, const std::vector<BeranItem>& background,
                              double tau);

}  // namespace survtraj
