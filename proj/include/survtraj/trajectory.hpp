#pragma once

#include <string>
#include <vector>

#include "survtraj/autodiff.hpp"
#include "survtraj/model.hpp"
#include "survtraj/survival.hpp"
#include "survtraj/vae.hpp"

namespace survtraj {

// v equally spaced points t_k = t_min + k (t_max - t_min) / v, k = 1..v.
struct TimeGrid {
    std::vector<double> points;
};

TimeGrid time_grid(double t_min, double t_max, int v);

// Unnormalized diagonal-normal density exp(-1/2 sum (z-mu)^2 / sigma^2).
double prior_density(const std::vector<double>& z, const std::vector<double>& mu,
                     const std::vector<double>& sigma);

// softmin-smoothed event density at an arbitrary t; the residual mass beyond
// the horizon does not participate.
double smoothed_density(double t, const DiscreteEventDistribution& dist, double eta);

// alpha_i = d_i * prior_i / sum_l d_l * prior_l, uniform when every
// numerator underflows.
std::vector<double> trajectory_weights(const std::vector<double>& smoothed, const std::vector<double>& priors);

struct Trajectory {
    TimeGrid grid;
    Tensor latent_points;   // [v, d_z]
    Tensor feature_points;  // [v, encoded width], de-standardized
    Tensor weights;         // [v, m]
};

// Graph building blocks shared by training and inference.

// beta[e, j] = softmin_j(eta |T_e - t_j|): [n_eval, n_support].
Value smoothing_matrix(const std::vector<double>& eval_times, const std::vector<double>& support_times,
                       const Value& eta);

// exp(-1/2 sum_d (z - mu)^2 / sigma^2) per z row: [m, 1].
Value prior_density_graph(const Value& z_block, const Value& mu_row, const Value& sigma_row);

// Normalize rows to sum 1; rows whose total underflows become uniform.
Value normalize_rows_safe(const Value& numerators);

// alpha = normalize(smoothed * prior^T): [n_eval, m].
Value trajectory_alpha(const Value& smoothed, const Value& prior);

// xi_z rows: alpha [n_eval, m] x z [m, d_z].
Value embedding_trajectory_graph(const Value& alpha, const Value& z_block);

// Full inference path for one raw-space input: sample the bundle, weight it
// over the model grid, decode and de-standardize.
Trajectory compute_trajectory(const TrainedModel& model, const std::vector<double>& raw_x, Rng& rng,
                              int v_override = 0);

// CSV (time + one de-standardized column per encoded feature) plus a JSON
// sidecar holding the alpha matrix.
void export_trajectory_csv(const Trajectory& traj, const DataSchema& schema, const std::string& path);
void export_trajectory_alpha_json(const Trajectory& traj, const std::string& path);

}  // namespace survtraj
