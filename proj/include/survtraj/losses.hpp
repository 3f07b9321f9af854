#pragma once

#include <vector>

#include "survtraj/autodiff.hpp"

namespace survtraj {

// gamma * sum_{i,j} 1[t_j < t_i] sigmoid(pred_i - pred_j) delta_j
//       / sum_{i,j} 1[t_j < t_i] delta_j
// pred is a [B, 1] column. Contributes 0 (with a warning) when no pair is
// admissible.
Value soft_c_index_graph(const Value& pred, const std::vector<double>& times,
                         const std::vector<int>& events, double gamma);
double soft_c_index(const std::vector<double>& pred, const std::vector<double>& times,
                    const std::vector<int>& events, double gamma);

// gamma2 * mean ||x - xhat||^2 + MMD(z, ref); the MMD term is skipped with a
// warning for batches smaller than 2.
Value wae_loss_graph(const Value& x, const Value& xhat, const Value& z_first, const Value& ref,
                     double gamma2, double lambda, int d_z);

// Soft C-index of trajectory expected times against their own grid times; all
// grid points count as events. Contributes 0 when v < 2.
Value trajectory_rank_loss_graph(const Value& expected_times, const std::vector<double>& grid,
                                 double gamma3);

// Normalized softmin of a plain vector.
std::vector<double> softmin_weights(const std::vector<double>& xs);

struct LossParts {
    double beran = 0.0;
    double wae = 0.0;
    double tr1 = 0.0;
    double tr2 = 0.0;
};

// L = -L_Beran + L_WAE - (L_Tr1 + L_Tr2); throws NumericError naming the
// first non-finite part.
double total_loss(const LossParts& parts);
Value total_loss_graph(const Value& beran, const Value& wae, const Value& tr1, const Value& tr2);

}  // namespace survtraj
