#include "survtraj/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "survtraj/beran.hpp"
#include "survtraj/errors.hpp"

namespace survtraj {

namespace {
constexpr double kUnderflow = 1e-280;
}

TimeGrid time_grid(double t_min, double t_max, int v) {
    if (!(t_max > t_min)) throw ContractError("time_grid: t_max must exceed t_min");
    if (v < 1) throw ContractError("time_grid: v must be >= 1");
    TimeGrid g;
    g.points.resize(static_cast<size_t>(v));
    const double step = (t_max - t_min) / v;
    for (int k = 1; k <= v; ++k) g.points[static_cast<size_t>(k - 1)] = t_min + step * k;
    g.points.back() = t_max;  // pin the endpoint against accumulated rounding
    return g;
}

double prior_density(const std::vector<double>& z, const std::vector<double>& mu,
                     const std::vector<double>& sigma) {
    if (z.size() != mu.size() || z.size() != sigma.size()) {
        throw ContractError("prior_density: dimension mismatch");
    }
    double q = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        if (!(sigma[i] > 0.0)) throw ContractError("prior_density: sigma must be positive");
        const double d = (z[i] - mu[i]) / sigma[i];
        q += d * d;
    }
    return std::exp(-0.5 * q);
}

double smoothed_density(double t, const DiscreteEventDistribution& dist, double eta) {
    if (dist.times.empty()) throw ContractError("smoothed_density: empty distribution");
    const size_t n = dist.times.size();
    std::vector<double> logits(n);
    for (size_t j = 0; j < n; ++j) logits[j] = -eta * std::abs(t - dist.times[j]);
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - m);
        s += l;
    }
    double out = 0.0;
    for (size_t j = 0; j < n; ++j) out += logits[j] / s * dist.masses[j];
    return out;
}

std::vector<double> trajectory_weights(const std::vector<double>& smoothed,
                                       const std::vector<double>& priors) {
    if (smoothed.size() != priors.size() || smoothed.empty()) {
        throw ContractError("trajectory_weights: bad inputs");
    }
    const size_t m = smoothed.size();
    std::vector<double> alpha(m);
    double total = 0.0;
    for (size_t i = 0; i < m; ++i) {
        alpha[i] = smoothed[i] * priors[i];
        total += alpha[i];
    }
    if (total < kUnderflow) {
        std::fill(alpha.begin(), alpha.end(), 1.0 / static_cast<double>(m));
        return alpha;
    }
    for (auto& a : alpha) a /= total;
    return alpha;
}

Value smoothing_matrix(const std::vector<double>& eval_times, const std::vector<double>& support_times,
                       const Value& eta) {
    const int ne = static_cast<int>(eval_times.size());
    const int ns = static_cast<int>(support_times.size());
    Tensor dist({ne, ns});
    for (int i = 0; i < ne; ++i) {
        for (int j = 0; j < ns; ++j) {
            dist.at(i, j) = std::abs(eval_times[static_cast<size_t>(i)] - support_times[static_cast<size_t>(j)]);
        }
    }
    return softmin(mul(broadcast_to(eta, {ne, ns}), Value::constant(dist)));
}

Value prior_density_graph(const Value& z_block, const Value& mu_row, const Value& sigma_row) {
    const auto shape = z_block.val().shape();
    Value centred = sub(z_block, broadcast_to(mu_row, shape));
    Value inv_var = recip(mul(sigma_row, sigma_row));
    Value quad = rowsum(mul(mul(centred, centred), broadcast_to(inv_var, shape)));
    return vexp(mul_scalar(quad, -0.5));
}

Value normalize_rows_safe(const Value& numerators) {
    Value num = numerators;
    Value rs = rowsum(num);
    const Tensor& rsv = rs.val();
    bool degenerate = false;
    for (size_t i = 0; i < rsv.size(); ++i) {
        if (rsv[i] < kUnderflow) {
            degenerate = true;
            break;
        }
    }
    if (degenerate) {
        // Add 1 to every entry of a dead row; it normalizes to uniform.
        Tensor mask(num.val().shape());
        const int cols = num.val().shape()[1];
        for (int i = 0; i < num.val().shape()[0]; ++i) {
            if (rsv[static_cast<size_t>(i)] < kUnderflow) {
                for (int j = 0; j < cols; ++j) mask.at(i, j) = 1.0;
            }
        }
        num = add(num, Value::constant(mask));
        rs = rowsum(num);
    }
    return mul(num, broadcast_to(recip(rs), num.val().shape()));
}

Value trajectory_alpha(const Value& smoothed, const Value& prior) {
    const auto shape = smoothed.val().shape();
    Value num = mul(smoothed, broadcast_to(transpose(prior), shape));
    return normalize_rows_safe(num);
}

Value embedding_trajectory_graph(const Value& alpha, const Value& z_block) {
    return matmul(alpha, z_block);
}

Trajectory compute_trajectory(const TrainedModel& model, const std::vector<double>& raw_x, Rng& rng,
                              int v_override) {
    if (model.background.size() == 0) throw ContractError("compute_trajectory: model has no background");
    const int v = v_override > 0 ? v_override : model.settings.train.v;
    const int m = model.settings.train.m;

    const auto x_std = standardize_row(raw_x, model.schema);
    const auto [mu, sigma] = encode(model.vae, x_std);
    const LatentBundle bundle = sample_embeddings(mu, sigma, m, rng);

    Trajectory traj;
    traj.grid = time_grid(model.t_min, model.t_max, v);

    // Smoothed per-embedding event densities via the estimator backed by the
    // stored background.
    Value z = Value::constant(bundle.z);
    Value tau = Value::constant(model.vae.tau());
    Value weights = kernel_weight_matrix(z, Value::constant(model.background.embeddings), tau);
    Value curve = beran_curve(weights, model.background.events);
    Value masses = beran_masses(curve);  // [m, nb]
    Value beta = smoothing_matrix(traj.grid.points, model.background.times,
                                  Value::constant(model.vae.eta[0]));  // [v, nb]
    Value smoothed = matmul(beta, transpose(masses));                  // [v, m]

    const int dz = model.vae.cfg.d_z;
    Tensor mu_row({1, dz}), sigma_row({1, dz});
    for (int k = 0; k < dz; ++k) {
        mu_row.at(0, k) = mu[static_cast<size_t>(k)];
        sigma_row.at(0, k) = sigma[static_cast<size_t>(k)];
    }
    Value prior = prior_density_graph(z, Value::constant(mu_row), Value::constant(sigma_row));
    Value alpha = trajectory_alpha(smoothed, prior);
    Value xi_z = embedding_trajectory_graph(alpha, z);

    VaeLeaves leaves = make_leaves(model.vae, false);
    Value xi_x = decode_graph(leaves, xi_z);

    traj.weights = alpha.val();
    traj.latent_points = xi_z.val();
    traj.feature_points = Tensor({v, model.schema.encoded_width()});
    for (int k = 0; k < v; ++k) {
        std::vector<double> row(xi_x.val().data() + static_cast<size_t>(k) * xi_x.val().cols(),
                                xi_x.val().data() + static_cast<size_t>(k + 1) * xi_x.val().cols());
        const auto raw = destandardize_row(row, model.schema);
        for (int c = 0; c < static_cast<int>(raw.size()); ++c) traj.feature_points.at(k, c) = raw[static_cast<size_t>(c)];
    }
    return traj;
}

void export_trajectory_csv(const Trajectory& traj, const DataSchema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("trajectory: cannot write " + path);
    out << "time";
    for (const auto& name : schema.encoded_names()) out << "," << name;
    out << "\n";
    char buf[40];
    for (int k = 0; k < static_cast<int>(traj.grid.points.size()); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", traj.grid.points[static_cast<size_t>(k)]);
        out << buf;
        for (int c = 0; c < traj.feature_points.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.feature_points.at(k, c));
            out << "," << buf;
        }
        out << "\n";
    }
}

void export_trajectory_alpha_json(const Trajectory& traj, const std::string& path) {
    nlohmann::json j;
    j["grid"] = traj.grid.points;
    auto rows = nlohmann::json::array();
    for (int k = 0; k < traj.weights.rows(); ++k) {
        std::vector<double> row(traj.weights.data() + static_cast<size_t>(k) * traj.weights.cols(),
                                traj.weights.data() + static_cast<size_t>(k + 1) * traj.weights.cols());
        rows.push_back(row);
    }
    j["alpha"] = rows;
    std::ofstream out(path);
    if (!out) throw DataError("trajectory: cannot write " + path);
    out << j.dump() << "\n";
}

}  // namespace survtraj
