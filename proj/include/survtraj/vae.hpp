#pragma once

#include <vector>

#include "survtraj/autodiff.hpp"
#include "survtraj/rng.hpp"

namespace survtraj {

struct Linear {
    Tensor w;  // [in, out]
    Tensor b;  // [out]
};

// Dense net, tanh between layers; the final layer is linear unless asked.
struct Mlp {
    std::vector<Linear> layers;
};

Mlp make_mlp(const std::vector<int>& dims, Rng& rng);  // Glorot-uniform weights, zero biases

struct VaeConfig {
    int input_dim = 0;
    int d_z = 8;
    int hidden_units = 64;
    int hidden_layers = 2;
};

// Encoder trunk + (mu, sigma) heads and the mirrored decoder, plus the two
// trained scalars: tau = exp(tau_log) and the smoothing sharpness eta.
struct VaeParams {
    VaeConfig cfg;
    Mlp trunk;
    Linear mu_head;
    Linear sigma_head;
    Mlp decoder;
    Tensor tau_log = Tensor::scalar(0.0);
    Tensor eta = Tensor::scalar(1.0);

    template <typename F>
    void for_each(F&& fn) {
        for (auto& l : trunk.layers) {
            fn(l.w);
            fn(l.b);
        }
        fn(mu_head.w);
        fn(mu_head.b);
        fn(sigma_head.w);
        fn(sigma_head.b);
        for (auto& l : decoder.layers) {
            fn(l.w);
            fn(l.b);
        }
        fn(tau_log);
        fn(eta);
    }

    double tau() const { return std::exp(tau_log[0]); }
};

VaeParams init_vae(const VaeConfig& cfg, Rng& rng);

// Graph mirror of VaeParams: one leaf per tensor, in for_each order.
struct VaeLeaves {
    std::vector<Value> trunk_w, trunk_b;
    Value mu_w, mu_b, sigma_w, sigma_b;
    std::vector<Value> dec_w, dec_b;
    Value tau_log, eta;
    Value tau;  // exp(tau_log), shared by every estimator in the graph

    std::vector<Value> all() const;  // same order as VaeParams::for_each
};

VaeLeaves make_leaves(const VaeParams& params, bool requires_grad);

struct EncodeOut {
    Value mu;     // [B, d_z]
    Value sigma;  // [B, d_z], softplus(raw) + 1e-6
};

EncodeOut encode_graph(const VaeLeaves& leaves, const Value& x);
Value decode_graph(const VaeLeaves& leaves, const Value& z);

// Plain single-input helpers.
struct LatentBundle {
    std::vector<double> mu;
    std::vector<double> sigma;
    Tensor z;  // [m, d_z]
};

std::pair<std::vector<double>, std::vector<double>> encode(const VaeParams& params,
                                                           const std::vector<double>& x);
std::vector<double> decode(const VaeParams& params, const std::vector<double>& z);
LatentBundle sample_embeddings(const std::vector<double>& mu, const std::vector<double>& sigma, int m,
                               Rng& rng);

// Inverse multiquadric kernel C/(C + ||a-b||^2) with C = 2 * d_z.
double imq_kernel(const std::vector<double>& a, const std::vector<double>& b, int d_z);

// K(a_i, b_j) for row blocks: [na, nb].
Value imq_kernel_matrix(const Value& a, const Value& b, int d_z);

// lambda/(n(n-1)) sum_{l != j} K(z_l, z_j) + same for the reference batch
// - 2 lambda/n^2 sum K(z_l, ref_j). May be negative.
Value mmd_penalty_graph(const Value& z, const Value& ref, double lambda, int d_z);
double mmd_penalty(const Tensor& z, const Tensor& ref, double lambda, int d_z);

}  // namespace survtraj
