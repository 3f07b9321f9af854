#include "survtraj/vae.hpp"

#include <cmath>

#include "survtraj/beran.hpp"
#include "survtraj/errors.hpp"

namespace survtraj {

namespace {

constexpr double kSigmaFloor = 1e-6;

Value mlp_forward(const std::vector<Value>& ws, const std::vector<Value>& bs, const Value& x,
                  bool activate_last) {
    Value h = x;
    for (size_t i = 0; i < ws.size(); ++i) {
        h = affine(h, ws[i], bs[i]);
        if (activate_last || i + 1 < ws.size()) h = tanh_act(h);
    }
    return h;
}

Tensor to_matrix(const std::vector<double>& v, int cols) {
    Tensor t({1, cols});
    for (int i = 0; i < cols; ++i) t.at(0, i) = v[static_cast<size_t>(i)];
    return t;
}

std::vector<double> first_row(const Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.cols());
}

}  // namespace

Mlp make_mlp(const std::vector<int>& dims, Rng& rng) {
    Mlp mlp;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Linear l;
        l.w = Tensor({dims[i], dims[i + 1]});
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
        for (size_t k = 0; k < l.w.size(); ++k) l.w[k] = rng.uniform(-limit, limit);
        l.b = Tensor({dims[i + 1]});
        mlp.layers.push_back(std::move(l));
    }
    return mlp;
}

VaeParams init_vae(const VaeConfig& cfg, Rng& rng) {
    if (cfg.input_dim <= 0) throw ContractError("init_vae: input_dim must be set");
    VaeParams p;
    p.cfg = cfg;
    std::vector<int> trunk_dims{cfg.input_dim};
    for (int i = 0; i < cfg.hidden_layers; ++i) trunk_dims.push_back(cfg.hidden_units);
    p.trunk = make_mlp(trunk_dims, rng);

    Mlp heads = make_mlp({cfg.hidden_units, cfg.d_z}, rng);
    p.mu_head = heads.layers[0];
    heads = make_mlp({cfg.hidden_units, cfg.d_z}, rng);
    p.sigma_head = heads.layers[0];

    std::vector<int> dec_dims{cfg.d_z};
    for (int i = 0; i < cfg.hidden_layers; ++i) dec_dims.push_back(cfg.hidden_units);
    dec_dims.push_back(cfg.input_dim);
    p.decoder = make_mlp(dec_dims, rng);
    return p;
}

std::vector<Value> VaeLeaves::all() const {
    std::vector<Value> out;
    for (size_t i = 0; i < trunk_w.size(); ++i) {
        out.push_back(trunk_w[i]);
        out.push_back(trunk_b[i]);
    }
    out.push_back(mu_w);
    out.push_back(mu_b);
    out.push_back(sigma_w);
    out.push_back(sigma_b);
    for (size_t i = 0; i < dec_w.size(); ++i) {
        out.push_back(dec_w[i]);
        out.push_back(dec_b[i]);
    }
    out.push_back(tau_log);
    out.push_back(eta);
    return out;
}

VaeLeaves make_leaves(const VaeParams& params, bool requires_grad) {
    VaeLeaves l;
    for (const auto& layer : params.trunk.layers) {
        l.trunk_w.push_back(Value::leaf(layer.w, requires_grad));
        l.trunk_b.push_back(Value::leaf(layer.b, requires_grad));
    }
    l.mu_w = Value::leaf(params.mu_head.w, requires_grad);
    l.mu_b = Value::leaf(params.mu_head.b, requires_grad);
    l.sigma_w = Value::leaf(params.sigma_head.w, requires_grad);
    l.sigma_b = Value::leaf(params.sigma_head.b, requires_grad);
    for (const auto& layer : params.decoder.layers) {
        l.dec_w.push_back(Value::leaf(layer.w, requires_grad));
        l.dec_b.push_back(Value::leaf(layer.b, requires_grad));
    }
    l.tau_log = Value::leaf(params.tau_log, requires_grad);
    l.eta = Value::leaf(params.eta, requires_grad);
    l.tau = vexp(l.tau_log);
    return l;
}

EncodeOut encode_graph(const VaeLeaves& leaves, const Value& x) {
    Value h = mlp_forward(leaves.trunk_w, leaves.trunk_b, x, true);
    EncodeOut out;
    out.mu = affine(h, leaves.mu_w, leaves.mu_b);
    out.sigma = add_scalar(softplus(affine(h, leaves.sigma_w, leaves.sigma_b)), kSigmaFloor);
    return out;
}

Value decode_graph(const VaeLeaves& leaves, const Value& z) {
    return mlp_forward(leaves.dec_w, leaves.dec_b, z, false);
}

std::pair<std::vector<double>, std::vector<double>> encode(const VaeParams& params,
                                                           const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != params.cfg.input_dim) {
        throw ContractError("encode: input dimension " + std::to_string(x.size()) + " != " +
                            std::to_string(params.cfg.input_dim));
    }
    VaeLeaves l = make_leaves(params, false);
    EncodeOut out = encode_graph(l, Value::constant(to_matrix(x, params.cfg.input_dim)));
    return {first_row(out.mu.val()), first_row(out.sigma.val())};
}

std::vector<double> decode(const VaeParams& params, const std::vector<double>& z) {
    if (static_cast<int>(z.size()) != params.cfg.d_z) {
        throw ContractError("decode: latent dimension " + std::to_string(z.size()) + " != " +
                            std::to_string(params.cfg.d_z));
    }
    VaeLeaves l = make_leaves(params, false);
    return first_row(decode_graph(l, Value::constant(to_matrix(z, params.cfg.d_z))).val());
}

LatentBundle sample_embeddings(const std::vector<double>& mu, const std::vector<double>& sigma, int m,
                               Rng& rng) {
    if (m < 1) throw ContractError("sample_embeddings: m must be >= 1");
    const int dz = static_cast<int>(mu.size());
    LatentBundle b;
    b.mu = mu;
    b.sigma = sigma;
    b.z = Tensor({m, dz});
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < dz; ++k) {
            b.z.at(i, k) = mu[static_cast<size_t>(k)] + rng.normal() * sigma[static_cast<size_t>(k)];
        }
    }
    return b;
}

double imq_kernel(const std::vector<double>& a, const std::vector<double>& b, int d_z) {
    if (a.size() != b.size()) throw ContractError("imq_kernel: length mismatch");
    const double c = 2.0 * d_z;
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return c / (c + d2);
}

Value imq_kernel_matrix(const Value& a, const Value& b, int d_z) {
    const double c = 2.0 * d_z;
    Value d2 = pairwise_sqdist(a, b);
    return mul_scalar(recip(add_scalar(d2, c)), c);
}

Value mmd_penalty_graph(const Value& z, const Value& ref, double lambda, int d_z) {
    const int n = z.val().shape()[0];
    if (n < 2 || ref.val().shape()[0] != n) {
        throw ContractError("mmd_penalty: batches must have equal size n >= 2");
    }
    Value kzz = imq_kernel_matrix(z, z, d_z);
    Value krr = imq_kernel_matrix(ref, ref, d_z);
    Value kzr = imq_kernel_matrix(z, ref, d_z);
    // Diagonals are exactly 1; subtract them instead of masking.
    const double offd = lambda / (static_cast<double>(n) * (n - 1));
    Value within = add(add_scalar(sum(kzz), -static_cast<double>(n)),
                       add_scalar(sum(krr), -static_cast<double>(n)));
    Value cross = mul_scalar(sum(kzr), 2.0 * lambda / (static_cast<double>(n) * n));
    return sub(mul_scalar(within, offd), cross);
}

double mmd_penalty(const Tensor& z, const Tensor& ref, double lambda, int d_z) {
    return mmd_penalty_graph(Value::constant(z), Value::constant(ref), lambda, d_z).val()[0];
}

}  // namespace survtraj
