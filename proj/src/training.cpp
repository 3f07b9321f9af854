#include "survtraj/training.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "survtraj/beran.hpp"
#include "survtraj/errors.hpp"
#include "survtraj/generation.hpp"
#include "survtraj/logging.hpp"
#include "survtraj/losses.hpp"
#include "survtraj/trajectory.hpp"

namespace survtraj {

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    if (params.size() != grads.size()) throw ContractError("Adam::step: params/grads mismatch");
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i] = Tensor(params[i]->shape());
            v_[i] = Tensor(params[i]->shape());
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const bool empty_grad = grads[i].size() != p.size();  // unreached leaf: zero gradient
        for (size_t k = 0; k < p.size(); ++k) {
            const double g = empty_grad ? 0.0 : grads[i][k];
            m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
            v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
            p[k] -= lr_ * (m_[i][k] / bc1) / (std::sqrt(v_[i][k] / bc2) + eps_);
        }
    }
}

namespace {

// Block-structured selection constants for a batch of B inputs with m
// embeddings each: rep maps rows to their instance, block_sum is its
// transpose, first picks each instance's first embedding.
struct BlockMaps {
    Value rep;        // [B*m, B]
    Value block_sum;  // [B, B*m]
    Value first;      // [B, B*m]
};

BlockMaps make_block_maps(int b, int m) {
    Tensor rep({b * m, b}), bsum({b, b * m}), first({b, b * m});
    for (int i = 0; i < b; ++i) {
        for (int k = 0; k < m; ++k) {
            rep.at(i * m + k, i) = 1.0;
            bsum.at(i, i * m + k) = 1.0;
        }
        first.at(i, i * m) = 1.0;
    }
    return {Value::constant(std::move(rep)), Value::constant(std::move(bsum)),
            Value::constant(std::move(first))};
}

std::vector<int> sort_by_time(const std::vector<int>& idx, const std::vector<double>& times,
                              const std::vector<int>& events) {
    std::vector<int> out = idx;
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
        if (times[static_cast<size_t>(a)] != times[static_cast<size_t>(b)]) {
            return times[static_cast<size_t>(a)] < times[static_cast<size_t>(b)];
        }
        return events[static_cast<size_t>(a)] > events[static_cast<size_t>(b)];
    });
    return out;
}

Tensor gather_rows(const Tensor& src, const std::vector<int>& idx) {
    Tensor out({static_cast<int>(idx.size()), src.cols()});
    for (size_t i = 0; i < idx.size(); ++i) {
        for (int c = 0; c < src.cols(); ++c) out.at(static_cast<int>(i), c) = src.at(idx[i], c);
    }
    return out;
}

}  // namespace

Trainer::Trainer(const SurvivalDataset& raw_train, const DataSchema& schema, const TrainSettings& settings,
                 Rng rng)
    : settings_(settings), schema_(schema), adam_(settings.train.learning_rate), rng_(rng) {
    if (raw_train.empty()) throw ContractError("Trainer: empty training set");
    raw_train.validate();
    if (!schema_.fitted) fit_standardization(schema_, raw_train);
    std_ds_ = standardize(raw_train, schema_);

    n_ = static_cast<int>(std_ds_.size());
    d_ = schema_.encoded_width();
    features_ = Tensor({n_, d_});
    raw_features_ = Tensor({n_, d_});
    times_.resize(static_cast<size_t>(n_));
    events_.resize(static_cast<size_t>(n_));
    for (int i = 0; i < n_; ++i) {
        const auto& rec = std_ds_.records[static_cast<size_t>(i)];
        const auto& raw = raw_train.records[static_cast<size_t>(i)];
        for (int c = 0; c < d_; ++c) {
            features_.at(i, c) = rec.x[static_cast<size_t>(c)];
            raw_features_.at(i, c) = raw.x[static_cast<size_t>(c)];
        }
        times_[static_cast<size_t>(i)] = rec.time;
        events_[static_cast<size_t>(i)] = rec.event;
    }
    t_min_ = *std::min_element(times_.begin(), times_.end());
    t_max_ = *std::max_element(times_.begin(), times_.end());
    if (t_max_ > t_min_) {
        grid_ = time_grid(t_min_, t_max_, settings_.train.v).points;
    } else {
        grid_ = {t_max_};  // degenerate horizon
    }

    // KM density over the whole training set; constants in L_Tr2.
    const auto km = km_density(std_ds_);
    km_mass_at_.assign(static_cast<size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        const auto it = std::lower_bound(km.times.begin(), km.times.end(), times_[static_cast<size_t>(i)]);
        if (it != km.times.end() && *it == times_[static_cast<size_t>(i)]) {
            km_mass_at_[static_cast<size_t>(i)] =
                km.masses[static_cast<size_t>(std::distance(km.times.begin(), it))];
        }
    }

    VaeConfig vc;
    vc.input_dim = d_;
    vc.d_z = settings_.train.d_z;
    vc.hidden_units = settings_.train.hidden_units;
    vc.hidden_layers = settings_.train.hidden_layers;
    Rng init_rng = rng_.split(0x1217);
    params_ = init_vae(vc, init_rng);
}

struct Trainer::TaskGraph {
    VaeLeaves leaves;
    Value l_beran, l_wae, l_tr1, l_tr2, total;
};

Trainer::TaskGraph Trainer::build_task_graph(const std::vector<int>& background_idx,
                                             const std::vector<int>& batch_idx) {
    const auto& tc = settings_.train;
    const auto& lw = settings_.loss;
    const int b = static_cast<int>(batch_idx.size());
    const int m = tc.m;
    const int dz = tc.d_z;
    if (b < 1) throw ContractError("run_task: empty batch");
    if (background_idx.empty()) throw ContractError("run_task: empty background");

    const auto bg_sorted = sort_by_time(background_idx, times_, events_);
    const int nb = static_cast<int>(bg_sorted.size());
    std::vector<double> bg_times(static_cast<size_t>(nb));
    std::vector<int> bg_events(static_cast<size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        bg_times[static_cast<size_t>(i)] = times_[static_cast<size_t>(bg_sorted[static_cast<size_t>(i)])];
        bg_events[static_cast<size_t>(i)] = events_[static_cast<size_t>(bg_sorted[static_cast<size_t>(i)])];
    }

    std::vector<double> batch_times(static_cast<size_t>(b));
    std::vector<int> batch_events(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        batch_times[static_cast<size_t>(i)] = times_[static_cast<size_t>(batch_idx[static_cast<size_t>(i)])];
        batch_events[static_cast<size_t>(i)] = events_[static_cast<size_t>(batch_idx[static_cast<size_t>(i)])];
    }

    TaskGraph g{make_leaves(params_, true), {}, {}, {}, {}, {}};
    const Value x_bg = Value::constant(gather_rows(features_, bg_sorted));
    const Value x_batch = Value::constant(gather_rows(features_, batch_idx));
    Value mu_bg = encode_graph(g.leaves, x_bg).mu;
    EncodeOut enc = encode_graph(g.leaves, x_batch);

    // Estimator 1: expected event times of the inputs.
    Value w1 = kernel_weight_matrix(enc.mu, mu_bg, g.leaves.tau);
    Value s1 = beran_curve(w1, bg_events);
    Value that1 = beran_expected(s1, bg_times);
    g.l_beran = soft_c_index_graph(that1, batch_times, batch_events, lw.gamma1);

    // m reparameterized embeddings per input.
    const BlockMaps maps = make_block_maps(b, m);
    Tensor eps({b * m, dz});
    for (size_t i = 0; i < eps.size(); ++i) eps[i] = rng_.normal();
    Tensor ref_draws({b, dz});
    for (size_t i = 0; i < ref_draws.size(); ++i) ref_draws[i] = rng_.normal();

    Value rep_mu = matmul(maps.rep, enc.mu);
    Value rep_sigma = matmul(maps.rep, enc.sigma);
    Value z = add(rep_mu, mul(Value::constant(std::move(eps)), rep_sigma));

    // Estimator 2: per-embedding event masses.
    Value w2 = kernel_weight_matrix(z, mu_bg, g.leaves.tau);
    Value s2 = beran_curve(w2, bg_events);
    Value p = beran_masses(s2);  // [b*m, nb]

    // Unnormalized prior of each embedding under its own (mu, sigma).
    Value centred = sub(z, rep_mu);
    Value inv_var = matmul(maps.rep, recip(mul(enc.sigma, enc.sigma)));
    Value prior = vexp(mul_scalar(rowsum(mul(mul(centred, centred), inv_var)), -0.5));  // [b*m, 1]

    // Grid-time smoothing shared by every instance.
    Value beta_grid = smoothing_matrix(grid_, bg_times, g.leaves.eta);  // [v, nb]
    Value smoothed_grid = matmul(beta_grid, transpose(p));              // [v, b*m]

    const int v = static_cast<int>(grid_.size());
    std::vector<Value> z_blocks(static_cast<size_t>(b)), prior_blocks(static_cast<size_t>(b));
    std::vector<Value> xi_blocks(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        z_blocks[static_cast<size_t>(i)] = slice(z, 0, i * m, (i + 1) * m);
        prior_blocks[static_cast<size_t>(i)] = slice(prior, 0, i * m, (i + 1) * m);
        Value gi = slice(smoothed_grid, 1, i * m, (i + 1) * m);  // [v, m]
        Value alpha = trajectory_alpha(gi, prior_blocks[static_cast<size_t>(i)]);
        xi_blocks[static_cast<size_t>(i)] = matmul(alpha, z_blocks[static_cast<size_t>(i)]);
    }

    // Estimator 3: trajectory points must rank like their grid times.
    Value xi_all = concat(xi_blocks, 0);  // [b*v, dz]
    Value w3 = kernel_weight_matrix(xi_all, mu_bg, g.leaves.tau);
    Value s3 = beran_curve(w3, bg_events);
    Value that3 = beran_expected(s3, bg_times);
    std::vector<Value> ranks(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        ranks[static_cast<size_t>(i)] =
            trajectory_rank_loss_graph(slice(that3, 0, i * v, (i + 1) * v), grid_, 1.0);
    }
    g.l_tr1 = mul_scalar(mean(concat(ranks, 0)), lw.gamma3);

    // Reconstruction point: the trajectory evaluated at a Gumbel-sampled time
    // from estimator 1.
    std::vector<double> t_gen(static_cast<size_t>(b));
    {
        const Tensor& s1v = s1.val();
        for (int i = 0; i < b; ++i) {
            DiscreteEventDistribution dist;
            dist.times = bg_times;
            dist.masses.resize(static_cast<size_t>(nb));
            double prev = 1.0;
            for (int j = 0; j < nb; ++j) {
                dist.masses[static_cast<size_t>(j)] = prev - s1v.at(i, j);
                prev = s1v.at(i, j);
            }
            dist.residual = s1v.at(i, nb - 1);
            t_gen[static_cast<size_t>(i)] = gumbel_sample_time(dist, rng_);
        }
    }
    Value beta_rec = smoothing_matrix(t_gen, bg_times, g.leaves.eta);  // [b, nb]
    Value pi_rec = rowsum(mul(p, matmul(maps.rep, beta_rec)));         // [b*m, 1]
    Value num_rec = mul(pi_rec, prior);
    {
        // Dead blocks (all masses underflowed) fall back to uniform weights.
        Value block_tot = matmul(maps.block_sum, num_rec);
        bool degenerate = false;
        for (size_t i = 0; i < block_tot.val().size(); ++i) {
            if (block_tot.val()[i] < 1e-280) {
                degenerate = true;
                break;
            }
        }
        if (degenerate) {
            Tensor mask({b * m, 1});
            for (int i = 0; i < b; ++i) {
                if (block_tot.val()[static_cast<size_t>(i)] < 1e-280) {
                    for (int k = 0; k < m; ++k) mask.at(i * m + k, 0) = 1.0;
                }
            }
            num_rec = add(num_rec, Value::constant(std::move(mask)));
            block_tot = matmul(maps.block_sum, num_rec);
        }
        Value alpha_rec = mul(num_rec, recip(matmul(maps.rep, block_tot)));  // [b*m, 1]
        Value xi_rec = matmul(maps.block_sum, mul(broadcast_to(alpha_rec, {b * m, dz}), z));
        Value xhat = decode_graph(g.leaves, xi_rec);
        Value z_first = matmul(maps.first, z);
        g.l_wae = wae_loss_graph(x_batch, xhat, z_first, Value::constant(std::move(ref_draws)), lw.gamma2,
                                 lw.lambda, dz);
    }

    // Likelihood of the trajectory at the true event times, uncensored only.
    std::vector<int> unc;
    for (int i = 0; i < b; ++i) {
        if (batch_events[static_cast<size_t>(i)] == 1) unc.push_back(i);
    }
    if (unc.empty()) {
        log_warning("trajectory_likelihood_loss: no uncensored instances in batch, contributing 0");
        g.l_tr2 = Value::constant(0.0);
    } else {
        const int nu = static_cast<int>(unc.size());
        std::vector<double> t_unc(static_cast<size_t>(nu));
        std::vector<double> km_masses(static_cast<size_t>(nu));
        for (int k = 0; k < nu; ++k) {
            const int i = unc[static_cast<size_t>(k)];
            t_unc[static_cast<size_t>(k)] = batch_times[static_cast<size_t>(i)];
            km_masses[static_cast<size_t>(k)] =
                km_mass_at_[static_cast<size_t>(batch_idx[static_cast<size_t>(i)])];
        }
        Value beta_t = smoothing_matrix(t_unc, bg_times, g.leaves.eta);  // [nu, nb]
        std::vector<Value> xi_u(static_cast<size_t>(nu));
        for (int k = 0; k < nu; ++k) {
            const int i = unc[static_cast<size_t>(k)];
            Value pik = matmul(slice(p, 0, i * m, (i + 1) * m), transpose(slice(beta_t, 0, k, k + 1)));
            Value weights = normalize_rows_safe(
                transpose(mul(pik, prior_blocks[static_cast<size_t>(i)])));  // [1, m]
            xi_u[static_cast<size_t>(k)] = matmul(weights, z_blocks[static_cast<size_t>(i)]);
        }
        Value xi_mat = concat(xi_u, 0);  // [nu, dz]
        Value w4 = kernel_weight_matrix(xi_mat, mu_bg, g.leaves.tau);
        Value s4 = beran_curve(w4, bg_events);
        Value density_at_t = rowsum(mul(beran_masses(s4), beta_t));  // [nu, 1]
        Value logs = vlog(add_scalar(density_at_t, 1e-12));
        Tensor akm({1, nu});
        const auto wts = softmin_weights(km_masses);
        for (int k = 0; k < nu; ++k) akm.at(0, k) = wts[static_cast<size_t>(k)];
        g.l_tr2 = mul_scalar(sum(matmul(Value::constant(std::move(akm)), logs)), lw.gamma4);
    }

    g.total = total_loss_graph(g.l_beran, g.l_wae, g.l_tr1, g.l_tr2);
    return g;
}

TaskMetrics Trainer::run_task(const std::vector<int>& background_idx, const std::vector<int>& batch_idx) {
    TaskMetrics mt;
    mt.batch = static_cast<int>(batch_idx.size());
    try {
        TaskGraph g = build_task_graph(background_idx, batch_idx);
        mt.l_beran = g.l_beran.val()[0];
        mt.l_wae = g.l_wae.val()[0];
        mt.l_tr1 = g.l_tr1.val()[0];
        mt.l_tr2 = g.l_tr2.val()[0];
        mt.total = g.total.val()[0];
        backward(g.total);

        std::vector<Tensor*> params;
        params_.for_each([&](Tensor& t) { params.push_back(&t); });
        std::vector<Tensor> grads;
        for (const auto& leaf : g.leaves.all()) grads.push_back(leaf.grad());
        adam_.step(params, grads);
    } catch (const NumericError& e) {
        log_warning(std::string("training step aborted, parameters untouched: ") + e.what());
        mt.skipped = true;
    }
    return mt;
}

BackgroundSet Trainer::full_background() const {
    std::vector<int> all(static_cast<size_t>(n_));
    std::iota(all.begin(), all.end(), 0);
    const auto order = sort_by_time(all, times_, events_);
    BackgroundSet bg;
    bg.embeddings = gather_rows(encode_rows(params_, features_), order);
    bg.features = gather_rows(raw_features_, order);
    bg.times.resize(static_cast<size_t>(n_));
    bg.events.resize(static_cast<size_t>(n_));
    for (int i = 0; i < n_; ++i) {
        bg.times[static_cast<size_t>(i)] = times_[static_cast<size_t>(order[static_cast<size_t>(i)])];
        bg.events[static_cast<size_t>(i)] = events_[static_cast<size_t>(order[static_cast<size_t>(i)])];
    }
    return bg;
}

std::optional<double> Trainer::evaluate_c_index(const SurvivalDataset& raw) const {
    if (raw.empty()) return std::nullopt;
    const BackgroundSet bg = full_background();
    const SurvivalDataset std_rows = standardize(raw, schema_);
    Tensor x({static_cast<int>(std_rows.size()), d_});
    std::vector<double> t(std_rows.size());
    std::vector<int> e(std_rows.size());
    for (size_t i = 0; i < std_rows.size(); ++i) {
        for (int c = 0; c < d_; ++c) x.at(static_cast<int>(i), c) = std_rows.records[i].x[static_cast<size_t>(c)];
        t[i] = std_rows.records[i].time;
        e[i] = std_rows.records[i].event;
    }
    const Tensor mu = encode_rows(params_, x);
    Value w = kernel_weight_matrix(Value::constant(mu), Value::constant(bg.embeddings),
                                   Value::constant(params_.tau()));
    Value curve = beran_curve(w, bg.events);
    Value that = beran_expected(curve, bg.times);
    std::vector<double> pred(that.val().data(), that.val().data() + that.val().size());
    return c_index_hard(pred, t, e);
}

TrainedModel Trainer::snapshot() const {
    TrainedModel model;
    model.vae = params_;
    model.schema = schema_;
    model.background = full_background();
    model.settings = settings_;
    model.t_min = t_min_;
    model.t_max = t_max_;
    // The censoring classifier never touches the autoencoder: separate
    // parameters, separate stream.
    Rng clf_rng = Rng(settings_.train.seed).split(0xC1A55);
    model.censor = train_censor_classifier(std_ds_, settings_.train.classifier_hidden,
                                           settings_.train.classifier_epochs,
                                           settings_.train.classifier_learning_rate, clf_rng);
    return model;
}

TrainedModel Trainer::fit(const FitOptions& opts) {
    const auto& tc = settings_.train;
    if (tc.epochs > 0 && (tc.r < 1 || tc.r >= n_)) {
        throw ContractError("fit: background size r must satisfy 1 <= r < n");
    }
    const int cap = std::max(1, tc.batch_capacity);
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const bool full_bg = epoch >= tc.warmup;
        std::vector<int> order(static_cast<size_t>(n_));
        std::iota(order.begin(), order.end(), 0);
        rng_.shuffle(order);

        size_t cursor = 0;
        int tasks = 0;
        TaskMetrics acc;
        int counted = 0;
        while (cursor < order.size() && (tc.M <= 0 || tasks < tc.M)) {
            std::vector<int> bg, batch;
            if (full_bg) {
                bg.resize(static_cast<size_t>(n_));
                std::iota(bg.begin(), bg.end(), 0);
                while (cursor < order.size() && static_cast<int>(batch.size()) < cap) {
                    batch.push_back(order[cursor++]);
                }
            } else {
                bg = rng_.sample_without_replacement(n_, tc.r);
                std::vector<char> in_bg(static_cast<size_t>(n_), 0);
                for (int i : bg) in_bg[static_cast<size_t>(i)] = 1;
                while (cursor < order.size() && static_cast<int>(batch.size()) < cap) {
                    const int idx = order[cursor++];
                    if (!in_bg[static_cast<size_t>(idx)]) batch.push_back(idx);
                }
            }
            if (batch.empty()) continue;
            const TaskMetrics mt = run_task(bg, batch);
            ++tasks;
            if (!mt.skipped) {
                acc.l_beran += mt.l_beran;
                acc.l_wae += mt.l_wae;
                acc.l_tr1 += mt.l_tr1;
                acc.l_tr2 += mt.l_tr2;
                acc.total += mt.total;
                ++counted;
            }
        }

        if (opts.log) {
            nlohmann::json line;
            line["epoch"] = epoch;
            const double k = counted > 0 ? static_cast<double>(counted) : 1.0;
            line["L_Beran"] = acc.l_beran / k;
            line["L_WAE"] = acc.l_wae / k;
            line["L_Tr1"] = acc.l_tr1 / k;
            line["L_Tr2"] = acc.l_tr2 / k;
            line["total"] = acc.total / k;
            if (opts.holdout) {
                const auto ci = evaluate_c_index(*opts.holdout);
                if (ci) {
                    line["holdout_c_index"] = *ci;
                } else {
                    line["holdout_c_index"] = nullptr;
                }
            } else {
                line["holdout_c_index"] = nullptr;
            }
            (*opts.log) << line.dump() << "\n";
        }
    }
    return snapshot();
}

TrainedModel fit(const SurvivalDataset& raw_train, const DataSchema& schema, const TrainSettings& settings,
                 Rng& rng, const FitOptions& opts) {
    Trainer trainer(raw_train, schema, settings, rng.split(0xF17));
    return trainer.fit(opts);
}

}  // namespace survtraj
