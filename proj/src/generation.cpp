#include "survtraj/generation.hpp"

#include <algorithm>
#include <cmath>

#include "survtraj/beran.hpp"
#include "survtraj/errors.hpp"
#include "survtraj/logging.hpp"
#include "survtraj/trajectory.hpp"
#include "survtraj/training.hpp"

namespace survtraj {

CensorClassifier train_censor_classifier(const SurvivalDataset& std_ds, int hidden, int epochs,
                                         double learning_rate, Rng& rng) {
    if (std_ds.empty()) throw ContractError("train_censor_classifier: empty dataset");
    const int n = static_cast<int>(std_ds.size());
    const int d = static_cast<int>(std_ds.records[0].x.size());

    CensorClassifier clf;
    clf.input_dim = d + 1;

    double t_sum = 0.0;
    int n_pos = 0;
    for (const auto& rec : std_ds.records) {
        t_sum += rec.time;
        n_pos += rec.event;
    }
    clf.time_mean = t_sum / n;
    double ss = 0.0;
    for (const auto& rec : std_ds.records) {
        const double dlt = rec.time - clf.time_mean;
        ss += dlt * dlt;
    }
    clf.time_std = std::sqrt(ss / n);
    if (!(clf.time_std > 0.0)) clf.time_std = 1.0;

    if (n_pos == 0 || n_pos == n) {
        log_warning("censor classifier: single-class data, using a constant classifier");
        clf.constant = true;
        clf.constant_p = static_cast<double>(n_pos) / n;
        return clf;
    }

    clf.net = make_mlp({clf.input_dim, hidden, 1}, rng);

    Tensor x({n, clf.input_dim});
    Tensor labels({n, 1});
    Tensor weights({n, 1});
    const double w_pos = static_cast<double>(n) / (2.0 * n_pos);
    const double w_neg = static_cast<double>(n) / (2.0 * (n - n_pos));
    clf.logit_offset = std::log(w_pos / w_neg);
    for (int i = 0; i < n; ++i) {
        const auto& rec = std_ds.records[static_cast<size_t>(i)];
        for (int c = 0; c < d; ++c) x.at(i, c) = rec.x[static_cast<size_t>(c)];
        x.at(i, d) = (rec.time - clf.time_mean) / clf.time_std;
        labels.at(i, 0) = rec.event;
        weights.at(i, 0) = rec.event == 1 ? w_pos : w_neg;
    }

    Adam opt(learning_rate);
    const Value x_const = Value::constant(x);
    const Value y = Value::constant(labels);
    const Value w = Value::constant(weights);
    Tensor ones_minus({n, 1});
    for (int i = 0; i < n; ++i) ones_minus.at(i, 0) = 1.0 - labels.at(i, 0);
    const Value one_minus_y = Value::constant(ones_minus);

    for (int e = 0; e < epochs; ++e) {
        Value w0 = Value::leaf(clf.net.layers[0].w, true);
        Value b0 = Value::leaf(clf.net.layers[0].b, true);
        Value w1 = Value::leaf(clf.net.layers[1].w, true);
        Value b1 = Value::leaf(clf.net.layers[1].b, true);
        Value logit = affine(tanh_act(affine(x_const, w0, b0)), w1, b1);
        // Weighted BCE via the softplus identities, stable at large logits.
        Value loss = mean(mul(w, add(mul(one_minus_y, softplus(logit)), mul(y, softplus(neg(logit))))));
        backward(loss);
        std::vector<Tensor*> params{&clf.net.layers[0].w, &clf.net.layers[0].b, &clf.net.layers[1].w,
                                    &clf.net.layers[1].b};
        opt.step(params, {w0.grad(), b0.grad(), w1.grad(), b1.grad()});
    }
    return clf;
}

int predict_censor_indicator(const CensorClassifier& clf, const std::vector<double>& x_std, double t_raw,
                             Rng& rng) {
    const double p = censor_probability(clf, x_std, t_raw);
    return rng.uniform() < p ? 1 : 0;
}

double generate_time(const TrainedModel& model, const std::vector<double>& raw_x, Rng& rng) {
    if (model.background.size() == 0) throw ContractError("generate_time: model has no background");
    const auto x_std = standardize_row(raw_x, model.schema);
    const auto [mu, sigma] = encode(model.vae, x_std);
    (void)sigma;
    std::vector<BeranItem> bg(static_cast<size_t>(model.background.size()));
    const int dz = model.vae.cfg.d_z;
    for (int i = 0; i < model.background.size(); ++i) {
        bg[static_cast<size_t>(i)].embedding.resize(static_cast<size_t>(dz));
        for (int k = 0; k < dz; ++k) {
            bg[static_cast<size_t>(i)].embedding[static_cast<size_t>(k)] = model.background.embeddings.at(i, k);
        }
        bg[static_cast<size_t>(i)].time = model.background.times[static_cast<size_t>(i)];
        bg[static_cast<size_t>(i)].event = model.background.events[static_cast<size_t>(i)];
    }
    const StepSurvivalFunction sf = beran_sf(mu, bg, model.vae.tau());
    return gumbel_sample_time(sf_to_density(sf), rng);
}

GeneratedTriplet generate_instance(const TrainedModel& model, const std::vector<double>& raw_x, Rng& rng) {
    // Embedding bundle and trajectory first, then the sampled time, then the
    // censor draw; a fixed order keeps generation bit-reproducible.
    Trajectory traj = compute_trajectory(model, raw_x, rng);
    const double t_gen = generate_time(model, raw_x, rng);

    // Nearest grid point to the sampled time.
    size_t best = 0;
    for (size_t k = 1; k < traj.grid.points.size(); ++k) {
        if (std::abs(traj.grid.points[k] - t_gen) < std::abs(traj.grid.points[best] - t_gen)) best = k;
    }

    GeneratedTriplet out;
    out.x.resize(static_cast<size_t>(traj.feature_points.cols()));
    for (int c = 0; c < traj.feature_points.cols(); ++c) {
        out.x[static_cast<size_t>(c)] = traj.feature_points.at(static_cast<int>(best), c);
    }
    out.time = t_gen;
    const auto xhat_std = standardize_row(out.x, model.schema);
    out.event = predict_censor_indicator(model.censor, xhat_std, t_gen, rng);
    return out;
}

SurvivalDataset generate_like(const TrainedModel& model, const SurvivalDataset& conditioning_raw,
                              Rng& rng) {
    SurvivalDataset out;
    out.records.reserve(conditioning_raw.size());
    for (size_t i = 0; i < conditioning_raw.size(); ++i) {
        Rng row_rng = rng.split(i);
        const GeneratedTriplet trip = generate_instance(model, conditioning_raw.records[i].x, row_rng);
        out.records.push_back({trip.x, trip.time, trip.event});
    }
    return out;
}

}  // namespace survtraj
