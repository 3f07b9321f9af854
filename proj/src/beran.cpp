#include "survtraj/beran.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "survtraj/errors.hpp"

namespace survtraj {

Value pairwise_sqdist(const Value& a, const Value& b) {
    const int na = a.val().shape()[0];
    const int nb = b.val().shape()[0];
    Value a2 = sqnorm(a);  // [na, 1]
    Value b2 = sqnorm(b);  // [nb, 1]
    // The -2 factor rides on the (small) right operand of the matmul.
    Value cross = matmul(a, transpose(mul_scalar(b, -2.0)));
    Value d2 = add(add(broadcast_to(a2, {na, nb}), cross), broadcast_to(transpose(b2), {na, nb}));
    // Guard the rounding of ||x||^2 + ||x||^2 - 2<x,x> near zero.
    return clamp(d2, 0.0, std::numeric_limits<double>::infinity());
}

Value kernel_weight_matrix(const Value& queries, const Value& background, const Value& tau) {
    // softmax(-d^2/tau) == softmin of distances between 1/sqrt(tau)-scaled
    // points; scaling the inputs keeps every full-size op out of the graph.
    Value inv_sqrt_tau = vexp(mul_scalar(vlog(tau), -0.5));
    Value qs = mul(queries, broadcast_to(inv_sqrt_tau, queries.val().shape()));
    Value bs = mul(background, broadcast_to(inv_sqrt_tau, background.val().shape()));
    return softmin(pairwise_sqdist(qs, bs));
}

Value beran_curve(const Value& weights, const std::vector<int>& events_sorted) {
    const int nq = weights.val().shape()[0];
    const int nb = weights.val().shape()[1];
    if (static_cast<int>(events_sorted.size()) != nb) {
        throw ContractError("beran_curve: events length != background size");
    }
    // used_i = sum_{j<i} W_j (exclusive running sum).
    Value used = sub(cumsum(weights), weights);
    Value denom = clamp(sub(broadcast_to(Value::constant(1.0), used.val().shape()), used), 1e-8,
                        std::numeric_limits<double>::infinity());
    // 1 - W/D written as (D - W)/D, saving a full-size constant.
    Value factor = clamp(mul(sub(denom, weights), recip(denom)), 0.0, 1.0);
    // Censored items contribute a unit factor: f^delta = delta*f + (1-delta).
    std::vector<double> ev(events_sorted.begin(), events_sorted.end());
    std::vector<double> inv(ev.size());
    for (size_t i = 0; i < ev.size(); ++i) inv[i] = 1.0 - ev[i];
    Value mask = broadcast_to(Value::constant(Tensor::row(ev)), {nq, nb});
    Value keep = broadcast_to(Value::constant(Tensor::row(inv)), {nq, nb});
    return cumprod(add(mul(factor, mask), keep));
}

Value beran_expected(const Value& curve, const std::vector<double>& times_sorted) {
    const int nq = curve.val().shape()[0];
    const int nb = curve.val().shape()[1];
    if (static_cast<int>(times_sorted.size()) != nb) {
        throw ContractError("beran_expected: times length != background size");
    }
    Value t1 = broadcast_to(Value::constant(times_sorted[0]), {nq, 1});
    if (nb == 1) return t1;
    std::vector<double> dt(static_cast<size_t>(nb) - 1);
    for (int i = 0; i + 1 < nb; ++i) dt[static_cast<size_t>(i)] = times_sorted[static_cast<size_t>(i) + 1] - times_sorted[static_cast<size_t>(i)];
    Value s_inner = slice(curve, 1, 0, nb - 1);
    return add(t1, matmul(s_inner, Value::constant(Tensor::from(std::move(dt), {nb - 1, 1}))));
}

Value beran_masses(const Value& curve) {
    const int nq = curve.val().shape()[0];
    const int nb = curve.val().shape()[1];
    Value prev = nb == 1 ? broadcast_to(Value::constant(1.0), {nq, 1})
                         : concat({broadcast_to(Value::constant(1.0), {nq, 1}), slice(curve, 1, 0, nb - 1)}, 1);
    return sub(prev, curve);
}

StepSurvivalFunction make_step_sf(const std::vector<double>& item_times,
                                  const std::vector<double>& item_values) {
    StepSurvivalFunction sf;
    for (size_t i = 0; i < item_times.size(); ++i) {
        if (!sf.times.empty() && sf.times.back() == item_times[i]) {
            sf.values.back() = item_values[i];
        } else {
            sf.times.push_back(item_times[i]);
            sf.values.push_back(item_values[i]);
        }
    }
    return sf;
}

StepSurvivalFunction beran_sf(const std::vector<double>& query, const std::vector<BeranItem>& background,
                              double tau) {
    if (background.empty()) throw ContractError("beran_sf: empty background");
    if (!(tau > 0.0)) throw ContractError("beran_sf: tau must be positive");
    const int nb = static_cast<int>(background.size());
    const int dz = static_cast<int>(background[0].embedding.size());
    std::vector<int> idx(background.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const auto& ia = background[static_cast<size_t>(a)];
        const auto& ib = background[static_cast<size_t>(b)];
        if (ia.time != ib.time) return ia.time < ib.time;
        return ia.event > ib.event;
    });
    Tensor emb({nb, dz});
    std::vector<double> times(background.size());
    std::vector<int> events(background.size());
    for (int i = 0; i < nb; ++i) {
        const auto& item = background[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        if (static_cast<int>(item.embedding.size()) != dz) {
            throw ContractError("beran_sf: inconsistent embedding dimensions");
        }
        for (int k = 0; k < dz; ++k) emb.at(i, k) = item.embedding[static_cast<size_t>(k)];
        times[static_cast<size_t>(i)] = item.time;
        events[static_cast<size_t>(i)] = item.event;
    }
    Tensor q({1, dz});
    for (int k = 0; k < dz; ++k) q.at(0, k) = query[static_cast<size_t>(k)];

    Value w = kernel_weight_matrix(Value::constant(q), Value::constant(emb), Value::constant(tau));
    Value curve = beran_curve(w, events);
    std::vector<double> row(curve.val().data(), curve.val().data() + curve.val().size());
    return make_step_sf(times, row);
}

}  // namespace survtraj
