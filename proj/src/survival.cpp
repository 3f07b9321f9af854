#include "survtraj/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "survtraj/errors.hpp"

namespace survtraj {

std::vector<int> SurvivalDataset::sorted_index() const {
    std::vector<int> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const auto& ra = records[static_cast<size_t>(a)];
        const auto& rb = records[static_cast<size_t>(b)];
        if (ra.time != rb.time) return ra.time < rb.time;
        return ra.event > rb.event;  // events enter the risk set computation first
    });
    return idx;
}

void SurvivalDataset::validate() const {
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!(r.time >= 0.0) || !std::isfinite(r.time)) {
            throw ContractError("record " + std::to_string(i) + ": negative or non-finite time");
        }
        if (r.event != 0 && r.event != 1) {
            throw ContractError("record " + std::to_string(i) + ": event flag must be 0 or 1");
        }
        for (double v : r.x) {
            if (!std::isfinite(v)) {
                throw ContractError("record " + std::to_string(i) + ": non-finite feature");
            }
        }
    }
}

double StepSurvivalFunction::at(double t) const {
    // S = 1 before the first step time.
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<size_t>(std::distance(times.begin(), it)) - 1];
}

void StepSurvivalFunction::validate() const {
    if (times.size() != values.size()) throw ContractError("step SF: times/values length mismatch");
    double prev_t = 0.0;  // times must be strictly increasing and positive
    double prev_s = 1.0;
    for (size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > prev_t)) throw ContractError("step SF: times not strictly increasing");
        if (values[i] > prev_s + 1e-12 || values[i] < -1e-12) {
            throw ContractError("step SF: values not monotone in [0,1]");
        }
        prev_t = times[i];
        prev_s = values[i];
    }
}

void DiscreteEventDistribution::validate() const {
    if (times.size() != masses.size()) throw ContractError("event distribution: length mismatch");
    double total = residual;
    for (double p : masses) {
        if (p < -1e-12) throw ContractError("event distribution: negative mass");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ContractError("event distribution: masses sum to " + std::to_string(total));
    }
}

namespace {

// Shared product-limit core: factors 1 - w_i / max(1 - sum_{j<i} w_j, eps)
// over time-ordered items, applied at uncensored items only. Duplicate times
// are collapsed afterwards (last value wins).
StepSurvivalFunction product_limit(const std::vector<double>& times_sorted,
                                   const std::vector<int>& events_sorted,
                                   const std::vector<double>& weights_sorted) {
    const size_t n = times_sorted.size();
    StepSurvivalFunction sf;
    sf.times.reserve(n);
    sf.values.reserve(n);
    double s = 1.0;
    double used = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (events_sorted[i] == 1) {
            const double denom = std::max(1.0 - used, 1e-8);
            double factor = 1.0 - weights_sorted[i] / denom;
            factor = std::min(std::max(factor, 0.0), 1.0);
            s *= factor;
        }
        used += weights_sorted[i];
        if (!sf.times.empty() && sf.times.back() == times_sorted[i]) {
            sf.values.back() = s;
        } else {
            sf.times.push_back(times_sorted[i]);
            sf.values.push_back(s);
        }
    }
    return sf;
}

}  // namespace

StepSurvivalFunction kaplan_meier(const SurvivalDataset& ds) {
    if (ds.empty()) throw ContractError("kaplan_meier: empty dataset");
    const auto idx = ds.sorted_index();
    const size_t n = idx.size();
    std::vector<double> times(n), weights(n, 1.0 / static_cast<double>(n));
    std::vector<int> events(n);
    for (size_t i = 0; i < n; ++i) {
        times[i] = ds.records[static_cast<size_t>(idx[i])].time;
        events[i] = ds.records[static_cast<size_t>(idx[i])].event;
    }
    return product_limit(times, events, weights);
}

DiscreteEventDistribution km_density(const SurvivalDataset& ds) {
    return sf_to_density(kaplan_meier(ds));
}

DiscreteEventDistribution sf_to_density(const StepSurvivalFunction& sf) {
    DiscreteEventDistribution d;
    d.times = sf.times;
    d.masses.resize(sf.values.size());
    double prev = 1.0;
    for (size_t i = 0; i < sf.values.size(); ++i) {
        d.masses[i] = prev - sf.values[i];
        prev = sf.values[i];
    }
    d.residual = sf.values.empty() ? 1.0 : sf.values.back();
    return d;
}

double expected_event_time(const StepSurvivalFunction& sf) {
    if (sf.times.empty()) throw ContractError("expected_event_time: empty survival function");
    // T = sum_i S_i (t_{i+1} - t_i) with S_0 = 1 at t_0 = 0.
    double t = sf.times[0];
    for (size_t i = 0; i + 1 < sf.times.size(); ++i) {
        t += sf.values[i] * (sf.times[i + 1] - sf.times[i]);
    }
    return t;
}

double gumbel_sample_time(const DiscreteEventDistribution& dist, Rng& rng) {
    if (dist.times.empty()) throw ContractError("gumbel_sample_time: empty distribution");
    double best = -std::numeric_limits<double>::infinity();
    int best_idx = -1;
    const size_t n = dist.masses.size();
    for (size_t i = 0; i <= n; ++i) {
        const double p = i < n ? dist.masses[i] : dist.residual;
        const double g = rng.gumbel();  // consumed in fixed order for determinism
        if (p <= 0.0) continue;
        const double score = std::log(p) + g;
        if (score > best) {
            best = score;
            best_idx = static_cast<int>(i);
        }
    }
    if (best_idx < 0) throw ContractError("gumbel_sample_time: all masses zero");
    // Residual mass (event beyond the horizon) maps to the last support time.
    return best_idx == static_cast<int>(n) ? dist.times.back() : dist.times[static_cast<size_t>(best_idx)];
}

std::vector<double> kernel_weights(const std::vector<double>& query,
                                   const std::vector<std::vector<double>>& background, double tau) {
    if (!(tau > 0.0)) throw ContractError("kernel_weights: tau must be positive");
    if (background.empty()) throw ContractError("kernel_weights: empty background");
    std::vector<double> logits(background.size());
    for (size_t i = 0; i < background.size(); ++i) {
        double d2 = 0.0;
        for (size_t k = 0; k < query.size(); ++k) {
            const double d = query[k] - background[i][k];
            d2 += d * d;
        }
        logits[i] = -d2 / tau;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - m);
        s += l;
    }
    for (auto& l : logits) l /= s;
    return logits;
}

std::optional<double> c_index_hard(const std::vector<double>& pred, const std::vector<double>& time,
                                   const std::vector<int>& event) {
    if (pred.size() != time.size() || pred.size() != event.size()) {
        throw ContractError("c_index_hard: length mismatch");
    }
    // Pair (i, j) is admissible when T_i < T_j and the earlier time is an event.
    double num = 0.0, den = 0.0;
    const size_t n = pred.size();
    for (size_t i = 0; i < n; ++i) {
        if (event[i] != 1) continue;
        for (size_t j = 0; j < n; ++j) {
            if (time[i] < time[j]) {
                den += 1.0;
                if (pred[i] < pred[j]) num += 1.0;  // prediction ties count 0
            }
        }
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

}  // namespace survtraj
