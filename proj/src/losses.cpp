#include "survtraj/losses.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

#include "survtraj/errors.hpp"
#include "survtraj/logging.hpp"
#include "survtraj/vae.hpp"

namespace survtraj {

namespace {
bool g_quiet = false;
std::mutex g_log_mutex;
}  // namespace

void set_quiet(bool q) { g_quiet = q; }
bool quiet() { return g_quiet; }

void log_warning(const std::string& msg) {
    if (g_quiet) return;
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "warning: " << msg << "\n";
}

Value soft_c_index_graph(const Value& pred, const std::vector<double>& times,
                         const std::vector<int>& events, double gamma) {
    const int n = static_cast<int>(times.size());
    if (pred.val().rank() != 2 || pred.val().shape()[0] != n || pred.val().shape()[1] != 1) {
        throw ContractError("soft_c_index: pred must be an [n, 1] column");
    }
    if (static_cast<int>(events.size()) != n) throw ContractError("soft_c_index: length mismatch");
    Tensor mask({n, n});
    double denom = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (times[static_cast<size_t>(j)] < times[static_cast<size_t>(i)] &&
                events[static_cast<size_t>(j)] == 1) {
                mask.at(i, j) = 1.0;
                denom += 1.0;
            }
        }
    }
    if (denom == 0.0) {
        log_warning("soft_c_index: no admissible pairs, contributing 0");
        return Value::constant(0.0);
    }
    Value diffs = sub(broadcast_to(pred, {n, n}), broadcast_to(transpose(pred), {n, n}));
    Value num = sum(mul(sigmoid(diffs), Value::constant(mask)));
    return mul_scalar(num, gamma / denom);
}

double soft_c_index(const std::vector<double>& pred, const std::vector<double>& times,
                    const std::vector<int>& events, double gamma) {
    Tensor col({static_cast<int>(pred.size()), 1});
    for (size_t i = 0; i < pred.size(); ++i) col[i] = pred[i];
    return soft_c_index_graph(Value::constant(col), times, events, gamma).val()[0];
}

Value wae_loss_graph(const Value& x, const Value& xhat, const Value& z_first, const Value& ref,
                     double gamma2, double lambda, int d_z) {
    Value rec = mul_scalar(mean(sqnorm(sub(x, xhat))), gamma2);
    if (z_first.val().shape()[0] < 2) {
        log_warning("wae_loss: batch < 2, skipping the MMD term");
        return rec;
    }
    return add(rec, mmd_penalty_graph(z_first, ref, lambda, d_z));
}

Value trajectory_rank_loss_graph(const Value& expected_times, const std::vector<double>& grid,
                                 double gamma3) {
    if (grid.size() < 2) return Value::constant(0.0);
    return soft_c_index_graph(expected_times, grid, std::vector<int>(grid.size(), 1), gamma3);
}

std::vector<double> softmin_weights(const std::vector<double>& xs) {
    if (xs.empty()) throw ContractError("softmin_weights: empty input");
    double lo = xs[0];
    for (double x : xs) lo = std::min(lo, x);
    std::vector<double> w(xs.size());
    double s = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        w[i] = std::exp(lo - xs[i]);
        s += w[i];
    }
    for (auto& x : w) x /= s;
    return w;
}

double total_loss(const LossParts& parts) {
    const auto check = [](double v, const char* name) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("total_loss: non-finite part ") + name);
        }
    };
    check(parts.beran, "L_Beran");
    check(parts.wae, "L_WAE");
    check(parts.tr1, "L_Tr1");
    check(parts.tr2, "L_Tr2");
    return -parts.beran + parts.wae - (parts.tr1 + parts.tr2);
}

Value total_loss_graph(const Value& beran, const Value& wae, const Value& tr1, const Value& tr2) {
    return sub(sub(sub(wae, beran), tr1), tr2);
}

}  // namespace survtraj
