#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace survtraj {

// Deterministic random source. All sampling goes through the raw 64-bit
// stream so results are identical across standard library implementations
// (std::normal_distribution and friends are not portable).
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1], safe as a log argument.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Standard Gumbel: -log(-log U).
    double gumbel() { return -std::log(-std::log(uniform_pos())); }

    // Uniform integer in [0, n). Rejection-free modulo bias is irrelevant at
    // the dataset sizes involved, but use the unbiased multiply-shift anyway.
    int uniform_int(int n) {
        const auto x = next_u64();
        return static_cast<int>((static_cast<unsigned __int128>(x) * static_cast<uint64_t>(n)) >> 64);
    }

    // Independent child stream, reproducible from (seed, key).
    Rng split(uint64_t key) const {
        uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL * (key + 1));
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        x = x ^ (x >> 31);
        return Rng(x);
    }

    void shuffle(std::vector<int>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[i], v[static_cast<size_t>(uniform_int(i + 1))]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
        std::vector<int> out;
        out.reserve(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) {
            const int j = i + uniform_int(n - i);
            std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
            out.push_back(pool[static_cast<size_t>(i)]);
        }
        return out;
    }

private:
    uint64_t seed_;
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace survtraj
