#ifndef MDPLAB_RNG_HPP
#define MDPLAB_RNG_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mdplab {

// splitmix64: fixed, portable stream. Substreams are derived by hashing
// (seed, index) so parallel trials and per-(s,a) streams never share state.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("SplitMix64::below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do { v = next(); } while (v >= limit);
        return v % n;
    }
};

inline uint64_t mix_bits(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix_bits(a + 0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2) + mix_bits(b));
}

inline SplitMix64 substream(uint64_t master_seed, uint64_t index) {
    return SplitMix64(hash_combine(master_seed, index));
}

// Walker/Vose alias table for O(1) categorical draws. The inner learner
// loops draw billions of next states per sweep, so this matters.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(std::span<const double> weights) { build(weights); }

    void build(std::span<const double> weights) {
        const int n = static_cast<int>(weights.size());
        if (n == 0) throw std::invalid_argument("AliasTable: empty weight vector");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("AliasTable: negative weight");
            total += w;
        }
        if (total <= 0.0) throw std::invalid_argument("AliasTable: zero total weight");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        for (int i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;
        std::vector<int> small, large;
        small.reserve(n);
        large.reserve(n);
        for (int i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
        while (!small.empty() && !large.empty()) {
            const int s = small.back(); small.pop_back();
            const int l = large.back(); large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        while (!large.empty()) { prob_[large.back()] = 1.0; large.pop_back(); }
        while (!small.empty()) { prob_[small.back()] = 1.0; small.pop_back(); }
    }

    int sample(SplitMix64& rng) const {
        const int n = static_cast<int>(prob_.size());
        const int col = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        return rng.uniform() < prob_[col] ? col : alias_[col];
    }

    int size() const { return static_cast<int>(prob_.size()); }

private:
    std::vector<double> prob_;
    std::vector<int> alias_;
};

// Inverse-CDF draw for one-off sampling from a probability row.
inline int sample_categorical(std::span<const double> probs, SplitMix64& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // Round-off can leave u just past the accumulated mass; return the last
    // state with positive probability.
    for (int i = n - 1; i >= 0; --i)
        if (probs[i] > 0.0) return i;
    throw std::invalid_argument("sample_categorical: all-zero distribution");
}

}  // namespace mdplab

#endif
