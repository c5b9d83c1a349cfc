#ifndef MDPLAB_SAMPLER_HPP
#define MDPLAB_SAMPLER_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "mdp.hpp"
#include "rng.hpp"

namespace mdplab {

// One draw of the 1-sample empirical Bellman operator: a next state for
// every (s,a), sampled independently.
struct EmpiricalBellmanDraw {
    std::vector<int> next_state;  // row-major (s,a)
};

// Generative-model access to an MDP: i.i.d. next-state draws per (s,a) with
// exact sample accounting. Alias tables give O(1) categorical sampling; one
// substream per (s,a) keyed by the master seed keeps draws independent
// across pairs and reproducible.
class GenerativeModel {
public:
    GenerativeModel(TabularMdp mdp, uint64_t seed)
        : mdp_(std::move(mdp)), seed_(seed), total_(0) {
        const int d = mdp_.n_states() * mdp_.n_actions();
        alias_.reserve(d);
        streams_.reserve(d);
        counts_.assign(d, 0);
        for (int s = 0; s < mdp_.n_states(); ++s) {
            for (int a = 0; a < mdp_.n_actions(); ++a) {
                alias_.emplace_back(mdp_.kernel_row(s, a));
                streams_.push_back(substream(seed, static_cast<uint64_t>(s) * mdp_.n_actions() + a));
            }
        }
    }

    const TabularMdp& mdp() const { return mdp_; }
    uint64_t seed() const { return seed_; }

    int sample_next_state(int s, int a) {
        const int idx = s * mdp_.n_actions() + a;
        ++counts_[idx];
        ++total_;
        return alias_[idx].sample(streams_[idx]);
    }

    EmpiricalBellmanDraw draw_empirical_operator() {
        EmpiricalBellmanDraw draw;
        draw.next_state.resize(counts_.size());
        for (int s = 0; s < mdp_.n_states(); ++s)
            for (int a = 0; a < mdp_.n_actions(); ++a)
                draw.next_state[static_cast<size_t>(s) * mdp_.n_actions() + a] = sample_next_state(s, a);
        return draw;
    }

    long long total_samples() const { return total_; }
    const std::vector<long long>& per_pair_counts() const { return counts_; }

private:
    TabularMdp mdp_;
    uint64_t seed_;
    std::vector<AliasTable> alias_;
    std::vector<SplitMix64> streams_;
    std::vector<long long> counts_;
    long long total_;
};

inline std::pair<long long, std::vector<long long>> sample_count(const GenerativeModel& gm) {
    return {gm.total_samples(), gm.per_pair_counts()};
}

// Applies a drawn operator: out(s,a) = r(s,a) + gamma * max_b q(S'(s,a), b).
// Unbiased for the Bellman operator at q.
inline QFunction apply_empirical_operator(const EmpiricalBellmanDraw& draw, const TabularMdp& mdp,
                                          const QFunction& q) {
    if (q.n_states != mdp.n_states() || q.n_actions != mdp.n_actions())
        throw std::invalid_argument("apply_empirical_operator: shape mismatch");
    if (draw.next_state.size() != static_cast<size_t>(mdp.n_states()) * mdp.n_actions())
        throw std::invalid_argument("apply_empirical_operator: draw shape mismatch");
    QFunction out(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const int s2 = draw.next_state[static_cast<size_t>(s) * mdp.n_actions() + a];
            out(s, a) = mdp.reward(s, a) + mdp.gamma() * q.state_value(s2);
        }
    }
    return out;
}

}  // namespace mdplab

#endif
