#ifndef MDPLAB_SPLIT_CHAIN_HPP
#define MDPLAB_SPLIT_CHAIN_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "matrix.hpp"
#include "mdp.hpp"
#include "mixing.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace mdplab {

// One split-chain path: states, the regeneration coins flipped at block
// boundaries m, 2m, ..., and the successful-coin times.
struct RegenerationTrace {
    std::vector<int> states;      // length horizon + 1
    std::vector<uint8_t> coins;   // coins[j] = B_{m(j+1)}
    std::vector<int> regen_times; // tau_0 = 0 followed by the successful boundaries
    int horizon = 0;              // multiple of m
    int m = 1;
};

inline Vec point_mass(int n, int s) {
    Vec d(n, 0.0);
    d.at(s) = 1.0;
    return d;
}

namespace detail {

// Block stepper for the Athreya-Ney-Nummelin split chain: flip the coin,
// draw the block endpoint from psi or R, then fill the interior from the
// exact bridge law of the original kernel.
class SplitChainStepper {
public:
    SplitChainStepper(const DoeblinDecomposition& decomp, const Mat& p)
        : d_(decomp), cache_(p), n_(p.rows()) {
        if (d_.m < 1 || !(d_.p > 0.0 && d_.p <= 1.0))
            throw std::invalid_argument("SplitChainStepper: invalid decomposition");
        if (static_cast<int>(d_.psi.size()) != n_ || d_.residual.rows() != n_)
            throw std::invalid_argument("SplitChainStepper: decomposition/kernel dimension mismatch");
        if (decomposition_residual(d_, p) > 1e-10)
            throw std::invalid_argument("SplitChainStepper: decomposition does not certify the kernel");
        for (int j = 0; j <= d_.m; ++j) cache_.power(j);
    }

    int dim() const { return n_; }
    int m() const { return d_.m; }
    double p() const { return d_.p; }

    // Appends one block (m states) to `states`; returns the coin outcome.
    bool advance_block(std::vector<int>& states, SplitMix64& rng) const {
        const int from = states.back();
        const bool coin = rng.bernoulli(d_.p);
        const int endpoint = coin ? sample_categorical(d_.psi, rng)
                                  : sample_categorical(d_.residual.row(from), rng);
        // Bridge: sequential conditionals
        //   P(x | a, b, j steps remaining) = P(a,x) P^{j-1}(x,b) / P^j(a,b).
        int a = from;
        Vec cond(n_);
        for (int k = 1; k < d_.m; ++k) {
            const int j = d_.m - k + 1;
            const Mat& pj = cache_.power(j);
            const Mat& pjm1 = cache_.power(j - 1);
            const double denom = pj(a, endpoint);
            if (denom <= 0.0)
                throw std::logic_error("split chain: bridge endpoint has zero m-step probability");
            const Mat& p1 = cache_.power(1);
            for (int x = 0; x < n_; ++x) cond[x] = p1(a, x) * pjm1(x, endpoint) / denom;
            a = sample_categorical(cond, rng);
            states.push_back(a);
        }
        states.push_back(endpoint);
        return coin;
    }

private:
    DoeblinDecomposition d_;
    mutable KernelPowerCache cache_;
    int n_;
};

}  // namespace detail

// Simulates the split chain of P under a certifying decomposition. The
// horizon is rounded up to a whole number of blocks. Marginally the path
// has the law of the original chain.
inline RegenerationTrace simulate_split_chain(const DoeblinDecomposition& decomp, const Mat& p,
                                              const Vec& start_dist, int horizon, uint64_t seed) {
    if (horizon < decomp.m) throw std::invalid_argument("simulate_split_chain: horizon must be >= m");
    detail::SplitChainStepper stepper(decomp, p);
    SplitMix64 rng(hash_combine(seed, 0x5117ULL));
    RegenerationTrace trace;
    trace.m = decomp.m;
    const int blocks = (horizon + decomp.m - 1) / decomp.m;
    trace.horizon = blocks * decomp.m;
    trace.states.reserve(trace.horizon + 1);
    trace.states.push_back(sample_categorical(start_dist, rng));
    trace.regen_times.push_back(0);
    for (int b = 0; b < blocks; ++b) {
        const bool coin = stepper.advance_block(trace.states, rng);
        trace.coins.push_back(coin ? 1 : 0);
        if (coin) trace.regen_times.push_back((b + 1) * decomp.m);
    }
    return trace;
}

// Cycle-level statistics of the split chain. Fields are filled by the two
// producers below; unfilled parts stay empty.
struct CycleStats {
    long long n_cycles = 0;
    double mean_length = 0.0;
    double mean_length_se = 0.0;
    Vec cycle_lengths;                  // T_j, cycles j >= 2
    Vec discounted_reward_per_cycle;    // g(W_j), discount reset at each regeneration
    QFunction estimated_psi_variance;   // per-(s,a) Monte-Carlo variance of the return
    QFunction psi_variance_se;
    double cov_gamma_g = 0.0;           // estimate of Cov(gamma^T, g(W))
    double cov_gamma_g_se = 0.0;
};

// Runs the split chain of P_pi from psi until n_cycles full regeneration
// cycles beyond the first are recorded. The first cycle is discarded: only
// cycles j >= 2 are identically distributed. The covariance estimate uses
// every other cycle so its samples are independent (cycles are 1-dependent).
inline CycleStats cycle_statistics(const TabularMdp& mdp, const Policy& pi,
                                   const DoeblinDecomposition& decomp, long long n_cycles,
                                   uint64_t seed) {
    if (n_cycles < 2) throw std::invalid_argument("cycle_statistics: need at least 2 cycles");
    const Mat p = mdp.policy_kernel(pi);
    detail::SplitChainStepper stepper(decomp, p);
    SplitMix64 rng(hash_combine(seed, 0xC1C1E5ULL));
    const double gamma = mdp.gamma();
    const int m = decomp.m;

    std::vector<int> states;
    states.push_back(sample_categorical(decomp.psi, rng));

    CycleStats out;
    out.cycle_lengths.reserve(n_cycles);
    out.discounted_reward_per_cycle.reserve(n_cycles);

    long long kept = 0;
    int cycles_seen = 0;  // regenerations observed so far
    size_t cycle_start = 0;
    int block = 0;
    while (kept < n_cycles) {
        const bool coin = stepper.advance_block(states, rng);
        ++block;
        if (!coin) continue;
        const size_t boundary = static_cast<size_t>(block) * m;
        ++cycles_seen;
        if (cycles_seen >= 2) {
            const long long t_len = static_cast<long long>(boundary - cycle_start);
            double g = 0.0, w = 1.0;
            for (size_t k = cycle_start; k < boundary; ++k) {
                g += w * mdp.reward(states[k], pi(states[k]));
                w *= gamma;
            }
            out.cycle_lengths.push_back(static_cast<double>(t_len));
            out.discounted_reward_per_cycle.push_back(g);
            ++kept;
        }
        cycle_start = boundary;
        // Trim the prefix occasionally so memory stays flat on long runs.
        if (cycle_start > 1u << 20) {
            states.erase(states.begin(), states.begin() + cycle_start);
            const size_t done_blocks = cycle_start / m;
            block -= static_cast<int>(done_blocks);
            cycle_start = 0;
        }
    }

    out.n_cycles = kept;
    out.mean_length = mean(out.cycle_lengths);
    out.mean_length_se = mean_stderr(out.cycle_lengths);

    Vec gamma_t, g_even;
    for (size_t i = 0; i < out.cycle_lengths.size(); i += 2) {
        gamma_t.push_back(std::pow(gamma, out.cycle_lengths[i]));
        g_even.push_back(out.discounted_reward_per_cycle[i]);
    }
    if (gamma_t.size() >= 2) {
        const CovEstimate c = sample_covariance(gamma_t, g_even);
        out.cov_gamma_g = c.cov;
        out.cov_gamma_g_se = c.stderr;
    }
    return out;
}

// Point estimate of Cov(gamma^T, g(W)) with standard error.
inline CovEstimate check_negative_covariance(const TabularMdp& mdp, const Policy& pi,
                                             const DoeblinDecomposition& decomp, long long n_cycles,
                                             uint64_t seed) {
    const CycleStats stats = cycle_statistics(mdp, pi, decomp, n_cycles, seed);
    CovEstimate c;
    c.cov = stats.cov_gamma_g;
    c.stderr = stats.cov_gamma_g_se;
    c.n = (stats.cycle_lengths.size() + 1) / 2;
    return c;
}

// Truncation horizon with deterministic tail bias <= tail_bias.
inline int discounted_horizon(double gamma, double tail_bias = 1e-6) {
    return static_cast<int>(std::ceil(std::log(tail_bias * (1.0 - gamma)) / std::log(gamma)));
}

// Monte-Carlo estimate of the per-(s,a) variance of the discounted return
// under pi, simulated through the split chain of P_pi. Paths are keyed by
// (seed, (s,a), path) so the estimate is reproducible and order-independent.
inline CycleStats monte_carlo_cumulative_variance(const TabularMdp& mdp, const Policy& pi,
                                                  const DoeblinDecomposition& decomp,
                                                  long long n_paths, uint64_t seed) {
    if (n_paths < 2) throw std::invalid_argument("monte_carlo_cumulative_variance: need >= 2 paths");
    const Mat p = mdp.policy_kernel(pi);
    detail::SplitChainStepper stepper(decomp, p);
    const double gamma = mdp.gamma();
    const int horizon = discounted_horizon(gamma);
    const int blocks = (horizon + decomp.m - 1) / decomp.m;

    CycleStats out;
    out.estimated_psi_variance = QFunction(mdp.n_states(), mdp.n_actions());
    out.psi_variance_se = QFunction(mdp.n_states(), mdp.n_actions());

    Vec returns(n_paths);
    std::vector<int> states;
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const uint64_t pair_key = hash_combine(seed, static_cast<uint64_t>(s) * mdp.n_actions() + a);
            for (long long path = 0; path < n_paths; ++path) {
                SplitMix64 rng = substream(pair_key, static_cast<uint64_t>(path));
                states.clear();
                states.push_back(sample_categorical(mdp.kernel_row(s, a), rng));
                for (int b = 0; b < blocks; ++b) stepper.advance_block(states, rng);
                // X = r(s,a) + sum_{k>=1} gamma^k r_pi(S_k), truncated.
                double x = mdp.reward(s, a);
                double w = gamma;
                for (int k = 0; k < horizon; ++k) {
                    x += w * mdp.reward(states[k], pi(states[k]));
                    w *= gamma;
                }
                returns[path] = x;
            }
            out.estimated_psi_variance(s, a) = sample_variance(returns);
            out.psi_variance_se(s, a) = variance_stderr(returns);
        }
    }
    return out;
}

}  // namespace mdplab

#endif
