#ifndef MDPLAB_ALGORITHMS_HPP
#define MDPLAB_ALGORITHMS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdp.hpp"
#include "sampler.hpp"

namespace mdplab {

// The three mixing regimes with prescribed parameter schedules, plus an
// escape hatch for hand-built schedules.
enum class Setting { GeneralOptimalMixing, UniqueOrLipschitz, UniformMixing, Custom };

inline const char* setting_name(Setting s) {
    switch (s) {
        case Setting::GeneralOptimalMixing: return "general";
        case Setting::UniqueOrLipschitz: return "unique-lipschitz";
        case Setting::UniformMixing: return "uniform";
        case Setting::Custom: return "custom";
    }
    return "?";
}

inline Setting setting_from_name(const std::string& name) {
    if (name == "general") return Setting::GeneralOptimalMixing;
    if (name == "unique-lipschitz") return Setting::UniqueOrLipschitz;
    if (name == "uniform") return Setting::UniformMixing;
    if (name == "custom") return Setting::Custom;
    throw std::invalid_argument("unknown setting: " + name);
}

// The theory only asserts existence of sufficiently large absolute
// constants; these defaults are calibrated on the hard family and stay
// configurable.
struct ScheduleConstants {
    double c0 = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
};

// Everything a combined run needs: warm-start length k0, epoch count l*,
// recentering sizes n_l, inner loop length k*, and the step rule
// lambda_k = 1/(1 + (1-gamma)k).
struct LearnerSchedule {
    Setting setting = Setting::Custom;
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    double t_minorize_bound = 0.0;
    ScheduleConstants constants;
    double beta = 0.1;
    std::optional<double> lipschitz_L;
    std::optional<double> gap_Delta;

    long long k0 = 0;
    long long k_star = 0;
    int l_star = 0;
    std::vector<long long> n_l;  // n_l[l-1] for epoch l

    bool k2_threshold_checked = false;
    bool k2_threshold_met = true;

    double step_size(long long k) const { return 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(k)); }

    long long recentering_total() const {
        long long total = 0;
        for (long long n : n_l) total += n;
        return total;
    }
};

namespace detail {

inline long long ceil_ll(double x) {
    if (!(x < 9.0e18)) throw std::overflow_error("schedule parameter overflows 64-bit range");
    return static_cast<long long>(std::ceil(x));
}

inline double log2_ceil_clamped(double x) { return std::max(1.0, std::ceil(std::log2(x))); }

// d = |S||A| (ceil(log(target)) + 1), the union-bound dimension factor.
inline double dim_factor(int ns, int na, double log_target) {
    const double c = std::max(0.0, std::ceil(std::log(log_target)));
    return static_cast<double>(ns) * na * (c + 1.0);
}

inline void fill_general(LearnerSchedule& s) {
    const double g1 = 1.0 - s.gamma;
    const double d = dim_factor(s.n_states, s.n_actions, 1.0 / (g1 * s.epsilon));
    s.l_star = static_cast<int>(log2_ceil_clamped(s.t_minorize_bound / s.epsilon));
    s.k0 = ceil_ll(s.constants.c0 / (g1 * g1 * g1) * std::log(2.0 * d / (g1 * s.delta)));
    s.k_star = ceil_ll(s.constants.c1 / (g1 * g1 * g1) * std::log(8.0 * d / (g1 * s.delta)));
    s.n_l.clear();
    for (int l = 1; l <= s.l_star; ++l)
        s.n_l.push_back(ceil_ll(3.0 * s.constants.c2 * std::pow(4.0, l) / (g1 * g1) * std::log(8.0 * d / s.delta)));
}

inline void fill_uniform(LearnerSchedule& s) {
    const double g1 = 1.0 - s.gamma;
    const double t = s.t_minorize_bound;
    const double d = dim_factor(s.n_states, s.n_actions, 1.0 / (std::sqrt(g1) * s.epsilon));
    s.l_star = static_cast<int>(log2_ceil_clamped(std::sqrt(t) / s.epsilon));
    s.k0 = ceil_ll(s.constants.c0 * t / (g1 * g1 * g1) * std::log(2.0 * d * t / (g1 * s.delta)));
    s.k_star = ceil_ll(s.constants.c1 / (g1 * g1 * g1) * std::log(2.0 * d / (g1 * s.delta)));
    s.n_l.clear();
    for (int l = 1; l <= s.l_star; ++l)
        s.n_l.push_back(ceil_ll(s.constants.c2 * std::pow(4.0, l) / (g1 * g1) * std::log(8.0 * d / s.delta)));
}

inline void fill_unique_lipschitz(LearnerSchedule& s) {
    const double g1 = 1.0 - s.gamma;
    const double sa = static_cast<double>(s.n_states) * s.n_actions;
    const double log4 = std::log(4.0);

    // n* and l* determine each other only logarithmically; two fixed-point
    // passes settle the pair.
    double l_guess = 1.0;
    double n_star = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        n_star = s.constants.c2 * s.t_minorize_bound / (s.epsilon * s.epsilon * g1 * g1) *
                 std::max(1.0, std::log(8.0 * sa * l_guess / s.delta) / log4);
        const double inner = std::max(std::exp(1.0), (16.0 * sa / s.delta) * std::log(std::max(std::exp(1.0), n_star)));
        l_guess = std::max(1.0, std::ceil(std::log(n_star * g1 * g1 / (8.0 * std::log(inner))) / log4));
    }
    s.l_star = static_cast<int>(l_guess);
    s.k0 = ceil_ll(s.constants.c0 * s.t_minorize_bound * s.t_minorize_bound / (g1 * g1) *
                   std::log(4.0 * sa / (g1 * s.delta)));
    s.k_star = std::max<long long>(1, ceil_ll(n_star / (2.0 * s.l_star)));
    s.n_l.clear();
    for (int l = 1; l <= s.l_star; ++l)
        s.n_l.push_back(ceil_ll(std::pow(4.0, l) / (g1 * g1) *
                                std::max(1.0, std::log(16.0 * s.l_star * sa / s.delta) / log4)));

    // Sample-size threshold from the unique/Lipschitz guarantee regime; informational
    // only, the guarantee needs "sufficiently large" n*.
    s.k2_threshold_checked = false;
    s.k2_threshold_met = true;
    const double log_ratio = n_star / std::pow(std::log(std::max(std::exp(1.0), n_star)), 2.0);
    if (s.gap_Delta && *s.gap_Delta > 0.0 && std::isfinite(*s.gap_Delta)) {
        const double need = std::log(sa / s.delta) / (g1 * g1 * g1) *
                            std::max(1.0, 1.0 / (*s.gap_Delta * *s.gap_Delta * std::pow(g1, s.beta)));
        s.k2_threshold_checked = true;
        s.k2_threshold_met = log_ratio >= need;
    } else if (s.lipschitz_L && *s.lipschitz_L > 0.0) {
        const double dd = s.gap_Delta.value_or(std::numeric_limits<double>::infinity());
        const double need = std::log(sa / s.delta) / std::pow(g1, 3.0 + s.beta) *
                            std::min(1.0 / (dd * dd), (*s.lipschitz_L * *s.lipschitz_L) / (g1 * g1));
        s.k2_threshold_checked = true;
        s.k2_threshold_met = log_ratio >= need;
    }
}

}  // namespace detail

inline LearnerSchedule make_schedule(Setting setting, int n_states, int n_actions, double gamma,
                                     double epsilon, double delta, double t_minorize_bound,
                                     ScheduleConstants constants = {}, double beta = 0.1,
                                     std::optional<double> lipschitz_L = std::nullopt,
                                     std::optional<double> gap_Delta = std::nullopt) {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("make_schedule: bad dimensions");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("make_schedule: gamma must be in (0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("make_schedule: epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("make_schedule: delta must be in (0,1)");
    if (!(t_minorize_bound >= 1.0)) throw std::invalid_argument("make_schedule: t_minorize bound must be >= 1");
    LearnerSchedule s;
    s.setting = setting;
    s.n_states = n_states;
    s.n_actions = n_actions;
    s.gamma = gamma;
    s.epsilon = epsilon;
    s.delta = delta;
    s.t_minorize_bound = t_minorize_bound;
    s.constants = constants;
    s.beta = beta;
    s.lipschitz_L = lipschitz_L;
    s.gap_Delta = gap_Delta;
    switch (setting) {
        case Setting::GeneralOptimalMixing: detail::fill_general(s); break;
        case Setting::UniformMixing: detail::fill_uniform(s); break;
        case Setting::UniqueOrLipschitz: detail::fill_unique_lipschitz(s); break;
        case Setting::Custom: throw std::invalid_argument("make_schedule: Custom schedules are built by hand");
    }
    return s;
}

// A named-setting schedule must match its formulas exactly; Custom passes.
inline void validate_schedule(const LearnerSchedule& s) {
    if (s.k0 < 0 || s.k_star < 1 || s.l_star < 0) throw std::invalid_argument("schedule: negative parameters");
    if (static_cast<int>(s.n_l.size()) != s.l_star) throw std::invalid_argument("schedule: n_l length != l_star");
    if (s.setting == Setting::Custom) return;
    const LearnerSchedule ref = make_schedule(s.setting, s.n_states, s.n_actions, s.gamma, s.epsilon,
                                              s.delta, s.t_minorize_bound, s.constants, s.beta,
                                              s.lipschitz_L, s.gap_Delta);
    if (s.k0 != ref.k0 || s.k_star != ref.k_star || s.l_star != ref.l_star || s.n_l != ref.n_l)
        throw std::invalid_argument("schedule parameters inconsistent with setting formulas");
}

// Closed-form total sample count |S||A| (k0 + sum_l n_l + l* k*); the
// sampler's counter must land exactly here after a combined run.
inline long long theoretical_sample_bound(const LearnerSchedule& s, int n_states, int n_actions) {
    return static_cast<long long>(n_states) * n_actions * (s.k0 + s.recentering_total() + static_cast<long long>(s.l_star) * s.k_star);
}

// Algorithm: synchronous Q-learning from a generative model. One empirical
// Bellman operator per step, applied at every (s,a) simultaneously, with the
// rescaled-linear stepsize lambda_k = 1/(1 + (1-gamma)k). `k_offset` resumes
// the stepsize sequence mid-run (for checkpointed error traces).
inline QFunction q_learning(GenerativeModel& gm, long long k_steps, QFunction q_init, long long k_offset = 0) {
    if (k_steps < 1) throw std::invalid_argument("q_learning: k_steps must be >= 1");
    const TabularMdp& mdp = gm.mdp();
    if (q_init.n_states != mdp.n_states() || q_init.n_actions != mdp.n_actions())
        throw std::invalid_argument("q_learning: q_init shape mismatch");
    const int ns = mdp.n_states(), na = mdp.n_actions();
    const double gamma = mdp.gamma();
    QFunction q = std::move(q_init);
    Vec v(ns);
    for (long long k = k_offset + 1; k <= k_offset + k_steps; ++k) {
        const double lam = 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(k));
        for (int s = 0; s < ns; ++s) v[s] = q.state_value(s);
        for (int s = 0; s < ns; ++s) {
            for (int a = 0; a < na; ++a) {
                const int s2 = gm.sample_next_state(s, a);
                const double target = mdp.reward(s, a) + gamma * v[s2];
                q(s, a) = (1.0 - lam) * q(s, a) + lam * target;
            }
        }
    }
    return q;
}

// One outer epoch of variance-reduced Q-learning: recenter at the anchor
// with n_l operator draws, then k_star recentered steps
//   q_{k+1} = (1-lambda_k) q_k + lambda_k (H(q_k) - H(anchor) + T_tilde),
// where both H evaluations share the same next-state draw.
inline QFunction vr_epoch(GenerativeModel& gm, const QFunction& anchor, long long n_l, long long k_star) {
    if (n_l < 1 || k_star < 1) throw std::invalid_argument("vr_epoch: n_l and k_star must be >= 1");
    const TabularMdp& mdp = gm.mdp();
    if (anchor.n_states != mdp.n_states() || anchor.n_actions != mdp.n_actions())
        throw std::invalid_argument("vr_epoch: anchor shape mismatch");
    const int ns = mdp.n_states(), na = mdp.n_actions();
    const double gamma = mdp.gamma();

    Vec v_anchor(ns);
    for (int s = 0; s < ns; ++s) v_anchor[s] = anchor.state_value(s);

    // T_tilde(s,a) = r(s,a) + gamma * mean_j v_anchor(S'_j), compensated sum.
    QFunction t_tilde(ns, na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            double sum = 0.0, comp = 0.0;
            for (long long j = 0; j < n_l; ++j) {
                const double x = v_anchor[gm.sample_next_state(s, a)] - comp;
                const double t = sum + x;
                comp = (t - sum) - x;
                sum = t;
            }
            t_tilde(s, a) = mdp.reward(s, a) + gamma * sum / static_cast<double>(n_l);
        }
    }

    QFunction q = anchor;  // q_{l,1} = anchor
    Vec v(ns);
    for (long long k = 1; k <= k_star; ++k) {
        const double lam = 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(k));
        for (int s = 0; s < ns; ++s) v[s] = q.state_value(s);
        for (int s = 0; s < ns; ++s) {
            for (int a = 0; a < na; ++a) {
                const int s2 = gm.sample_next_state(s, a);
                const double target = gamma * (v[s2] - v_anchor[s2]) + t_tilde(s, a);
                q(s, a) = (1.0 - lam) * q(s, a) + lam * target;
            }
        }
    }
    return q;
}

struct LearnerResult {
    QFunction q_hat;
    std::vector<double> per_epoch_errors;  // after warm start, then after each epoch
    long long samples_used = 0;
    double wall_seconds = 0.0;
};

// The combined procedure for the schedule's setting: Algorithm-1 warm start
// for k0 steps from q = 0, then l* variance-reduced epochs.
inline LearnerResult run_combined(GenerativeModel& gm, const LearnerSchedule& schedule,
                                  const QFunction* ground_truth = nullptr) {
    validate_schedule(schedule);
    const TabularMdp& mdp = gm.mdp();
    if (schedule.n_states != mdp.n_states() || schedule.n_actions != mdp.n_actions() ||
        std::fabs(schedule.gamma - mdp.gamma()) > 1e-15)
        throw std::invalid_argument("run_combined: schedule does not match the model");

    const auto t0 = std::chrono::steady_clock::now();
    const long long samples_before = gm.total_samples();

    LearnerResult result;
    QFunction q(mdp.n_states(), mdp.n_actions(), 0.0);
    if (schedule.k0 > 0) q = q_learning(gm, schedule.k0, std::move(q));
    if (ground_truth) result.per_epoch_errors.push_back(sup_norm_diff(q, *ground_truth));
    for (int l = 1; l <= schedule.l_star; ++l) {
        q = vr_epoch(gm, q, schedule.n_l[l - 1], schedule.k_star);
        if (ground_truth) result.per_epoch_errors.push_back(sup_norm_diff(q, *ground_truth));
    }
    result.q_hat = std::move(q);
    result.samples_used = gm.total_samples() - samples_before;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

struct LipschitzViolation {
    QFunction q_tilde;
    double lhs = 0.0;
    double rhs = 0.0;
};

// Randomized falsifier for the directional Lipschitz condition
// ||(P^{pi_tilde} - P^{pi*})(q_tilde - q*)||_inf <= L ||q_tilde - q*||^2
// over perturbations of q* ; it can only refute, never certify.
inline std::optional<LipschitzViolation> falsify_lipschitz(const TabularMdp& mdp, const QFunction& q_star,
                                                           double lipschitz_L, int n_samples,
                                                           double radius, uint64_t seed) {
    const Policy pi_star = greedy_policy(q_star);
    const Mat p_star = mdp.policy_operator(pi_star);
    SplitMix64 rng(hash_combine(seed, 0x11BULL));
    const int d = mdp.n_states() * mdp.n_actions();
    for (int trial = 0; trial < n_samples; ++trial) {
        QFunction qt = q_star;
        for (int i = 0; i < d; ++i) qt.values[i] += radius * (2.0 * rng.uniform() - 1.0);
        const Policy pi_t = greedy_policy(qt);
        const Mat p_t = mdp.policy_operator(pi_t);
        Vec diff(d);
        for (int i = 0; i < d; ++i) diff[i] = qt.values[i] - q_star.values[i];
        const Vec lhs_vec_a = matvec(p_t, diff);
        const Vec lhs_vec_b = matvec(p_star, diff);
        double lhs = 0.0;
        for (int i = 0; i < d; ++i) lhs = std::max(lhs, std::fabs(lhs_vec_a[i] - lhs_vec_b[i]));
        const double dn = max_abs(diff);
        if (lhs > lipschitz_L * dn * dn + 1e-12) {
            return LipschitzViolation{std::move(qt), lhs, lipschitz_L * dn * dn};
        }
    }
    return std::nullopt;
}

}  // namespace mdplab

#endif
