#ifndef MDPLAB_HARD_INSTANCES_HPP
#define MDPLAB_HARD_INSTANCES_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "matrix.hpp"
#include "mdp.hpp"
#include "mixing.hpp"

namespace mdplab {

// Two-state symmetric-switching family: both actions share the kernel
// [[1-p, p], [p, 1-p]], rewards r(1,.) = 1 and r(2,.) = 0. Every
// deterministic policy induces the same chain and is optimal; the chain is
// (1,2p)-Doeblin. The lower-bound region is p in (0, 0.1], gamma in [0.9, 1).
struct HardInstance {
    double p = 0.0;
    double gamma = 0.0;
    TabularMdp mdp;
    bool in_lower_bound_region = false;

    double t_minorize() const { return 1.0 / p; }
};

inline HardInstance make_hard_instance(double p, double gamma) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("make_hard_instance: p must lie in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("make_hard_instance: gamma must lie in (0,1)");
    Vec reward = {1.0, 1.0, 0.0, 0.0};
    Vec kernel = {
        1.0 - p, p, 1.0 - p, p,  // state 1, both actions
        p, 1.0 - p, p, 1.0 - p,  // state 2, both actions
    };
    HardInstance h{p, gamma, TabularMdp(2, 2, std::move(reward), std::move(kernel), gamma), false};
    h.in_lower_bound_region = (p <= 0.1 && gamma >= 0.9);
    return h;
}

// Exact optimal values: v*(1) + v*(2) = 1/(1-gamma) and
// v*(1) - v*(2) = 1/(1 - gamma(1-2p)).
inline std::pair<double, double> hard_instance_values(const HardInstance& h) {
    const double sum = 1.0 / (1.0 - h.gamma);
    const double diff = 1.0 / (1.0 - h.gamma * (1.0 - 2.0 * h.p));
    return {(sum + diff) / 2.0, (sum - diff) / 2.0};
}

// Closed form of the local minimax parameter at entry (1, a1).
inline double nu_squared_closed_form(const HardInstance& h) {
    const double p = h.p, g = h.gamma;
    const double numer = g * g * (1.0 - p) * p * (1.0 - 2.0 * g * (1.0 - p) + g * g * (1.0 - 2.0 * p + 2.0 * p * p));
    const double denom = (1.0 - g) * (1.0 - g) * std::pow(1.0 - g + 2.0 * g * p, 4.0);
    return numer / denom;
}

struct FBoundCheck {
    double f_value = 0.0;
    bool passes = false;     // f >= 2/81
    bool in_region = false;  // p in (0,0.1], gamma in [0.9,1), gamma >= 1-p
};

// f(p,gamma) = (1-gamma)^2 p nu^2(1,a1) / gamma^2 is bounded below by
// 2/3^4 on the lower-bound region (it is nondecreasing in gamma there and
// f(p, 1-p) = (1-p)(2p^2-6p+5)/(3-2p)^4).
inline FBoundCheck f_lower_bound_check(double p, double gamma) {
    FBoundCheck out;
    out.in_region = (p > 0.0 && p <= 0.1 && gamma >= 0.9 && gamma < 1.0 && gamma >= 1.0 - p);
    const HardInstance h = make_hard_instance(p, gamma);
    out.f_value = (1.0 - gamma) * (1.0 - gamma) * p * nu_squared_closed_form(h) / (gamma * gamma);
    out.passes = out.f_value >= 2.0 / 81.0;
    return out;
}

// Hellinger distance between the one-draw generative laws of two models:
// the product over (s,a) of the per-row transition measures. Convention:
// d^2 = 1 - Bhattacharyya affinity, so affinity multiplies across (s,a).
inline double hellinger_between_models(const TabularMdp& m1, const TabularMdp& m2) {
    if (m1.n_states() != m2.n_states() || m1.n_actions() != m2.n_actions())
        throw std::invalid_argument("hellinger_between_models: shape mismatch");
    double affinity = 1.0;
    for (int s = 0; s < m1.n_states(); ++s) {
        for (int a = 0; a < m1.n_actions(); ++a) {
            double bc = 0.0;
            const auto r1 = m1.kernel_row(s, a);
            const auto r2 = m2.kernel_row(s, a);
            for (int s2 = 0; s2 < m1.n_states(); ++s2) bc += std::sqrt(r1[s2] * r2[s2]);
            affinity *= std::min(1.0, bc);
        }
    }
    return std::sqrt(std::max(0.0, 1.0 - affinity));
}

// The perturbed alternative: P_bar(s,a,s') = P(s,a,s') +
// P(s,a,s') U_{(sbar,abar)}(s,a) [v*(s') - (P v*)(s,a)] / (sqrt(2n) ||nu||_inf),
// with U = (I - gamma P^pi)^{-1} and (sbar,abar) the argmax of nu (ties
// resolved to (state 1, a1); the construction is symmetric in the tie).
struct AlternativeInstance {
    HardInstance base;
    long long n = 0;
    TabularMdp mdp_bar;
    double hellinger = 0.0;
    double max_perturbation = 0.0;
};

inline long long alternative_min_n(const HardInstance& h) {
    const double t = h.t_minorize();
    const double bound = 2.0 * std::max(1.0 / ((1.0 - h.gamma) * (1.0 - h.gamma)), 243.0 * t * t * t);
    return static_cast<long long>(std::ceil(bound));
}

inline AlternativeInstance make_alternative(const HardInstance& h, long long n) {
    if (n < alternative_min_n(h))
        throw std::invalid_argument("make_alternative: n below the validity threshold 2 max{(1-gamma)^-2, 3^5 t^3}");
    const TabularMdp& mdp = h.mdp;
    const int ns = mdp.n_states(), na = mdp.n_actions(), d = ns * na;

    auto [v, q, pi] = solve_value_iteration(mdp, 1e-12);
    const VarianceReport rep = exact_variance_report(mdp, pi);

    // argmax of nu with lowest-index tie-breaking
    int arg = 0;
    double best = rep.nu_sq.values[0];
    for (int i = 1; i < d; ++i)
        if (rep.nu_sq.values[i] > best + 1e-12) { best = rep.nu_sq.values[i]; arg = i; }
    const double nu_inf = std::sqrt(best);

    const Mat p_pi = mdp.policy_operator(pi);
    Mat bell(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) bell(i, j) = (i == j ? 1.0 : 0.0) - mdp.gamma() * p_pi(i, j);
    const Mat u = LuFactors(bell).solve_multi(Mat::identity(d));

    const double scale = 1.0 / (std::sqrt(2.0 * static_cast<double>(n)) * nu_inf);
    Vec kernel_bar(mdp.kernel_table());
    double max_pert = 0.0;
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const int col = s * na + a;
            double pv = 0.0;
            const auto row = mdp.kernel_row(s, a);
            for (int s2 = 0; s2 < ns; ++s2) pv += row[s2] * v.values[s2];
            for (int s2 = 0; s2 < ns; ++s2) {
                const double pert = row[s2] * u(arg, col) * (v.values[s2] - pv) * scale;
                max_pert = std::max(max_pert, std::fabs(pert));
                kernel_bar[(static_cast<size_t>(s) * na + a) * ns + s2] += pert;
            }
        }
    }

    TabularMdp mdp_bar(ns, na, mdp.reward_table(), std::move(kernel_bar), mdp.gamma());
    AlternativeInstance alt{h, n, std::move(mdp_bar), 0.0, max_pert};
    alt.hellinger = hellinger_between_models(h.mdp, alt.mdp_bar);
    return alt;
}

// Exact sup-norm gap between the optimal q-functions of the base and the
// alternative.
inline double qstar_gap(const HardInstance& h, const AlternativeInstance& alt) {
    auto [v1, q1, pi1] = solve_value_iteration(h.mdp, 1e-12);
    auto [v2, q2, pi2] = solve_value_iteration(alt.mdp_bar, 1e-12);
    return sup_norm_diff(q1, q2);
}

}  // namespace mdplab

#endif
