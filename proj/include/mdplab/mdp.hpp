#ifndef MDPLAB_MDP_HPP
#define MDPLAB_MDP_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace mdplab {

struct Policy {
    std::vector<int> action_of;  // one action index per state

    int operator()(int s) const { return action_of[s]; }
    int n_states() const { return static_cast<int>(action_of.size()); }
};

struct ValueFunction {
    Vec values;

    double operator()(int s) const { return values[s]; }
    int n_states() const { return static_cast<int>(values.size()); }
};

struct QFunction {
    int n_states = 0;
    int n_actions = 0;
    Vec values;  // row-major (s, a)

    QFunction() = default;
    QFunction(int ns, int na, double fill = 0.0)
        : n_states(ns), n_actions(na), values(static_cast<size_t>(ns) * na, fill) {}

    double& operator()(int s, int a) { return values[static_cast<size_t>(s) * n_actions + a]; }
    double operator()(int s, int a) const { return values[static_cast<size_t>(s) * n_actions + a]; }

    int max_action(int s) const {
        int best = 0;
        double best_v = (*this)(s, 0);
        for (int a = 1; a < n_actions; ++a) {
            const double v = (*this)(s, a);
            if (v > best_v) { best_v = v; best = a; }  // ties keep the lowest index
        }
        return best;
    }

    double state_value(int s) const { return (*this)(s, max_action(s)); }
};

inline double sup_norm(const QFunction& q) { return max_abs(q.values); }

inline double sup_norm_diff(const QFunction& a, const QFunction& b) {
    return max_abs_diff(a.values, b.values);
}

// max - min; zero on constants, invariant to constant shifts.
inline double span_seminorm(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("span_seminorm: empty input");
    double lo = x[0], hi = x[0];
    for (double v : x) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
    }
    return hi - lo;
}

inline double span_seminorm(const QFunction& q) { return span_seminorm(std::span<const double>(q.values)); }

// Finite discounted MDP with dense reward and transition tables. Immutable
// after construction; validation happens once here so every downstream
// routine can assume a well-formed model.
class TabularMdp {
public:
    static constexpr double kRowSumTol = 1e-12;

    TabularMdp(int n_states, int n_actions, Vec reward, Vec kernel, double gamma)
        : ns_(n_states), na_(n_actions), reward_(std::move(reward)), kernel_(std::move(kernel)), gamma_(gamma) {
        if (ns_ <= 0 || na_ <= 0) throw std::invalid_argument("TabularMdp: state and action counts must be positive");
        if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw std::invalid_argument("TabularMdp: gamma must lie strictly inside (0,1)");
        if (reward_.size() != static_cast<size_t>(ns_) * na_) throw std::invalid_argument("TabularMdp: reward shape mismatch");
        if (kernel_.size() != static_cast<size_t>(ns_) * na_ * ns_) throw std::invalid_argument("TabularMdp: kernel shape mismatch");
        for (double r : reward_)
            if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("TabularMdp: rewards must lie in [0,1]");
        for (int s = 0; s < ns_; ++s) {
            for (int a = 0; a < na_; ++a) {
                double sum = 0.0;
                for (int s2 = 0; s2 < ns_; ++s2) {
                    const double p = prob(s, a, s2);
                    if (p < 0.0) throw std::invalid_argument("TabularMdp: negative transition probability");
                    sum += p;
                }
                if (std::fabs(sum - 1.0) > kRowSumTol)
                    throw std::invalid_argument("TabularMdp: kernel row (" + std::to_string(s) + "," +
                                                std::to_string(a) + ") does not sum to 1");
            }
        }
    }

    int n_states() const { return ns_; }
    int n_actions() const { return na_; }
    double gamma() const { return gamma_; }

    double reward(int s, int a) const { return reward_[static_cast<size_t>(s) * na_ + a]; }
    double prob(int s, int a, int s2) const {
        return kernel_[(static_cast<size_t>(s) * na_ + a) * ns_ + s2];
    }
    std::span<const double> kernel_row(int s, int a) const {
        return {kernel_.data() + (static_cast<size_t>(s) * na_ + a) * ns_, static_cast<size_t>(ns_)};
    }
    const Vec& reward_table() const { return reward_; }
    const Vec& kernel_table() const { return kernel_; }

    void validate_policy(const Policy& pi) const {
        if (pi.n_states() != ns_) throw std::invalid_argument("policy length must equal n_states");
        for (int a : pi.action_of)
            if (a < 0 || a >= na_) throw std::invalid_argument("policy action index out of range");
    }

    // State-level kernel P_pi(s, s') = P(s, pi(s), s').
    Mat policy_kernel(const Policy& pi) const {
        validate_policy(pi);
        Mat p(ns_, ns_);
        for (int s = 0; s < ns_; ++s)
            for (int s2 = 0; s2 < ns_; ++s2) p(s, s2) = prob(s, pi(s), s2);
        return p;
    }

    // The linear operator P^pi on R^{|S||A|}:
    // (P^pi q)(s,a) = sum_{s'} P(s,a,s') q(s', pi(s')).
    Mat policy_operator(const Policy& pi) const {
        validate_policy(pi);
        const int d = ns_ * na_;
        Mat p(d, d);
        for (int s = 0; s < ns_; ++s)
            for (int a = 0; a < na_; ++a)
                for (int s2 = 0; s2 < ns_; ++s2)
                    p(s * na_ + a, s2 * na_ + pi(s2)) = prob(s, a, s2);
        return p;
    }

private:
    int ns_, na_;
    Vec reward_;
    Vec kernel_;
    double gamma_;
};

inline ValueFunction value_of(const QFunction& q) {
    ValueFunction v;
    v.values.resize(q.n_states);
    for (int s = 0; s < q.n_states; ++s) v.values[s] = q.state_value(s);
    return v;
}

inline Policy greedy_policy(const QFunction& q) {
    Policy pi;
    pi.action_of.resize(q.n_states);
    for (int s = 0; s < q.n_states; ++s) pi.action_of[s] = q.max_action(s);
    return pi;
}

// Bellman optimality operator on q-functions:
// T(q)(s,a) = r(s,a) + gamma * P_{s,a}[max_b q(., b)].
// A gamma-contraction in the sup norm.
inline QFunction bellman_operator(const TabularMdp& mdp, const QFunction& q) {
    if (q.n_states != mdp.n_states() || q.n_actions != mdp.n_actions())
        throw std::invalid_argument("bellman_operator: shape mismatch");
    Vec v(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) v[s] = q.state_value(s);
    QFunction out(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            double acc = 0.0;
            const auto row = mdp.kernel_row(s, a);
            for (int s2 = 0; s2 < mdp.n_states(); ++s2) acc += row[s2] * v[s2];
            out(s, a) = mdp.reward(s, a) + mdp.gamma() * acc;
        }
    }
    return out;
}

// Fixed-point iteration on q with arbitrary (unvalidated) rewards; the
// learner analysis needs Bellman solves for perturbed rewards outside [0,1].
inline QFunction solve_q_fixed_point(int n_states, int n_actions, const Vec& kernel, const Vec& reward,
                                     double gamma, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("solve_q_fixed_point: tol must be positive");
    QFunction q(n_states, n_actions, 0.0);
    const double stop = tol * (1.0 - gamma) / (2.0 * gamma);
    Vec v(n_states, 0.0);
    for (long long iter = 0;; ++iter) {
        QFunction next(n_states, n_actions);
        for (int s = 0; s < n_states; ++s) v[s] = q.state_value(s);
        for (int s = 0; s < n_states; ++s) {
            for (int a = 0; a < n_actions; ++a) {
                const double* row = kernel.data() + (static_cast<size_t>(s) * n_actions + a) * n_states;
                double acc = 0.0;
                for (int s2 = 0; s2 < n_states; ++s2) acc += row[s2] * v[s2];
                next(s, a) = reward[static_cast<size_t>(s) * n_actions + a] + gamma * acc;
            }
        }
        const double gap = sup_norm_diff(next, q);
        q = std::move(next);
        // The requested stop can sit below what double precision resolves;
        // saturate at the arithmetic floor of one operator application.
        const double floor = 32.0 * std::numeric_limits<double>::epsilon() * (1.0 + sup_norm(q));
        if (gap <= std::max(stop, floor)) return q;
        if (iter > 100'000'000LL) throw std::runtime_error("solve_q_fixed_point: iteration cap hit");
    }
}

// Value iteration to within sup-norm error tol, greedy policy extraction
// with lowest-index tie-breaking. Stopping rule: successive-iterate gap
// <= tol*(1-gamma)/(2*gamma), which bounds the fixed-point error by tol/2.
inline std::tuple<ValueFunction, QFunction, Policy> solve_value_iteration(const TabularMdp& mdp, double tol) {
    QFunction q = solve_q_fixed_point(mdp.n_states(), mdp.n_actions(), mdp.kernel_table(),
                                      mdp.reward_table(), mdp.gamma(), tol);
    Policy pi = greedy_policy(q);
    return {value_of(q), std::move(q), std::move(pi)};
}

// Exact policy evaluation: solve (I - gamma P_pi) v = r_pi, then assemble
// q^pi(s,a) = r(s,a) + gamma P_{s,a}[v].
inline std::pair<ValueFunction, QFunction> evaluate_policy_exact(const TabularMdp& mdp, const Policy& pi) {
    mdp.validate_policy(pi);
    const int n = mdp.n_states();
    Mat a(n, n);
    Vec r_pi(n);
    for (int s = 0; s < n; ++s) {
        r_pi[s] = mdp.reward(s, pi(s));
        for (int s2 = 0; s2 < n; ++s2) a(s, s2) = (s == s2 ? 1.0 : 0.0) - mdp.gamma() * mdp.prob(s, pi(s), s2);
    }
    ValueFunction v;
    v.values = solve_linear(a, r_pi);

    Vec residual = matvec(a, v.values);
    for (int s = 0; s < n; ++s) residual[s] -= r_pi[s];
    if (max_abs(residual) > 1e-10)
        throw std::runtime_error("evaluate_policy_exact: linear solve residual above 1e-10");

    QFunction q(n, mdp.n_actions());
    for (int s = 0; s < n; ++s) {
        for (int act = 0; act < mdp.n_actions(); ++act) {
            double acc = 0.0;
            const auto row = mdp.kernel_row(s, act);
            for (int s2 = 0; s2 < n; ++s2) acc += row[s2] * v.values[s2];
            q(s, act) = mdp.reward(s, act) + mdp.gamma() * acc;
        }
    }
    return {std::move(v), std::move(q)};
}

struct VarianceReport {
    QFunction psi_pi;        // variance of the discounted cumulative reward
    QFunction sigma_qstar;   // one-sample Bellman sampling std at the policy's q
    QFunction sigma_pi;      // policy-variance std (sigma^pi)
    QFunction nu_sq;         // local minimax parameter nu^2
    double weighted_sigma_norm = 0.0;  // ||(I - gamma P^pi)^{-1} sigma^pi||_inf
};

// Exact variance quantities for a policy, used as ground truth by the
// Monte-Carlo modules:
//   sigma(q)(s,a)^2   = gamma^2 (P_{s,a}[v(q)^2] - P_{s,a}[v(q)]^2)
//   sigma^pi(s,a)^2   = gamma^2 (P_{s,a}[(v^pi)^2] - P_{s,a}[v^pi]^2)
//   (I - gamma^2 P^pi) Psi = (sigma^pi)^2
//   nu^2 = diag((I - gamma P^pi)^{-1} D (I - gamma P^pi)^{-T}), D = diag(sigma(q)^2)
inline VarianceReport exact_variance_report(const TabularMdp& mdp, const Policy& pi) {
    const int ns = mdp.n_states(), na = mdp.n_actions();
    const int d = ns * na;
    const double g = mdp.gamma();
    auto [v_pi, q_pi] = evaluate_policy_exact(mdp, pi);

    Vec v_greedy(ns);
    for (int s = 0; s < ns; ++s) v_greedy[s] = q_pi.state_value(s);

    VarianceReport rep;
    rep.sigma_qstar = QFunction(ns, na);
    rep.sigma_pi = QFunction(ns, na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const auto row = mdp.kernel_row(s, a);
            double m1g = 0.0, m2g = 0.0, m1p = 0.0, m2p = 0.0;
            for (int s2 = 0; s2 < ns; ++s2) {
                m1g += row[s2] * v_greedy[s2];
                m2g += row[s2] * v_greedy[s2] * v_greedy[s2];
                m1p += row[s2] * v_pi.values[s2];
                m2p += row[s2] * v_pi.values[s2] * v_pi.values[s2];
            }
            rep.sigma_qstar(s, a) = g * std::sqrt(std::max(0.0, m2g - m1g * m1g));
            rep.sigma_pi(s, a) = g * std::sqrt(std::max(0.0, m2p - m1p * m1p));
        }
    }

    const Mat p_pi = mdp.policy_operator(pi);

    // Psi from (I - gamma^2 P^pi) Psi = (sigma^pi)^2.
    Mat sys(d, d);
    Vec rhs(d);
    for (int i = 0; i < d; ++i) {
        rhs[i] = rep.sigma_pi.values[i] * rep.sigma_pi.values[i];
        for (int j = 0; j < d; ++j) sys(i, j) = (i == j ? 1.0 : 0.0) - g * g * p_pi(i, j);
    }
    rep.psi_pi = QFunction(ns, na);
    rep.psi_pi.values = solve_linear(sys, rhs);
    {
        Vec res = matvec(sys, rep.psi_pi.values);
        for (int i = 0; i < d; ++i) res[i] -= rhs[i];
        if (max_abs(res) > 1e-8) throw std::runtime_error("exact_variance_report: Psi solve residual above 1e-8");
    }

    // U = (I - gamma P^pi)^{-1} for nu^2 and the weighted sigma norm.
    Mat bell(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) bell(i, j) = (i == j ? 1.0 : 0.0) - g * p_pi(i, j);
    LuFactors lu(bell);
    const Mat u = lu.solve_multi(Mat::identity(d));

    rep.nu_sq = QFunction(ns, na);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
            const double term = u(i, j) * rep.sigma_qstar.values[j];
            acc += term * term;
        }
        rep.nu_sq.values[i] = acc;
    }

    const Vec weighted = matvec(u, rep.sigma_pi.values);
    rep.weighted_sigma_norm = max_abs(weighted);
    return rep;
}

// Smallest per-(s,a) action gap v*(s) - q*(s,a) over entries strictly below
// the state optimum (tie tolerance 1e-10); +inf when every action is optimal
// everywhere. Polynomial stand-in for the minimum over non-optimal policies.
inline double optimality_gap(const TabularMdp& mdp, double tie_tol = 1e-10) {
    auto [v, q, pi] = solve_value_iteration(mdp, 1e-12);
    double gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double diff = v.values[s] - q(s, a);
            if (diff > tie_tol) gap = std::min(gap, diff);
        }
    }
    return gap;
}

}  // namespace mdplab

#endif
