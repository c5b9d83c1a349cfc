#ifndef MDPLAB_MIXING_HPP
#define MDPLAB_MIXING_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace mdplab {

struct NotUniformlyErgodic : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Certificate that P^m = p*psi + (1-p)*R with psi a distribution and R a
// stochastic kernel.
struct DoeblinDecomposition {
    int m = 0;
    double p = 0.0;
    Vec psi;
    Mat residual;

    double minorization_value() const { return static_cast<double>(m) / p; }
};

// Half the l1 distance between two distributions.
inline double tv_distance(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw std::invalid_argument("tv_distance: dimension mismatch");
    if (mu.empty()) throw std::invalid_argument("tv_distance: empty distributions");
    double acc = 0.0;
    for (size_t i = 0; i < mu.size(); ++i) acc += std::fabs(mu[i] - nu[i]);
    return 0.5 * acc;
}

namespace detail {

// Column-minimum mass of P^m: the optimal one-shot minorization level
// p_m = sum_{s'} min_s P^m(s, s'). On a finite space this attains the
// definition's inner infimum over (p, psi) exactly.
inline double column_min_mass(const Mat& pm, Vec* col_min = nullptr) {
    const int n = pm.rows();
    double total = 0.0;
    if (col_min) col_min->assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double lo = pm(0, j);
        for (int i = 1; i < n; ++i) lo = std::min(lo, pm(i, j));
        if (col_min) (*col_min)[j] = lo;
        total += lo;
    }
    return total;
}

inline DoeblinDecomposition decomposition_at(const Mat& pm, int m) {
    Vec col_min;
    const double p = column_min_mass(pm, &col_min);
    if (p <= 0.0) throw NotUniformlyErgodic("no minorization mass at m=" + std::to_string(m));
    const int n = pm.rows();
    DoeblinDecomposition d;
    d.m = m;
    d.psi.resize(n);
    if (p >= 1.0 - 1e-12) {
        // Identical rows: one-step regeneration. R can be any kernel; use
        // psi replicated so the decomposition is deterministic.
        d.p = 1.0;
        for (int j = 0; j < n; ++j) d.psi[j] = col_min[j] / p;
        d.residual = Mat(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) d.residual(i, j) = d.psi[j];
        return d;
    }
    d.p = p;
    for (int j = 0; j < n; ++j) d.psi[j] = col_min[j] / p;
    d.residual = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = (pm(i, j) - p * d.psi[j]) / (1.0 - p);
            d.residual(i, j) = std::max(0.0, v);
            row_sum += d.residual(i, j);
        }
        // Row sums are 1 up to rounding; renormalize the dust.
        for (int j = 0; j < n; ++j) d.residual(i, j) /= row_sum;
    }
    return d;
}

// Wielandt's bound: a primitive n-state kernel has strictly positive power
// by m = n^2 - 2n + 2, so searching that far certifies (or refutes at this
// horizon) uniform ergodicity.
inline int ergodicity_search_bound(int n) { return std::max(1, n * n - 2 * n + 2); }

}  // namespace detail

// Smallest m <= m_max with positive column-min mass, or nullopt.
inline std::optional<int> first_minorized_power(KernelPowerCache& cache, int m_max) {
    for (int m = 1; m <= m_max; ++m)
        if (detail::column_min_mass(cache.power(m)) > 0.0) return m;
    return std::nullopt;
}

// Unique stationary distribution of a uniformly ergodic kernel. Ergodicity
// is certified first by a minorization search (up to Wielandt's bound);
// reducible or periodic kernels are rejected.
inline Vec stationary_distribution(const Mat& p) {
    if (!is_stochastic(p)) throw std::invalid_argument("stationary_distribution: not a stochastic kernel");
    const int n = p.rows();
    KernelPowerCache cache(p);
    if (!first_minorized_power(cache, detail::ergodicity_search_bound(n)))
        throw NotUniformlyErgodic("stationary_distribution: no Doeblin certificate up to Wielandt bound");

    // Solve eta (P - I) = 0 with the normalization sum(eta) = 1 replacing
    // one equation.
    Mat sys(n, n);
    Vec rhs(n, 0.0);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) sys(j, i) = p(i, j) - (i == j ? 1.0 : 0.0);
    }
    for (int i = 0; i < n; ++i) sys(n - 1, i) = 1.0;
    rhs[n - 1] = 1.0;
    Vec eta = solve_linear(sys, rhs);
    for (double& e : eta) e = std::max(0.0, e);
    double total = 0.0;
    for (double e : eta) total += e;
    for (double& e : eta) e /= total;

    const Vec push = vecmat(eta, p);
    if (max_abs_diff(push, eta) > 1e-10)
        throw std::runtime_error("stationary_distribution: residual above 1e-10");
    return eta;
}

// First t >= 1 with sup_s TV(P^t(s,.), eta) <= 1/4, by incremental powers.
inline int mixing_time(const Mat& p, int n_max = 100000) {
    const Vec eta = stationary_distribution(p);
    KernelPowerCache cache(p);
    for (int t = 1; t <= n_max; ++t) {
        const Mat& pt = cache.power(t);
        double worst = 0.0;
        for (int s = 0; s < p.rows(); ++s) worst = std::max(worst, tv_distance(pt.row(s), eta));
        if (worst <= 0.25) return t;
    }
    throw NotUniformlyErgodic("mixing_time: threshold 1/4 not reached by n_max");
}

// Best m/p over 1 <= m <= m_max with the column-minimum certificate at each
// m. Returns the value and its certificate; boundary_hit (optional out)
// reports when the argmin sits on the search horizon.
inline std::pair<double, DoeblinDecomposition> minorization_time(const Mat& p, int m_max,
                                                                 bool* boundary_hit = nullptr) {
    if (m_max < 1) throw std::invalid_argument("minorization_time: m_max must be >= 1");
    if (!is_stochastic(p)) throw std::invalid_argument("minorization_time: not a stochastic kernel");
    KernelPowerCache cache(p);
    double best = std::numeric_limits<double>::infinity();
    int best_m = -1;
    for (int m = 1; m <= m_max; ++m) {
        const double pm = detail::column_min_mass(cache.power(m));
        if (pm <= 0.0) continue;
        const double value = static_cast<double>(m) / pm;
        if (value < best) {
            best = value;
            best_m = m;
        }
    }
    if (best_m < 0)
        throw NotUniformlyErgodic("minorization_time: no minorization found up to m_max=" + std::to_string(m_max));
    if (boundary_hit) *boundary_hit = (best_m == m_max);
    DoeblinDecomposition cert = detail::decomposition_at(cache.power(best_m), best_m);
    return {cert.minorization_value(), std::move(cert)};
}

// Smallest m with inf_s P^m(s,.) >= q*phi(.) entrywise.
inline int separation_time(const Mat& p, double q, std::span<const double> phi, int m_max) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("separation_time: q must lie in (0,1]");
    if (static_cast<int>(phi.size()) != p.rows()) throw std::invalid_argument("separation_time: phi dimension mismatch");
    KernelPowerCache cache(p);
    const int n = p.rows();
    for (int m = 1; m <= m_max; ++m) {
        const Mat& pm = cache.power(m);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = 0; j < n; ++j)
                if (pm(i, j) < q * phi[j] - 1e-12) { ok = false; break; }
        if (ok) return m;
    }
    throw NotUniformlyErgodic("separation_time: no separating power up to m_max");
}

struct MixingReport {
    int t_mix = 0;
    double t_minorize = 0.0;
    DoeblinDecomposition best_decomposition;
    Vec stationary;
    std::vector<std::pair<int, double>> tv_decay;  // (n, sup_s TV(P^n(s,.), eta))
    bool minorize_le_22_tmix = false;
    bool tmix_le_log16_mp = false;
    bool decay_dominated = false;
    bool search_boundary_hit = false;
};

// Computes both mixing metrics and checks the constant-factor equivalences
// plus the geometric TV decay bound 2(1-p)^floor(n/m). The minorization
// search horizon is 4*t_mix: the equivalence proof exhibits a certificate
// at m = 2*t_mix already, so the true optimum cannot need more.
inline MixingReport verify_equivalence(const Mat& p) {
    MixingReport rep;
    rep.stationary = stationary_distribution(p);

    // An a-priori bound on t_mix from the first certified power.
    KernelPowerCache cache(p);
    const auto m0 = first_minorized_power(cache, detail::ergodicity_search_bound(p.rows()));
    if (!m0) throw NotUniformlyErgodic("verify_equivalence: kernel is not uniformly ergodic");
    const double p0 = detail::column_min_mass(cache.power(*m0));
    const int n_max = static_cast<int>(std::ceil(std::log(16.0) * (*m0) / p0)) + 1;

    rep.t_mix = mixing_time(p, n_max);
    auto [tm, cert] = minorization_time(p, 4 * rep.t_mix, &rep.search_boundary_hit);
    rep.t_minorize = tm;
    rep.best_decomposition = std::move(cert);

    rep.minorize_le_22_tmix = rep.t_minorize <= 22.0 * rep.t_mix + 1e-9;
    rep.tmix_le_log16_mp = rep.t_mix <= std::log(16.0) * rep.t_minorize + 1e-9;

    const int m = rep.best_decomposition.m;
    const double pprob = rep.best_decomposition.p;
    rep.decay_dominated = true;
    for (int n = 1; n <= 10 * m; ++n) {
        const Mat& pn = cache.power(n);
        double worst = 0.0;
        for (int s = 0; s < p.rows(); ++s) worst = std::max(worst, tv_distance(pn.row(s), rep.stationary));
        rep.tv_decay.emplace_back(n, worst);
        const double bound = 2.0 * std::pow(1.0 - pprob, std::floor(static_cast<double>(n) / m));
        if (worst > bound + 1e-10) rep.decay_dominated = false;
    }
    return rep;
}

// Residual of the decomposition identity P^m = p*psi + (1-p)*R.
inline double decomposition_residual(const DoeblinDecomposition& d, const Mat& p) {
    KernelPowerCache cache(p);
    const Mat& pm = cache.power(d.m);
    double worst = 0.0;
    for (int i = 0; i < pm.rows(); ++i)
        for (int j = 0; j < pm.cols(); ++j) {
            const double recon = d.p * d.psi[j] + (1.0 - d.p) * d.residual(i, j);
            worst = std::max(worst, std::fabs(recon - pm(i, j)));
        }
    return worst;
}

}  // namespace mdplab

#endif
