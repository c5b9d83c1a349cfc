#ifndef MDPLAB_STATS_HPP
#define MDPLAB_STATS_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mdplab {

// Compensated (Kahan) summation so aggregates are stable and independent of
// compiler reassociation.
inline double kahan_sum(std::span<const double> xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    return kahan_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance (n-1 denominator).
inline double sample_variance(std::span<const double> xs) {
    const size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("sample_variance: need at least 2 samples");
    const double m = mean(xs);
    std::vector<double> sq(n);
    for (size_t i = 0; i < n; ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
    return kahan_sum(sq) / static_cast<double>(n - 1);
}

// Standard error of the sample mean.
inline double mean_stderr(std::span<const double> xs) {
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

// Asymptotic standard error of the sample variance: Var(s^2) ~ (m4 - s^4)/n.
inline double variance_stderr(std::span<const double> xs) {
    const size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("variance_stderr: need at least 2 samples");
    const double m = mean(xs);
    const double s2 = sample_variance(xs);
    std::vector<double> q(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = xs[i] - m;
        q[i] = d * d * d * d;
    }
    const double m4 = kahan_sum(q) / static_cast<double>(n);
    return std::sqrt(std::max(0.0, m4 - s2 * s2) / static_cast<double>(n));
}

struct CovEstimate {
    double cov = 0.0;
    double stderr = 0.0;
    size_t n = 0;
};

// Sample covariance with its asymptotic standard error
// Var(cov_hat) ~ (E[(X-mx)^2 (Y-my)^2] - cov^2)/n.
inline CovEstimate sample_covariance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("sample_covariance: length mismatch");
    const size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("sample_covariance: need at least 2 samples");
    const double mx = mean(xs), my = mean(ys);
    std::vector<double> prod(n), prod_sq(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = (xs[i] - mx) * (ys[i] - my);
        prod[i] = d;
        prod_sq[i] = d * d;
    }
    CovEstimate out;
    out.n = n;
    out.cov = kahan_sum(prod) / static_cast<double>(n - 1);
    const double second = kahan_sum(prod_sq) / static_cast<double>(n);
    out.stderr = std::sqrt(std::max(0.0, second - out.cov * out.cov) / static_cast<double>(n));
    return out;
}

inline double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    const double vx = sample_variance(xs), vy = sample_variance(ys);
    if (vx == 0.0 || vy == 0.0) return 0.0;
    return sample_covariance(xs, ys).cov / std::sqrt(vx * vy);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    size_t n = 0;
};

// Ordinary least squares y = a + b x with the textbook slope standard error.
inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("least_squares: length mismatch");
    const size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("least_squares: need at least 2 points");
    const double mx = mean(xs), my = mean(ys);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate x grid");
    LineFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double ss_res = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
            ss_res += r * r;
        }
        fit.slope_stderr = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

// Acklam's rational approximation of the standard normal quantile,
// good to ~1e-9 absolute.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Wilson-Hilferty chi-square quantile; ample for goodness-of-fit gating.
inline double chi_square_quantile(int df, double upper_tail) {
    if (df < 1) throw std::invalid_argument("chi_square_quantile: df must be >= 1");
    const double z = normal_quantile(1.0 - upper_tail);
    const double t = 2.0 / (9.0 * df);
    const double base = 1.0 - t + z * std::sqrt(t);
    return df * base * base * base;
}

struct GofResult {
    double statistic = 0.0;
    double threshold = 0.0;
    int df = 0;
    bool pass = false;
};

// Pearson chi-square goodness-of-fit at the given level. Bins with expected
// count below 5 are pooled into the smallest-expectation bin.
inline GofResult chi_square_gof(std::span<const long long> counts, std::span<const double> probs,
                                double level) {
    if (counts.size() != probs.size()) throw std::invalid_argument("chi_square_gof: length mismatch");
    long long total = 0;
    for (long long c : counts) total += c;
    if (total <= 0) throw std::invalid_argument("chi_square_gof: empty sample");

    std::vector<double> exp_cnt;
    std::vector<double> obs_cnt;
    double pooled_exp = 0.0, pooled_obs = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * static_cast<double>(total);
        if (e < 5.0) {
            pooled_exp += e;
            pooled_obs += static_cast<double>(counts[i]);
        } else {
            exp_cnt.push_back(e);
            obs_cnt.push_back(static_cast<double>(counts[i]));
        }
    }
    if (pooled_exp > 0.0) {
        exp_cnt.push_back(pooled_exp);
        obs_cnt.push_back(pooled_obs);
    }
    GofResult out;
    out.df = static_cast<int>(exp_cnt.size()) - 1;
    if (out.df < 1) {
        // Single effective bin: nothing to test.
        out.pass = true;
        return out;
    }
    for (size_t i = 0; i < exp_cnt.size(); ++i) {
        if (exp_cnt[i] <= 0.0) {
            if (obs_cnt[i] > 0.0) { out.statistic = HUGE_VAL; break; }
            continue;
        }
        const double d = obs_cnt[i] - exp_cnt[i];
        out.statistic += d * d / exp_cnt[i];
    }
    out.threshold = chi_square_quantile(out.df, level);
    out.pass = out.statistic <= out.threshold;
    return out;
}

// Exact Binomial(n, p) CDF P(X <= k); n stays small here.
inline double binomial_cdf(int k, int n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_cdf: bad parameters");
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    double log_pmf = n * std::log1p(-p);  // P(X = 0)
    double cdf = std::exp(log_pmf);
    for (int i = 1; i <= k; ++i) {
        log_pmf += std::log(static_cast<double>(n - i + 1)) - std::log(static_cast<double>(i)) +
                   std::log(p) - std::log1p(-p);
        cdf += std::exp(log_pmf);
    }
    return std::min(1.0, cdf);
}

// One-sided 95% binomial lower confidence bound on the success probability
// (normal approximation on the Wilson score interval).
inline double binomial_lower_bound(int successes, int trials, double confidence = 0.95) {
    if (trials <= 0) throw std::invalid_argument("binomial_lower_bound: trials must be positive");
    const double z = normal_quantile(confidence);
    const double phat = static_cast<double>(successes) / trials;
    const double denom = 1.0 + z * z / trials;
    const double centre = phat + z * z / (2.0 * trials);
    const double margin = z * std::sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials));
    return (centre - margin) / denom;
}

}  // namespace mdplab

#endif
