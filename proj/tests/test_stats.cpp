#include <mdplab/matrix.hpp>
#include <mdplab/rng.hpp>
#include <mdplab/stats.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace mdplab;

TEST(Stats, MeanVariance) {
    const Vec xs = {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
    EXPECT_DOUBLE_EQ(mean(xs), 5.0);
    EXPECT_NEAR(sample_variance(xs), 32.0 / 7.0, 1e-14);
}

TEST(Stats, LeastSquaresExactLine) {
    const Vec xs = {1.0, 2.0, 3.0, 4.0};
    Vec ys;
    for (double x : xs) ys.push_back(3.0 - 2.0 * x);
    const LineFit fit = least_squares(xs, ys);
    EXPECT_NEAR(fit.slope, -2.0, 1e-13);
    EXPECT_NEAR(fit.intercept, 3.0, 1e-13);
    EXPECT_NEAR(fit.slope_stderr, 0.0, 1e-12);
}

TEST(Stats, LeastSquaresDegenerate) {
    const Vec xs = {1.0, 1.0, 1.0};
    const Vec ys = {1.0, 2.0, 3.0};
    EXPECT_THROW(least_squares(xs, ys), std::invalid_argument);
}

TEST(Stats, NormalQuantile) {
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-8);
    EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-12);
    EXPECT_NEAR(normal_quantile(0.99), 2.3263478740408408, 1e-8);
    EXPECT_NEAR(normal_quantile(0.01), -2.3263478740408408, 1e-8);
}

TEST(Stats, ChiSquareQuantile) {
    // True 0.99-quantiles: df=1: 6.635, df=3: 11.345, df=7: 18.475
    EXPECT_NEAR(chi_square_quantile(3, 0.01), 11.345, 0.2);
    EXPECT_NEAR(chi_square_quantile(7, 0.01), 18.475, 0.15);
}

TEST(Stats, BinomialCdf) {
    EXPECT_NEAR(binomial_cdf(1, 3, 0.5), 0.5, 1e-12);
    EXPECT_NEAR(binomial_cdf(3, 3, 0.5), 1.0, 1e-12);
    EXPECT_NEAR(binomial_cdf(0, 2, 0.25), 0.5625, 1e-12);
    // P(Bin(50, 0.9) >= 44) = 1 - P(<= 43) should be well above 0.05:
    EXPECT_GT(1.0 - binomial_cdf(43, 50, 0.9), 0.5);
}

TEST(Stats, BinomialLowerBound) {
    // 44/50 successes: the one-sided 95% lower bound clears 0.9 is the
    // acceptance threshold used for the learner criterion.
    EXPECT_GE(binomial_lower_bound(50, 50), binomial_lower_bound(44, 50));
    EXPECT_GT(binomial_lower_bound(50, 50), 0.92);
}

TEST(Stats, ChiSquareGofAcceptsTrueDistribution) {
    SplitMix64 rng(5);
    const Vec probs = {0.5, 0.3, 0.2};
    std::vector<long long> counts(3, 0);
    for (int i = 0; i < 20000; ++i) ++counts[sample_categorical(probs, rng)];
    const GofResult r = chi_square_gof(counts, probs, 0.01);
    EXPECT_TRUE(r.pass) << "stat=" << r.statistic << " thr=" << r.threshold;
}

TEST(Stats, ChiSquareGofRejectsWrongDistribution) {
    SplitMix64 rng(6);
    const Vec truth = {0.7, 0.2, 0.1};
    const Vec claim = {0.5, 0.3, 0.2};
    std::vector<long long> counts(3, 0);
    for (int i = 0; i < 20000; ++i) ++counts[sample_categorical(truth, rng)];
    const GofResult r = chi_square_gof(counts, claim, 0.01);
    EXPECT_FALSE(r.pass);
}

TEST(Stats, CovarianceOfIndependentNearZero) {
    SplitMix64 rng(9);
    Vec xs, ys;
    for (int i = 0; i < 5000; ++i) {
        xs.push_back(rng.uniform());
        ys.push_back(rng.uniform());
    }
    const CovEstimate c = sample_covariance(xs, ys);
    EXPECT_LE(std::fabs(c.cov), 3.0 * c.stderr);
}

TEST(Stats, KahanStability) {
    Vec xs(1000000, 0.1);
    xs.push_back(1e12);
    xs.push_back(-1e12);
    EXPECT_NEAR(kahan_sum(xs), 100000.0, 1e-6);
}
