#include <mdplab/hard_instances.hpp>
#include <mdplab/mixing.hpp>
#include <mdplab/stats.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace mdplab;

TEST(HardInstance, ConstructionAndRegionFlag) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    EXPECT_TRUE(h.in_lower_bound_region);
    EXPECT_DOUBLE_EQ(h.t_minorize(), 10.0);
    EXPECT_FALSE(make_hard_instance(0.2, 0.9).in_lower_bound_region);
    EXPECT_FALSE(make_hard_instance(0.05, 0.8).in_lower_bound_region);
    EXPECT_THROW(make_hard_instance(0.0, 0.9), std::invalid_argument);
    EXPECT_THROW(make_hard_instance(1.0, 0.9), std::invalid_argument);
}

TEST(HardInstance, ClosedFormValues) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    auto [v, q, pi] = solve_value_iteration(h.mdp, 1e-11);
    const auto [v1, v2] = hard_instance_values(h);
    EXPECT_NEAR(v.values[0], v1, 1e-9);
    EXPECT_NEAR(v.values[1], v2, 1e-9);
    EXPECT_NEAR(v.values[0] + v.values[1], 10.0, 1e-8);
    EXPECT_NEAR(v.values[0] - v.values[1], 1.0 / 0.28, 1e-9);
    // both actions identical: q*(s, a1) = q*(s, a2)
    EXPECT_NEAR(q(0, 0), q(0, 1), 1e-12);
    EXPECT_NEAR(q(1, 0), q(1, 1), 1e-12);
}

TEST(HardInstance, HalfPGivesOneStepRegeneration) {
    const HardInstance h = make_hard_instance(0.5, 0.9);
    const auto [t, cert] = minorization_time(h.mdp.policy_kernel(Policy{{0, 0}}), 5);
    EXPECT_NEAR(t, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(cert.p, 1.0);
}

TEST(HardInstance, MinorizationAtMostInversePee) {
    for (double p : {0.02, 0.05, 0.1}) {
        const HardInstance h = make_hard_instance(p, 0.9);
        const auto [t, cert] = minorization_time(h.mdp.policy_kernel(Policy{{0, 1}}), 20);
        EXPECT_LE(t, 1.0 / p + 1e-9);
        EXPECT_NEAR(t, 1.0 / (2.0 * p), 1e-9);  // column-min certificate (1, 2p)
    }
}

TEST(NuSquared, ClosedFormMatchesMatrixPath) {
    for (double p : {0.01, 0.02, 0.05, 0.1, 0.5}) {
        for (double gamma : {0.9, 0.95, 0.99}) {
            const HardInstance h = make_hard_instance(p, gamma);
            auto [v, q, pi] = solve_value_iteration(h.mdp, 1e-12);
            const VarianceReport rep = exact_variance_report(h.mdp, pi);
            const double closed = nu_squared_closed_form(h);
            EXPECT_NEAR(rep.nu_sq(0, 0), closed, 1e-8 * closed)
                << "p=" << p << " gamma=" << gamma;
        }
    }
}

TEST(NuSquared, NearDeterministicLimit) {
    const HardInstance h = make_hard_instance(1e-6, 0.9);
    auto [v, q, pi] = solve_value_iteration(h.mdp, 1e-12);
    const VarianceReport rep = exact_variance_report(h.mdp, pi);
    const double closed = nu_squared_closed_form(h);
    EXPECT_NEAR(rep.nu_sq(0, 0), closed, 1e-6 * closed);
}

TEST(NuSquared, ActionLabelSwapSymmetry) {
    // The two actions are interchangeable: relabelling maps the policy
    // "always a1" to "always a2", so nu^2 under pi=a1 at the played action
    // equals nu^2 under pi=a2 at its played action (and likewise for the
    // off-policy entries). At a FIXED policy the two actions' nu^2 differ:
    // the played action's resolvent row carries the identity inside the
    // square.
    const HardInstance h = make_hard_instance(0.1, 0.9);
    const VarianceReport under_a1 = exact_variance_report(h.mdp, Policy{{0, 0}});
    const VarianceReport under_a2 = exact_variance_report(h.mdp, Policy{{1, 1}});
    EXPECT_NEAR(under_a1.nu_sq(0, 0), under_a2.nu_sq(0, 1), 1e-9);
    EXPECT_NEAR(under_a1.nu_sq(0, 1), under_a2.nu_sq(0, 0), 1e-9);
    EXPECT_NEAR(under_a1.nu_sq(1, 0), under_a2.nu_sq(1, 1), 1e-9);
    EXPECT_GT(under_a1.nu_sq(0, 0), under_a1.nu_sq(0, 1));
    // the sup over entries is what the lower bound uses; it is
    // policy-independent here
    EXPECT_NEAR(max_abs(under_a1.nu_sq.values), max_abs(under_a2.nu_sq.values), 1e-9);
}

TEST(FBound, BoundaryValueAndRegion) {
    // At gamma = 1-p the closed form reduces to (1-p)(2p^2-6p+5)/(3-2p)^4.
    const FBoundCheck fb = f_lower_bound_check(0.1, 0.9);
    EXPECT_TRUE(fb.in_region);
    EXPECT_TRUE(fb.passes);
    const double expect = 0.9 * (2 * 0.01 - 0.6 + 5.0) / std::pow(2.8, 4.0);
    EXPECT_NEAR(fb.f_value, expect, 1e-12);
    EXPECT_GE(fb.f_value, 2.0 / 81.0);
}

TEST(FBound, GridSweepPassesAndMonotone) {
    for (double p : {0.01, 0.02, 0.05, 0.08, 0.1}) {
        double prev = 0.0;
        for (double gamma : {0.9, 0.93, 0.96, 0.99, 0.999}) {
            if (gamma < 1.0 - p) continue;
            const FBoundCheck fb = f_lower_bound_check(p, gamma);
            EXPECT_TRUE(fb.passes) << "p=" << p << " gamma=" << gamma;
            EXPECT_GE(fb.f_value, prev - 1e-12);  // nondecreasing in gamma
            prev = fb.f_value;
        }
    }
    // numerical derivative in gamma is positive on the region
    for (double p : {0.02, 0.1}) {
        const double g = 0.95, dg = 1e-5;
        const double fplus = f_lower_bound_check(p, g + dg).f_value;
        const double fminus = f_lower_bound_check(p, g - dg).f_value;
        EXPECT_GT((fplus - fminus) / (2.0 * dg), 0.0);
    }
}

TEST(Hellinger, Examples) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    EXPECT_DOUBLE_EQ(hellinger_between_models(h.mdp, h.mdp), 0.0);
    // disjoint supports: affinity 0, distance 1
    Vec r = {0.5, 0.5, 0.5, 0.5};
    const TabularMdp m1(2, 2, r, Vec{1, 0, 1, 0, 1, 0, 1, 0}, 0.9);
    const TabularMdp m2(2, 2, r, Vec{0, 1, 0, 1, 0, 1, 0, 1}, 0.9);
    EXPECT_DOUBLE_EQ(hellinger_between_models(m1, m2), 1.0);
}

TEST(Alternative, ThresholdAndValidity) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    const long long n_min = alternative_min_n(h);
    EXPECT_EQ(n_min, 486000);  // 2 max{100, 243 * 1000}
    EXPECT_THROW(make_alternative(h, n_min - 1), std::invalid_argument);

    const AlternativeInstance alt = make_alternative(h, n_min);
    // stochasticity was enforced by the TabularMdp constructor; check the
    // perturbation bound and the Doeblin certificate for all four policies.
    EXPECT_LE(alt.max_perturbation, 0.05 + 1e-12);  // p/2
    EXPECT_GT(alt.max_perturbation, 0.0);
    for (int a0 = 0; a0 < 2; ++a0)
        for (int a1 = 0; a1 < 2; ++a1) {
            const Mat pk = alt.mdp_bar.policy_kernel(Policy{{a0, a1}});
            double mass = 0.0;
            for (int j = 0; j < 2; ++j) mass += std::min(pk(0, j), pk(1, j));
            EXPECT_GE(mass, 0.1 - 1e-12);  // still (1, p)-Doeblin
        }
    EXPECT_LE(alt.hellinger, 0.5 / std::sqrt(static_cast<double>(n_min)));
}

TEST(Alternative, VanishingPerturbation) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    const AlternativeInstance a1 = make_alternative(h, 1000000);
    const AlternativeInstance a2 = make_alternative(h, 100000000);
    EXPECT_LT(a2.max_perturbation, a1.max_perturbation);
    EXPECT_NEAR(a1.max_perturbation / a2.max_perturbation, 10.0, 0.01);  // 1/sqrt(n)
    for (size_t i = 0; i < a2.mdp_bar.kernel_table().size(); ++i)
        EXPECT_NEAR(a2.mdp_bar.kernel_table()[i], h.mdp.kernel_table()[i], 1e-3);
}

TEST(Alternative, HellingerScalesAsInverseSqrtN) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    for (long long n : {486000LL, 2 * 486000LL, 8 * 486000LL}) {
        const AlternativeInstance alt = make_alternative(h, n);
        EXPECT_LE(alt.hellinger * std::sqrt(static_cast<double>(n)), 0.5);
        EXPECT_GT(alt.hellinger, 0.0);
    }
}

TEST(Alternative, QStarGapScaling) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    const long long n0 = alternative_min_n(h);
    Vec log_n, log_gap;
    for (int i = 0; i < 5; ++i) {
        const long long n = n0 << i;
        const AlternativeInstance alt = make_alternative(h, n);
        const double gap = qstar_gap(h, alt);
        EXPECT_GT(gap, 0.0);
        log_n.push_back(std::log(static_cast<double>(n)));
        log_gap.push_back(std::log(gap));
        // sqrt(n) * gap within a wide constant band of sqrt(t)/(1-gamma)
        const double scaled = std::sqrt(static_cast<double>(n)) * gap;
        const double reference = std::sqrt(10.0) / 0.1;
        EXPECT_GT(scaled, 0.05 * reference);
        EXPECT_LT(scaled, 20.0 * reference);
    }
    const LineFit fit = least_squares(log_n, log_gap);
    EXPECT_NEAR(fit.slope, -0.5, 0.05);
}

TEST(Alternative, IdenticalInstancesHaveZeroGap) {
    const HardInstance h = make_hard_instance(0.1, 0.9);
    AlternativeInstance same{h, 1, h.mdp, 0.0, 0.0};
    EXPECT_NEAR(qstar_gap(h, same), 0.0, 1e-9);
}
