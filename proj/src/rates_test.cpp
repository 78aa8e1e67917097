#include <gtest/gtest.h>

#include <cmath>

#include "sipkit/rates.hpp"
#include "sipkit/types.hpp"

using namespace sipkit;

TEST(Kappa, ExactValues) {
    EXPECT_NEAR(kappa(3.0), 1.0, 1e-12);
    EXPECT_GT(kappa(4.0), 1.390);
    EXPECT_LT(kappa(4.0), 1.4);
    EXPECT_NEAR(kappa(4.0), 1.39039, 1e-5);
    EXPECT_GT(kappa(2.001), 0.5);
    EXPECT_LT(kappa(2.001), 0.501);
    EXPECT_THROW(kappa(2.0), SpecError);
}

TEST(Tau, ExactValues) { EXPECT_NEAR(tau(4.0), 1.0, 1e-12); }

TEST(KappaTau, Comparisons) {
    for (int i = 0; i <= 179; ++i) {
        const double p = 2.1 + 0.1 * i;
        EXPECT_LT(kappa(p), tau(p) + 0.5) << p;
        EXPECT_LT(kappa(p), (p + 4.0) / 4.0) << p;
    }
}

TEST(Feasibility, FeasibleWitness) {
    const auto c = feasibility(4.0, 1.5);
    ASSERT_TRUE(c.feasible);
    ASSERT_TRUE(c.witness);
    EXPECT_TRUE(witness_valid(4.0, 1.5, *c.witness));
    EXPECT_TRUE(witness_valid(4.0, 1.5, {1.05, 6.5}));
    EXPECT_GT(c.witness->r, 6.0);
    EXPECT_LT(c.witness->r, 7.0);
}

TEST(Feasibility, BelowKappa) {
    const auto c = feasibility(4.0, 1.3);
    EXPECT_FALSE(c.feasible);
    EXPECT_NEAR(c.quadratic, -1.36, 1e-12);
    EXPECT_EQ(c.reason, "quadratic <= 0");
}

TEST(Feasibility, BoundaryIsInfeasible) {
    const auto c = feasibility(3.0, 1.0);
    EXPECT_FALSE(c.feasible);
    EXPECT_NEAR(c.quadratic, 0.0, 1e-12);
}

TEST(Feasibility, FourGammaBelowP) {
    const auto c = feasibility(8.0, 1.9);
    EXPECT_FALSE(c.feasible);
    EXPECT_EQ(c.reason, "4 gamma <= p");
}

TEST(Feasibility, MatchesKappaThreshold) {
    for (double p : {2.5, 3.0, 4.0, 7.0, 12.0})
        for (double d : {-0.05, 0.05}) EXPECT_EQ(feasibility(p, kappa(p) + d).feasible, d > 0) << p;
}

TEST(Feasibility, GridOracleAgreesAwayFromBoundary) {
    for (double p : {3.0, 4.0, 6.0})
        for (double g : {0.8, 1.2, 1.6, 2.2}) {
            if (std::abs(g - kappa(p)) < 0.02) continue;
            EXPECT_EQ(feasibility_grid_search(p, g, 0.005), feasibility(p, g).feasible) << p << " " << g;
        }
}

TEST(LinearThresholds, Table) {
    auto t = linear_thresholds(3.0, 1.0);
    EXPECT_NEAR(t.blw, 2.0, 1e-15);
    EXPECT_NEAR(t.new_threshold, 1.5, 1e-12);
    t = linear_thresholds(6.0, 1.0);
    EXPECT_NEAR(t.blw, tau(6.0) + 1.0, 1e-15);
    EXPECT_NEAR(t.new_threshold, kappa(6.0) + 0.5, 1e-15);
    t = linear_thresholds(4.0, 0.5);
    EXPECT_NEAR(t.blw, 4.0, 1e-15);
    EXPECT_NEAR(t.new_threshold, 2 * kappa(4.0) + 0.5, 1e-14);
    EXPECT_NEAR(t.new_threshold, 3.28, 0.01);
    for (double p : {3.0, 4.0, 6.0})
        for (double b : {1.0, 0.5}) EXPECT_TRUE(linear_thresholds(p, b).new_below_blw);
    EXPECT_THROW(linear_thresholds(4.0, 1.5), SpecError);
}

TEST(SigmaZero, Examples) {
    for (double p = 2.1; p < 20; p += 0.3) {
        const auto v = sigma_zero_check(p, kappa(p));
        EXPECT_TRUE(v.summable) << p;
        EXPECT_TRUE(v.inequality) << p;
    }
    EXPECT_FALSE(sigma_zero_check(3.0, 0.7).summable);
    const auto v = sigma_zero_check(1.0 + 2.0 * std::sqrt(2.0), 1.0);
    EXPECT_NEAR(v.rhs, 1.0, 1e-12);
    EXPECT_TRUE(v.inequality);
}
