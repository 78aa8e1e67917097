#include <gtest/gtest.h>

#include <cmath>

#include "sipkit/rng.hpp"
#include "sipkit/stats.hpp"

using namespace sipkit;

TEST(CompensatedSum, RecoversCancellation) {
    std::vector<double> xs{1.0, 1e100, 1.0, -1e100};
    EXPECT_EQ(compensated_sum(xs), 2.0);
}

TEST(CompensatedSum, ManySmallTerms) {
    CompensatedSum s;
    for (int i = 0; i < 10000000; ++i) s += 0.1;
    EXPECT_NEAR(s.value(), 1e6, 1e-8);
}

TEST(BatchMeans, ConstantSampleHasZeroError) {
    std::vector<double> xs(1000, 3.5);
    const auto m = batch_means(xs);
    EXPECT_DOUBLE_EQ(m.mean, 3.5);
    EXPECT_DOUBLE_EQ(m.se, 0.0);
    EXPECT_EQ(m.count, 1000u);
}

TEST(BatchMeans, MatchesNaiveForIid) {
    RngStream r(3, 0);
    std::vector<double> xs(64000);
    for (auto& x : xs) x = r.uniform();
    const auto b = batch_means(xs);
    const auto n = naive_mean(xs);
    EXPECT_DOUBLE_EQ(b.mean, n.mean);
    EXPECT_NEAR(b.se / n.se, 1.0, 0.35);
    EXPECT_NEAR(n.se, std::sqrt(1.0 / 12.0 / 64000.0), 1e-4);
}

TEST(BatchMeans, SmallSampleFallsBack) {
    std::vector<double> xs{1.0, 2.0, 3.0};
    const auto b = batch_means(xs);
    const auto n = naive_mean(xs);
    EXPECT_DOUBLE_EQ(b.se, n.se);
}

TEST(LpNorm, UniformOracle) {
    // (E U^3)^{1/3} = 4^{-1/3} for U uniform on [0, 1].
    RngStream r(4, 0);
    std::vector<double> xs(200000);
    for (auto& x : xs) x = r.uniform();
    const auto e = lp_norm(xs, 3.0);
    EXPECT_NEAR(e.value, std::pow(0.25, 1.0 / 3.0), 4 * e.se);
    EXPECT_GT(e.se, 0.0);
}

TEST(LpNorm, ZeroSamples) {
    std::vector<double> xs(100, 0.0);
    const auto e = lp_norm(xs, 2.0);
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.se, 0.0);
}

TEST(ChiSquare, SurvivalFunctionKnownValues) {
    EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-9);
    EXPECT_NEAR(chi_square_sf(18.307038053275146, 10), 0.05, 1e-9);
    EXPECT_NEAR(chi_square_sf(0.0, 4), 1.0, 1e-15);
}

TEST(ChiSquare, DependentTableRejected) {
    std::vector<std::vector<double>> t{{100, 0}, {0, 100}};
    EXPECT_LT(chi_square_independence(t).p_value, 1e-10);
}

TEST(KsDistance, IdenticalAndDisjoint) {
    std::vector<double> a{0.1, 0.2, 0.3}, b{0.1, 0.2, 0.3}, c{5, 6, 7};
    EXPECT_DOUBLE_EQ(ks_distance(a, b), 0.0);
    EXPECT_DOUBLE_EQ(ks_distance(a, c), 1.0);
}

TEST(LeastSquares, ExactLine) {
    std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const auto f = least_squares(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.residual_rms, 0.0, 1e-14);
}
