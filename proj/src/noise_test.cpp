#include <gtest/gtest.h>

#include <cmath>

#include "sipkit/noise.hpp"
#include "sipkit/types.hpp"

using namespace sipkit;

TEST(NoiseSpec, ProbabilitiesMustSumToOne) {
    EXPECT_THROW(NoiseSpec(FiniteAlphabet{{{0.0}, {1.0}}, {0.5, 0.5 + 1e-9}}), SpecError);
    NoiseSpec ok(FiniteAlphabet{{{0.0}, {1.0}}, {0.25, 0.75}});
    EXPECT_NO_THROW(ok.validate());
}

TEST(NoiseSpec, ProbabilitiesMustBePositive) {
    EXPECT_THROW(NoiseSpec(FiniteAlphabet{{{0.0}, {1.0}, {2.0}}, {0.5, 0.5, 0.0}}), SpecError);
}

TEST(NoiseSpec, SymbolsMustBeDistinct) {
    EXPECT_THROW(NoiseSpec(FiniteAlphabet{{{1.0}, {1.0}}, {0.5, 0.5}}), SpecError);
}

TEST(NoiseSpec, TwoPointMoments) {
    const auto n = NoiseSpec::two_point(2.0);
    EXPECT_DOUBLE_EQ(n.mean(), 0.0);
    EXPECT_DOUBLE_EQ(n.abs_moment(3.0), 8.0);
    EXPECT_DOUBLE_EQ(n.lp_norm(5.0), 2.0);
    EXPECT_DOUBLE_EQ(n.sup_abs(), 2.0);
}

TEST(NoiseSpec, UniformMoments) {
    const auto n = NoiseSpec::uniform(-1.0, 1.0);
    EXPECT_NEAR(n.lp_norm(2.0), std::sqrt(1.0 / 3.0), 1e-12);
    EXPECT_NEAR(n.abs_moment(1.0), 0.5, 1e-12);
}

TEST(NoiseSpec, GaussianMoments) {
    const auto n = NoiseSpec::gaussian(0.0, 1.0);
    EXPECT_NEAR(n.abs_moment(2.0), 1.0, 1e-10);
    EXPECT_NEAR(n.abs_moment(1.0), std::sqrt(2.0 / M_PI), 1e-10);
    EXPECT_TRUE(std::isinf(n.sup_abs()));
}

TEST(NoiseSpec, FiniteDrawFrequencies) {
    NoiseSpec n(FiniteAlphabet{{{0.0}, {1.0}, {2.0}}, {0.2, 0.3, 0.5}});
    n.validate();
    RngStream r(1, 2);
    std::vector<int> counts(3, 0);
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) ++counts[n.draw_symbol(r)];
    EXPECT_NEAR(counts[0] / double(draws), 0.2, 0.005);
    EXPECT_NEAR(counts[1] / double(draws), 0.3, 0.005);
    EXPECT_NEAR(counts[2] / double(draws), 0.5, 0.005);
    EXPECT_EQ(n.alphabet_size(), 3u);
    EXPECT_DOUBLE_EQ(n.symbol_value(2), 2.0);
}
