#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sipkit/coupling.hpp"

using namespace sipkit;
using std::numbers::pi;

namespace {
LinearProcess geometric(int terms = 64) {
    LinearProcess lp;
    for (int i = 0; i < terms; ++i) lp.coefficients.push_back(std::ldexp(1.0, -i));
    lp.depth = terms;
    return lp;
}
Model doubling_cos() { return make_model(doubling_map(), Observable::cosine(1), true); }
PiecewiseAffine halves() { return PiecewiseAffine{{0.5, 0.5}, {0.0, 0.5}}; }
}  // namespace

TEST(StarPair, DoublingLipschitzPathwise) {
    const auto m = doubling_cos();
    for (std::uint64_t i = 0; i < 2000; ++i) {
        RngStream r(8, i);
        const auto pp = simulate_star_pair(m, 8, r);
        // |X_n - X*_n| <= 2 pi 2^{-n} |u - v| with |u - v| <= 1
        for (int n = 1; n <= 8; ++n)
            EXPECT_LE(std::abs(pp.x[n - 1] - pp.x_star[n - 1]), 2 * pi * std::ldexp(1.0, -n) + 1e-12);
    }
}

TEST(StarPair, AffineBoundPathwise) {
    const auto h = Observable::piecewise_linear({0.0, 0.5, 1.0}, {0.0, 0.5, 0.0});
    const auto m = make_model(halves(), h, true);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        RngStream r(9, i);
        const auto pp = simulate_star_pair(m, 6, r);
        for (int n = 1; n <= 6; ++n)
            EXPECT_LE(std::abs(pp.x[n - 1] - pp.x_star[n - 1]), 2 * std::ldexp(1.0, -n) + 1e-12);
    }
}

TEST(WuPair, WhiteNoiseHasNoDependence) {
    LinearProcess lp;
    lp.coefficients = {1.0};
    const auto m = make_model(lp, Observable(), false);
    RngStream r(1, 1);
    const auto pp = simulate_wu_pair(m, 5, r);
    for (int n = 0; n < 5; ++n) EXPECT_EQ(pp.x[n], pp.x_star[n]);
}

TEST(WuPair, GeometricOnlyOneTermDiffers) {
    const auto m = make_model(geometric(), Observable(), false);
    for (std::uint64_t i = 0; i < 200; ++i) {
        RngStream r(2, i);
        const auto pp = simulate_wu_pair(m, 6, r);
        const double d1 = std::abs(pp.x[0] - pp.x_star[0]);
        EXPECT_TRUE(d1 == 0.0 || std::abs(d1 - 1.0) < 1e-14);  // 2^{-1} |eps_0 - eps_0'|
        for (int n = 2; n <= 6; ++n)
            EXPECT_NEAR(std::abs(pp.x[n - 1] - pp.x_star[n - 1]), d1 * std::ldexp(1.0, 1 - n), 1e-14);
    }
}

TEST(EstimateCoefficient, LinearStarClosedForm) {
    const auto m = make_model(geometric(), Observable(), false);
    const auto table = sample_differences(m, CoefficientKind::Star, 8, 40000, 5, 4);
    for (int n = 1; n <= 8; ++n) {
        const auto e = estimate_from_table(m, table, n, 2.0, CoefficientKind::Star);
        const double truth = std::ldexp(1.0, -n) * std::sqrt(8.0 / 3.0);
        EXPECT_NEAR(e.estimate, truth, 4 * e.se) << n;
    }
}

TEST(EstimateCoefficient, LinearWuClosedForm) {
    const auto m = make_model(geometric(), Observable(), false);
    const auto e = estimate_coefficient(m, 3, 2.0, CoefficientKind::Wu, 40000, 6);
    EXPECT_NEAR(e.estimate, std::ldexp(1.0, -3) * std::sqrt(2.0), 4 * e.se);
    ASSERT_TRUE(e.analytic_bound);
    EXPECT_NEAR(*e.analytic_bound, 0.25, 1e-15);
}

TEST(EstimateCoefficient, IdenticalStartsGiveZero) {
    LinearProcess lp;
    lp.coefficients = {1.0};
    const auto m = make_model(lp, Observable(), false);
    const auto e = estimate_coefficient(m, 2, 2.0, CoefficientKind::Star, 2000, 1);
    EXPECT_EQ(e.estimate, 0.0);
    EXPECT_EQ(e.ci, 0.0);
}

TEST(EstimateCoefficient, MarkovIsTwiceStar) {
    const auto m = doubling_cos();
    const auto table = sample_differences(m, CoefficientKind::Star, 4, 5000, 7);
    const auto s = estimate_from_table(m, table, 3, 2.0, CoefficientKind::Star);
    const auto d = estimate_from_table(m, table, 3, 2.0, CoefficientKind::Markov);
    EXPECT_DOUBLE_EQ(d.estimate, 2.0 * s.estimate);
}

TEST(EstimateCoefficient, DoublingWithinAffineBound) {
    const auto m = doubling_cos();
    const auto table = sample_differences(m, CoefficientKind::Star, 10, 20000, 4);
    for (int n = 1; n <= 10; ++n) {
        const auto d = estimate_from_table(m, table, n, 2.0, CoefficientKind::Markov);
        EXPECT_LE(d.estimate - d.ci, 4 * std::sin(pi * std::ldexp(1.0, -n)));
    }
}

TEST(EstimateCoefficient, WorkerCountInvariant) {
    const auto m = doubling_cos();
    const auto a = estimate_coefficient(m, 3, 3.0, CoefficientKind::Star, 3000, 99, 1);
    const auto b = estimate_coefficient(m, 3, 3.0, CoefficientKind::Star, 3000, 99, 8);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.se, b.se);
}

TEST(BoundLinear, PlugInValues) {
    const auto lp = geometric();
    const auto b = bound_linear(lp, 3, 3.0);
    EXPECT_NEAR(b.wu, 0.25, 1e-15);
    ASSERT_TRUE(b.star);
    EXPECT_NEAR(*b.star, 2.0 * std::ldexp(1.0, -3) * std::sqrt(4.0 / 3.0), 1e-15);
    EXPECT_NEAR(*b.star, 0.2887, 1e-4);
    EXPECT_FALSE(bound_linear(lp, 3, 1.5).star);
}

TEST(BoundLinear, HolderModulus) {
    LinearProcess lp;
    lp.coefficients = {1.0, 0.25};
    const auto b = bound_linear(lp, 1, 2.0, ConcaveModulus{1.0, 0.5});
    EXPECT_NEAR(b.wu, std::sqrt(0.5), 1e-15);
}

TEST(BoundLinear, AnalyticStarBoundDominatesClosedForm) {
    const auto m = make_model(geometric(), Observable(), false);
    for (int n = 1; n <= 10; ++n) {
        const auto b = analytic_bound(m, n, 2.0, CoefficientKind::Star);
        ASSERT_TRUE(b);
        EXPECT_GE(b->first, std::ldexp(1.0, -n) * std::sqrt(8.0 / 3.0));
    }
}

TEST(BoundIrf, PlugIn) {
    IrfBoundParams a;
    a.beta = {1.0, 1.0};
    a.omega1 = a.omega2 = 0.5;
    a.constant = 1.0;
    EXPECT_NEAR(bound_irf(a, 4), 0.125, 1e-15);
    IrfBoundParams b;
    b.beta = {1.0, 0.5};
    b.omega1 = 0.25;
    b.omega2 = 0.5;
    b.constant = 3.0;
    EXPECT_NEAR(bound_irf(b, 2), 1.5, 1e-15);
}

TEST(BoundIrf, DeriveRejectsBadGrowth) {
    IrfRawParams raw;
    raw.p = 2.0;
    raw.alpha = 2.0;
    raw.s = 1.0;  // s < alpha / p fails
    EXPECT_THROW(derive_irf_params(raw), SpecError);
    raw.s = 0.5;
    const auto d = derive_irf_params(raw);
    EXPECT_GT(d.omega1, 0.0);
    EXPECT_LT(d.omega1, 1.0);
    EXPECT_LT(d.omega2, 1.0);
}

TEST(BoundTorus, LipschitzAndCosine) {
    // Triangle: 1-Lipschitz on the circle.
    const auto lip = Observable::piecewise_linear({0.0, 0.5, 1.0}, {0.0, 0.5, 0.0});
    for (double p : {2.0, 3.0}) {
        ModulusEvaluator ev(lip, p, true);
        for (int n = 1; n <= 6; ++n)
            EXPECT_LE(bound_torus(doubling_map(), ev, n),
                      std::pow(2.0, 1.0 / p + 1.0) * (std::ldexp(1.0, -n) + 5e-4));
    }
    ModulusEvaluator cinf(Observable::cosine(1), kInfinity);
    ModulusEvaluator c2(Observable::cosine(1), 2.0);
    for (int n = 1; n <= 6; ++n)
        EXPECT_LE(bound_torus(doubling_map(), c2, n),
                  std::pow(2.0, 1.5) * 2 * std::sin(pi * std::ldexp(1.0, -n)) + 1e-12);
}

TEST(BoundAffine, PlugIn) {
    const auto lip = Observable::piecewise_linear({0.0, 1.0}, {0.0, 1.0});
    EXPECT_NEAR(bound_affine(halves(), ModulusEvaluator(lip, kInfinity, false), 3), 0.25, 1e-3);
    EXPECT_GE(bound_affine(halves(), ModulusEvaluator(lip, kInfinity, false), 3), 0.25);
    EXPECT_NEAR(bound_affine(halves(), ModulusEvaluator(Observable::cosine(1), kInfinity, false), 2),
                2 * 2 * std::sin(pi * 0.25), 1e-9);
    EXPECT_EQ(bound_affine(halves(), ModulusEvaluator(Observable::constant(1.0), kInfinity, false), 2),
              0.0);
}

TEST(Contraction, LinearMapRate) {
    IteratedRandomFunction f;
    f.map = StateMap::affine(0.5);
    f.noise = NoiseSpec::uniform(-1.0, 1.0);
    const auto m = make_model(f, Observable::piecewise_linear({0.0, 1.0}, {0.0, 1.0}), false);
    const auto c = estimate_contraction(m, 1.0, 8, 2000, 3);
    EXPECT_NEAR(c.rho_hat, 0.5, 1e-9);
    EXPECT_FALSE(c.warning);
}

TEST(Contraction, AffineBranchesRate) {
    const auto m = make_model(halves(), Observable::cosine(1), false);
    EXPECT_NEAR(estimate_contraction(m, 1.0, 8, 2000, 3).rho_hat, 0.5, 1e-9);
}

TEST(Contraction, IdentityWarns) {
    IteratedRandomFunction f;
    f.map = StateMap::identity();
    f.contraction = {1.0, 0.9, 1.0};
    const auto m = make_model(f, Observable::piecewise_linear({0.0, 1.0}, {0.0, 1.0}), false);
    EXPECT_TRUE(estimate_contraction(m, 1.0, 8, 500, 3).warning);
}

TEST(WuVsStar, GeometricLinearProcess) {
    const auto m = make_model(geometric(), Observable(), false);
    for (double p : {2.0, 3.0})
        for (const auto& row : check_wu_vs_star(m, 12, p, 20000, 10, 4)) EXPECT_TRUE(row.holds) << row.n;
}

TEST(WuVsStar, AbsoluteValueTransform) {
    auto lp = geometric();
    lp.g = ScalarTransform::absolute();
    const auto m = make_model(lp, Observable(), false);
    for (const auto& row : check_wu_vs_star(m, 12, 2.0, 20000, 11, 4)) EXPECT_TRUE(row.holds) << row.n;
}

TEST(WuVsStar, RejectsNonLinearFamilies) {
    EXPECT_THROW(check_wu_vs_star(doubling_cos(), 3, 2.0, 1000, 1), UnsupportedFamily);
}

TEST(Pathwise, AffineFixturesHaveNoViolations) {
    const auto h = Observable::piecewise_linear({0.0, 0.5, 1.0}, {0.0, 0.5, 0.0});
    const auto r = pathwise_affine_check(make_model(halves(), h, true), 10, 5000, 12, 4);
    EXPECT_EQ(r.violations, 0u);
    EXPECT_EQ(r.checked, 50000u);
    EXPECT_GE(r.worst_margin, 0.0);
    EXPECT_EQ(pathwise_affine_check(doubling_cos(), 10, 5000, 13, 4).violations, 0u);
}
