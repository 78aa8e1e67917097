#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sipkit/modulus.hpp"
#include "sipkit/rosenthal.hpp"

using namespace sipkit;

namespace {
Model doubling_cos() { return make_model(doubling_map(), Observable::cosine(1), true); }
// X_n = +1 when the leading binary digit of W_n is 1, else -1: an i.i.d. +-1 sequence.
Model iid_signs() {
    PiecewisePolynomial h{{0.0, 0.5, 1.0}, {{-1.0}, {1.0}}};
    return make_model(doubling_map(), Observable(h), true);
}
Model affine_fixture() {
    return make_model(PiecewiseAffine{{0.5, 0.5}, {0.0, 0.5}},
                      Observable::piecewise_linear({0.0, 0.3, 1.0}, {0.0, 0.6, -0.2}), true);
}
}  // namespace

TEST(Constants, PrimeAtUnitCp) {
    const auto c = rosenthal_constants(3.0, false, 1.0);
    EXPECT_NEAR(c.cp_prime, std::pow(2.0, 1.5) / (std::sqrt(2.0) - 1.0), 1e-14);
    EXPECT_NEAR(c.cp_prime, 6.828, 1e-3);
    const auto s = rosenthal_constants(3.0, true, 1.0);
    EXPECT_NEAR(s.cp, 1.5, 1e-15);
    EXPECT_THROW(rosenthal_constants(1.5), SpecError);
}

TEST(Constants, DefaultGrowsLikePOverLogP) {
    EXPECT_NEAR(default_rosenthal_cp(2.0), 7.35 * 2.0, 1e-12);
    EXPECT_NEAR(default_rosenthal_cp(4.0), 7.35 * 4.0 / std::log(4.0), 1e-12);
}

TEST(Decomposition, LevelZeroSplit) {
    const auto dec = build_decomposition(doubling_cos(), 0, 200, 1);
    for (const auto& p : dec.paths) {
        ASSERT_EQ(p.U.size(), 1u);
        ASSERT_EQ(p.U[0].size(), 1u);
        EXPECT_NEAR(p.S[0], p.U[0][0] + p.T[0][0], 1e-14);
    }
}

TEST(Decomposition, LevelOneHandUnrolled) {
    const auto m = doubling_cos();
    for (std::uint64_t i = 0; i < 100; ++i) {
        RngStream r(3, i);
        const auto path = sample_path(m, 2, r);
        const auto c = conditional_table(m, path, 1000, 0);
        const auto pd = decompose_path(path, c, 1);
        // U[1][0] = X1 + X2 - c(1,1) - c(2,1); T[1][0] = c(1,1) + c(2,1) - c(1,1) - c(2,2).
        EXPECT_NEAR(pd.U[1][0], path.x[0] + path.x[1] - c.value[0][0] - c.value[1][0], 1e-14);
        EXPECT_NEAR(pd.T[1][0], c.value[1][0] - c.value[1][1], 1e-14);
        EXPECT_NEAR(pd.T[0][0], c.value[0][0], 1e-15);
        EXPECT_NEAR(pd.T[0][1], c.value[1][1], 1e-15);
        EXPECT_NEAR(pd.S[1], pd.U[1][0] + pd.T[1][0] + pd.T[0][0] + pd.T[0][1], 1e-13);
    }
}

TEST(Decomposition, ShapesPerLevel) {
    const auto dec = build_decomposition(doubling_cos(), 5, 10, 2);
    for (const auto& p : dec.paths) {
        ASSERT_EQ(p.U.size(), 6u);
        for (int k = 0; k <= 5; ++k) {
            EXPECT_EQ(p.U[k].size(), std::size_t{1} << (5 - k));
            EXPECT_EQ(p.T[k].size(), std::size_t{1} << (5 - k));
        }
        EXPECT_EQ(p.S.size(), 32u);
    }
}

TEST(Decomposition, IidSequence) {
    const auto dec = build_decomposition(iid_signs(), 4, 100, 4);
    EXPECT_TRUE(dec.exact);
    for (const auto& p : dec.paths) {
        double s = 0.0;
        for (std::size_t l = 0; l < 16; ++l) {
            s += p.T[0][l];
            EXPECT_NEAR(std::abs(p.T[0][l]), 1.0, 1e-15);
        }
        for (const auto& level : p.U)
            for (double u : level) EXPECT_NEAR(u, 0.0, 1e-15);
        for (std::size_t k = 1; k < p.T.size(); ++k)
            for (double t : p.T[k]) EXPECT_NEAR(t, 0.0, 1e-15);
        EXPECT_NEAR(p.S.back(), s, 1e-14);
    }
}

TEST(Decomposition, LevelZeroTermsAreCentered) {
    const auto dec = build_decomposition(doubling_cos(), 3, 4000, 5, 4);
    for (std::size_t l = 0; l < 8; ++l) {
        std::vector<double> t;
        for (const auto& p : dec.paths) t.push_back(p.T[0][l]);
        const auto m = naive_mean(t);
        EXPECT_NEAR(m.mean, 0.0, 4 * m.se + 1e-15);
    }
}

TEST(Decomposition, WorkerCountInvariant) {
    const auto a = build_decomposition(doubling_cos(), 4, 64, 9, 1);
    const auto b = build_decomposition(doubling_cos(), 4, 64, 9, 8);
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        EXPECT_EQ(a.paths[i].S, b.paths[i].S);
        EXPECT_EQ(a.paths[i].U, b.paths[i].U);
    }
}

TEST(Decomposition, RequiresCenteredModel) {
    auto m = make_model(doubling_map(), Observable::constant(1.0), false);
    m.mean = 1.0;
    EXPECT_THROW(build_decomposition(m, 2, 10, 1), SpecError);
    EXPECT_THROW(build_decomposition(doubling_cos(), 13, 10, 1), SpecError);
}

TEST(Pointwise, HoldsOnExactFixtures) {
    for (const auto& m : {doubling_cos(), affine_fixture()}) {
        for (int d : {1, 3, 5}) {
            const auto dec = build_decomposition(m, d, 300, 10 + d, 4);
            auto v = verify_pointwise(dec);
            verify_telescoping(dec, v);
            for (const auto& r : v) {
                EXPECT_TRUE(r.pointwise_ok);
                EXPECT_TRUE(r.telescoping_ok);
                EXPECT_GE(r.margin_pointwise, -1e-9);
                EXPECT_LE(r.margin_telescoping, 1e-9);
            }
        }
    }
}

TEST(Pointwise, LevelZeroIsTriangleInequality) {
    const auto dec = build_decomposition(doubling_cos(), 0, 100, 6);
    const auto v = verify_pointwise(dec);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& p = dec.paths[i];
        EXPECT_NEAR(v[i].margin_pointwise,
                    std::abs(p.U[0][0]) + std::abs(p.T[0][0]) - std::abs(p.S[0]), 1e-14);
    }
}

TEST(Pointwise, ZeroObservable) {
    const auto m = make_model(doubling_map(), Observable::constant(0.0), true);
    const auto dec = build_decomposition(m, 3, 20, 7);
    for (const auto& r : verify_pointwise(dec)) EXPECT_EQ(r.margin_pointwise, 0.0);
}

TEST(Pointwise, McModeOnIteratedRandomFunction) {
    IteratedRandomFunction f;
    f.map = StateMap::affine(0.5);
    f.noise = NoiseSpec::uniform(-1.0, 1.0);
    LipschitzCallable c;
    c.fn = [](std::span<const double> x) { return std::sin(x[0]); };
    c.lipschitz = 1.0;
    const auto m = make_model(f, Observable(c), true, 1);
    const auto dec = build_decomposition(m, 2, 20, 8, 4, 1000);
    EXPECT_FALSE(dec.exact);
    auto v = verify_pointwise(dec);
    verify_telescoping(dec, v);
    for (const auto& r : v) {
        EXPECT_TRUE(r.pointwise_ok);
        EXPECT_TRUE(r.telescoping_ok);
        EXPECT_GT(r.slack, 1e-9);
    }
}

TEST(MomentRhs, ZeroTailsReduceToLeadingTerms) {
    const int d = 3;
    const double p = 3.0;
    DeltaStarTable t2{2.0, std::vector<double>(9, 0.0), {}}, tp{p, std::vector<double>(9, 0.0), {}};
    t2.values[0] = 0.7;
    tp.values[0] = 0.9;
    const auto c = rosenthal_constants(p);
    const auto r = moment_rhs(t2, tp, d, c);
    double level_sum = 0.0;
    for (int k = 0; k <= d; ++k) level_sum += std::pow(2.0, (d - k) / 2.0);
    EXPECT_NEAR(r.rhs_27, 2 * c.cp * level_sum * 0.7 + std::pow(2.0, d / p) * 0.9, 1e-12);
    EXPECT_NEAR(r.rhs_26, c.cp_prime * std::pow(2.0, d / 2.0) * 0.7 + c.cp_second * std::pow(2.0, d / p) * 0.9,
                1e-12);
}

TEST(MomentRhs, LevelZeroCollapses) {
    DeltaStarTable t2{2.0, {0.5, 0.25}, {}}, tp{3.0, {0.6, 0.3}, {}};
    const auto c = rosenthal_constants(3.0);
    const auto r = moment_rhs(t2, tp, 0, c);
    EXPECT_NEAR(r.rhs_26, c.cp_prime * (0.5 + 0.25 / std::sqrt(2.0)) +
                              c.cp_second * (0.6 + 0.3 / std::pow(2.0, 1.0 / 3.0)),
                1e-12);
    EXPECT_NEAR(r.rhs_27, 2 * c.cp * 0.5 + 0.6 + (2 * c.cp + 1) * 0.3, 1e-12);
    EXPECT_THROW(moment_rhs(t2, tp, 1, c), SpecError);
}

TEST(DeltaStar, AnalyticTablesRespectBounds) {
    const auto lip = Observable::piecewise_linear({0.0, 0.5, 1.0}, {0.0, 0.5, 0.0});
    const auto m = make_model(doubling_map(), lip, true);
    for (double p : {2.0, 3.0}) {
        const auto t = analytic_delta_star(m, 8, p);
        for (int n = 1; n <= 8; ++n)
            EXPECT_LE(t.values[n], std::pow(2.0, 1.0 / p + 1.0) * (std::ldexp(1.0, -n) + 5e-4));
    }
    const auto a = analytic_delta_star(affine_fixture(), 8, 3.0);
    ModulusEvaluator ev(affine_fixture().observable, kInfinity, false);
    for (int n = 1; n <= 8; ++n) EXPECT_LE(a.values[n], 2 * ev(std::ldexp(1.0, -n)) + 1e-9);
}

TEST(DeltaStar, LevelZeroBoundedBySup) {
    const auto m = doubling_cos();
    const auto t = estimate_delta_star(m, 4, 3.0, 4000, 3, 4);
    EXPECT_LE(t.values[0], 1.0 + 1e-12);
    EXPECT_NEAR(stationary_lp_norm(m, 2.0), std::sqrt(0.5), 1e-10);
}

TEST(MomentBound, IidRandomWalk) {
    const auto m = iid_signs();
    const auto dec = build_decomposition(m, 8, 2000, 21, 4);
    const auto r = verify_moment_bound(m, dec, 2.0, false);
    EXPECT_TRUE(r.holds);
    // Doob: E max S_n^2 <= 4 * 2^d.
    EXPECT_LE(r.lhs, 2.0 * 16.0 + 4 * r.lhs_se);
}

TEST(MomentBound, ZeroObservable) {
    const auto m = make_model(doubling_map(), Observable::constant(0.0), true);
    const auto dec = build_decomposition(m, 3, 50, 7);
    const auto r = verify_moment_bound(m, dec, 3.0, false);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_GE(r.margin, 0.0);
    EXPECT_TRUE(r.holds);
}

TEST(MomentBound, DoublingBothModes) {
    const auto m = doubling_cos();
    const auto dec = build_decomposition(m, 6, 2000, 31, 4);
    for (bool strict : {false, true}) {
        const auto r = verify_moment_bound(m, dec, 3.0, strict);
        EXPECT_TRUE(r.holds);
        EXPECT_EQ(r.mode, strict ? "strict" : "default");
        EXPECT_GT(r.rhs.rhs_25, 0.0);
    }
}
