#include <gtest/gtest.h>

#include <cmath>

#include "sipkit/model.hpp"
#include "sipkit/stats.hpp"

using namespace sipkit;

namespace {
Point pt(std::initializer_list<double> xs) {
    Point p(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p(i++) = x;
    return p;
}
PiecewiseAffine halves() { return PiecewiseAffine{{0.5, 0.5}, {0.0, 0.5}}; }
LinearProcess geometric_linear(int terms = 64) {
    LinearProcess lp;
    for (int i = 0; i < terms; ++i) lp.coefficients.push_back(std::ldexp(1.0, -i));
    lp.depth = terms;
    return lp;
}
}  // namespace

TEST(AffineState, CompositionRule) {
    RngStream r(1, 0);
    for (int trial = 0; trial < 100; ++trial) {
        AffineState a{LinMap::Random(2, 2), Point::Random(2)};
        AffineState b{LinMap::Random(2, 2), Point::Random(2)};
        const auto c = AffineState::compose(b, a);
        EXPECT_TRUE(c.lin.isApprox(b.lin * a.lin, 1e-12));
        EXPECT_TRUE(c.off.isApprox(b.lin * a.off + b.off, 1e-12));
        const Point u = pt({r.uniform(), r.uniform()});
        EXPECT_LT((c.apply(u) - b.apply(a.apply(u))).norm(), 1e-12);
    }
}

TEST(SimulateChain, Doubling) {
    const auto m = make_model(doubling_map(), Observable::cosine(1), false);
    std::vector<double> noise{1, 0, 1};
    const auto path = simulate_chain(m, pt({0.0}), noise);
    ASSERT_EQ(path.states.size(), 4u);
    EXPECT_DOUBLE_EQ(path.states[1](0), 0.5);
    EXPECT_DOUBLE_EQ(path.states[2](0), 0.25);
    EXPECT_DOUBLE_EQ(path.states[3](0), 0.625);
    EXPECT_EQ(recursion_residual(m, path), 0.0);
    EXPECT_NEAR(path.x[2], std::cos(2 * M_PI * 0.625), 1e-15);
}

TEST(SimulateChain, PiecewiseAffineSymbolsAreZeroBased) {
    const auto m = make_model(halves(), Observable::cosine(1), false);
    // Branch indices 1 and 0 are the second and first branch.
    std::vector<double> noise{1, 0};
    const auto path = simulate_chain(m, pt({0.0}), noise);
    EXPECT_DOUBLE_EQ(path.states[1](0), 0.5);
    EXPECT_DOUBLE_EQ(path.states[2](0), 0.25);
}

TEST(SimulateChain, TorusTwoIdentity) {
    TrigPolynomial t{2, {{{1, 0}, 1.0, 0.0}}};
    const auto m = make_model(scaled_identity(2, 2), Observable(t), false);
    // Symbol 3 is gamma = (1, 1) in the enumeration order of {0,1}^2.
    const auto& g = std::get<TorusEndomorphism>(m.family).gamma;
    int idx = -1;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i](0) == 1 && g[i](1) == 1) idx = static_cast<int>(i);
    ASSERT_GE(idx, 0);
    std::vector<double> noise{static_cast<double>(idx)};
    const auto path = simulate_chain(m, pt({0.0, 0.0}), noise);
    EXPECT_DOUBLE_EQ(path.states[1](0), 0.5);
    EXPECT_DOUBLE_EQ(path.states[1](1), 0.5);
}

TEST(RecursionResidual, DetectsTampering) {
    const auto m = make_model(doubling_map(), Observable::cosine(1), false);
    std::vector<double> noise{1, 0, 1};
    auto path = simulate_chain(m, pt({0.0}), noise);
    path.states[2](0) += 0.01;
    EXPECT_GT(recursion_residual(m, path), 0.005);
}

TEST(AffinePropagation, DoublingWindows) {
    const auto f = ProcessFamily(doubling_map());
    std::vector<double> w1{1};
    auto a = affine_propagation(f, w1);
    EXPECT_DOUBLE_EQ(a.lin(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(a.off(0), 0.5);
    std::vector<double> w2{1, 0};
    a = affine_propagation(f, w2);
    EXPECT_DOUBLE_EQ(a.lin(0, 0), 0.25);
    EXPECT_DOUBLE_EQ(a.off(0), 0.25);
}

TEST(AffinePropagation, ThirdsComposition) {
    // s_0(x) = x/3, s_1(x) = x/3 + 2/3 with weights 1/3 and 2/3 summing to 1.
    PiecewiseAffine thirds{{1.0 / 3.0, 2.0 / 3.0}, {0.0, 2.0 / 3.0}};
    std::vector<double> w{1, 1};
    const auto a = affine_propagation(ProcessFamily(thirds), w);
    EXPECT_NEAR(a.lin(0, 0), 4.0 / 9.0, 1e-15);
    EXPECT_NEAR(a.off(0), (2.0 / 3.0) * (2.0 / 3.0) + 2.0 / 3.0, 1e-15);
}

TEST(AffinePropagation, UnsupportedFamilies) {
    std::vector<double> w{0.1};
    EXPECT_THROW(affine_propagation(ProcessFamily(LinearProcess{}), w), UnsupportedFamily);
    EXPECT_THROW(affine_propagation(ProcessFamily(IteratedRandomFunction{}), w), UnsupportedFamily);
}

TEST(SimulateForward, DoublingAllZeroAndAllOne) {
    const auto m = make_model(doubling_map(), Observable::cosine(1), false);
    const int D = 40, n = 5;
    std::vector<double> zeros(n + D, 0.0), ones(n + D, 1.0);
    const auto z = simulate_forward(m, zeros, D);
    for (const auto& s : z.states) EXPECT_EQ(s(0), 0.0);
    const auto o = simulate_forward(m, ones, D);
    for (const auto& s : o.states) EXPECT_DOUBLE_EQ(s(0), 1.0 - std::ldexp(1.0, -D - 1));
}

TEST(SimulateForward, LinearTailBound) {
    EXPECT_LE(forward_tail_bound(ProcessFamily(geometric_linear(200)), 40), std::ldexp(1.0, -39));
}

TEST(SimulateForward, ToleranceErrorNamesDepth) {
    const auto m = make_model(doubling_map(), Observable::cosine(1), false);
    std::vector<double> noise(20, 1.0);
    try {
        simulate_forward(m, noise, 5, 1e-12);
        FAIL() << "expected ToleranceError";
    } catch (const ToleranceError& e) {
        EXPECT_NE(std::string(e.what()).find(std::to_string(required_forward_depth(m.family, 1e-12))),
                  std::string::npos);
    }
}

TEST(InvariantMean, ClosedForms) {
    EXPECT_NEAR(invariant_mean(doubling_map(), Observable::cosine(1)).value, 0.0, 1e-15);
    TrigPolynomial two{1, {{{1}, 1.0, 0.0}, {{2}, 1.0, 0.0}}};
    EXPECT_NEAR(invariant_mean(doubling_map(), Observable(two)).value, 0.0, 1e-15);
    PiecewisePolynomial sq{{0.0, 1.0}, {{0.0, 0.0, 1.0}}};
    const auto m = invariant_mean(tent_branches(), Observable(sq));
    EXPECT_NEAR(m.value, 1.0 / 3.0, 1e-14);
    EXPECT_EQ(m.method, "exact");
}

TEST(InvariantMean, CallableQuadrature) {
    LipschitzCallable c;
    c.fn = [](std::span<const double> x) { return x[0] * x[0]; };
    c.lipschitz = 2.0;
    const auto m = invariant_mean(doubling_map(), Observable(c));
    EXPECT_NEAR(m.value, 1.0 / 3.0, 1e-10);
    EXPECT_EQ(m.method, "quadrature");
}

TEST(MakeModel, CentersByInvariantMean) {
    PiecewisePolynomial sq{{0.0, 1.0}, {{0.0, 0.0, 1.0}}};
    const auto m = make_model(doubling_map(), Observable(sq), true);
    EXPECT_TRUE(m.centered);
    EXPECT_NEAR(m.mean, 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(m.value(pt({0.5})), 0.25 - 1.0 / 3.0, 1e-14);
}

TEST(SamplePath, StationaryMeanOfCenteredObservable) {
    const auto m = make_model(doubling_map(), Observable::cosine(1), true);
    std::vector<double> x1;
    for (std::uint64_t i = 0; i < 20000; ++i) {
        RngStream r(5, i);
        x1.push_back(sample_path(m, 3, r).x[2]);
    }
    const auto e = naive_mean(x1);
    EXPECT_NEAR(e.mean, 0.0, 4 * e.se);
}

TEST(LinearValues, DepthLayout) {
    auto lp = geometric_linear(3);
    lp.coefficients = {1.0, 0.5, 0.25};
    lp.depth = 3;
    const auto m = make_model(lp, Observable(), false);
    const int D = linear_depth(lp);
    std::vector<double> noise(static_cast<std::size_t>(D) + 2, 0.0);
    noise[static_cast<std::size_t>(D)] = 1.0;  // eps_1
    const auto x = linear_values(m, noise);
    ASSERT_EQ(x.size(), 2u);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 0.5);
}
