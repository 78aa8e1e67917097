#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sipkit/modulus.hpp"
#include "sipkit/quadrature.hpp"

using namespace sipkit;
using std::numbers::pi;

TEST(Modulus, CosineSupClosedForm) {
    ModulusEvaluator ev(Observable::cosine(1), kInfinity);
    for (double d : {0.0, 0.01, 0.1, 0.25, 0.4, 0.5}) {
        // 10^4-point grid oracle of sup |cos 2 pi x - cos 2 pi (x + t)| over |t| <= d.
        double oracle = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double x = i / 10000.0;
            oracle = std::max(oracle, std::abs(std::cos(2 * pi * x) - std::cos(2 * pi * (x + d))));
        }
        EXPECT_NEAR(ev(d), 2 * std::sin(pi * d), 1e-9) << d;
        EXPECT_NEAR(ev(d), oracle, 1e-6) << d;
    }
}

TEST(Modulus, CosineL2ClosedForm) {
    ModulusEvaluator ev(Observable::cosine(1), 2.0);
    for (double d : {0.0, 0.05, 0.2, 0.5}) {
        const double integral =
            integrate([&](double x) { return std::pow(std::cos(2 * pi * (x + d)) - std::cos(2 * pi * x), 2); },
                      0.0, 1.0, 1e-13)
                .value;
        EXPECT_NEAR(ev(d), std::sqrt(integral), 1e-9) << d;
        EXPECT_NEAR(ev(d), std::sqrt(2.0) * std::sin(pi * d), 1e-9) << d;
    }
}

TEST(Modulus, LipschitzObservablesBoundedByDelta) {
    const auto h = Observable::piecewise_linear({0.0, 0.3, 1.0}, {0.0, 0.3, -0.4});
    for (double p : {1.0, 2.0, 3.0, kInfinity}) {
        ModulusEvaluator ev(h, p, false);
        // The evaluator adds one translation-grid step of Lipschitz slack.
        for (double d : {0.0, 0.01, 0.1, 0.5, 1.0}) {
            EXPECT_LE(ev(d), d + 5e-4) << p << " " << d;
            EXPECT_GE(ev(d), 0.0);
        }
    }
}

TEST(Modulus, MonotoneAndZeroAtZero) {
    PiecewisePolynomial cube{{0.0, 1.0}, {{0.0, 0.0, 0.0, 8.0}}};
    for (double p : {2.0, 3.0, kInfinity}) {
        ModulusEvaluator ev(Observable(cube), p, false);
        EXPECT_NEAR(ev(0.0), 0.0, 1e-12);
        double prev = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double v = ev(i / 20.0);
            EXPECT_GE(v, prev - 1e-12);
            prev = v;
        }
    }
}

TEST(Modulus, ConstantIsZero) {
    ModulusEvaluator ev(Observable::constant(3.0), kInfinity);
    EXPECT_EQ(ev(0.3), 0.0);
}

TEST(Modulus, RejectsDeltaOutsideUnitInterval) {
    ModulusEvaluator ev(Observable::cosine(1), 2.0);
    EXPECT_THROW(omega(ev, 1.5), SpecError);
    EXPECT_THROW(omega(ev, -0.1), SpecError);
}

TEST(CubeDiameter, ScalarAndDiagonal) {
    IntMatrix two(1, 1);
    two << 2;
    IntMatrix twoI(2, 2);
    twoI << 2, 0, 0, 2;
    for (int n = 0; n <= 6; ++n) {
        EXPECT_NEAR(cube_diameter(two, n), std::ldexp(1.0, -n), 1e-15);
        EXPECT_NEAR(cube_diameter(twoI, n), std::sqrt(2.0) * std::ldexp(1.0, -n), 1e-15);
    }
}

TEST(CubeDiameter, VertexEnumerationOracle) {
    IntMatrix a(2, 2);
    a << 2, 1, 0, 2;
    // A^{-1} = [[1/2, -1/4], [0, 1/2]]; vertices w in {-1,1}^2.
    double oracle = 0.0;
    for (double w0 : {-1.0, 1.0})
        for (double w1 : {-1.0, 1.0}) oracle = std::max(oracle, std::hypot(0.5 * w0 - 0.25 * w1, 0.5 * w1));
    EXPECT_NEAR(oracle, std::sqrt(0.5625 + 0.25), 1e-15);
    EXPECT_NEAR(cube_diameter(a, 1), oracle, 1e-14);
}

TEST(DecayTransfer, LevelsForBases) {
    EXPECT_EQ(decay_transfer(1.5, 0.5).ell, 1);
    EXPECT_NEAR(decay_transfer(1.5, 0.5).constant, std::pow(2.0, 1.5), 1e-14);
    EXPECT_EQ(decay_transfer(1.0, 0.9).ell, 7);
    EXPECT_EQ(decay_transfer(1.0, 0.25).ell, 1);
}

TEST(SineConstant, L2Value) {
    EXPECT_NEAR(sine_lp_constant(2.0), std::sqrt(0.5), 1e-12);
}
