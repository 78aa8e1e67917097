#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sipkit/quadrature.hpp"

using namespace sipkit;
using std::numbers::pi;

TEST(GaussLegendre, ExactForPolynomials) {
    EXPECT_NEAR(gauss_legendre([](double x) { return std::pow(x, 10); }, 0.0, 1.0), 1.0 / 11.0, 1e-15);
    EXPECT_NEAR(gauss_legendre([](double x) { return x * x; }, -2.0, 1.0), 3.0, 1e-14);
}

TEST(Integrate, SmoothPeriodic) {
    const auto r = integrate([](double x) { return std::pow(std::cos(2 * pi * x), 2); }, 0.0, 1.0);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 0.5, 1e-12);
}

TEST(Integrate, KinkNeedsBisection) {
    const auto r = integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-11);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 0.5 * (0.09 + 0.49), 1e-10);
}

TEST(IntegratePieces, KinksAsEdges) {
    std::vector<double> edges{0.0, 0.3, 1.0};
    const auto r = integrate_pieces([](double x) { return std::abs(x - 0.3); }, edges);
    EXPECT_NEAR(r.value, 0.29, 1e-14);
}

TEST(IntegrateCube, ProductFunction) {
    const auto r = integrate_cube(
        [](std::span<const double> x) { return x[0] * x[1] * (1.0 + x[2]); }, 3, 1e-10);
    EXPECT_NEAR(r.value, 0.25 * 1.5, 1e-10);
}

TEST(IntegrateCube, TwoDimensionalTrig) {
    const auto r = integrate_cube(
        [](std::span<const double> x) { return std::pow(std::cos(2 * pi * (x[0] + x[1])), 2); }, 2);
    EXPECT_NEAR(r.value, 0.5, 1e-10);
}
