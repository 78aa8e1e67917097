// Composite Gauss-Legendre quadrature with adaptive bisection.
#pragma once

#include <functional>
#include <span>

namespace sipkit {

inline constexpr int kGaussLegendreNodes = 64;
inline constexpr double kDefaultQuadTol = 1e-10;

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  ///< |coarse - refined| summed over accepted panels
    bool converged = true;
};

/// Fixed 64-point Gauss-Legendre rule on [a, b]; exact for degree <= 127.
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

/// Adaptive bisection: a panel is accepted when the 64-point rule and the
/// sum over its two halves agree to the panel's share of `tol`.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double tol = kDefaultQuadTol, int max_depth = 30);

/// Same, but with known kinks/breakpoints inside [a, b] used as panel edges.
QuadResult integrate_pieces(const std::function<double(double)>& f,
                            std::span<const double> edges, double tol = kDefaultQuadTol,
                            int max_depth = 30);

/// Nested adaptive integration over the unit cube [0,1]^m (m <= 3).
QuadResult integrate_cube(const std::function<double(std::span<const double>)>& f, int m,
                          double tol = kDefaultQuadTol);

}  // namespace sipkit
