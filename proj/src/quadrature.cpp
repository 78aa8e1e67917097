#include "sipkit/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sipkit/stats.hpp"

namespace sipkit {

namespace {

struct Rule {
    std::array<double, kGaussLegendreNodes> nodes{};
    std::array<double, kGaussLegendreNodes> weights{};
};

Rule make_rule() {
    Rule rule;
    constexpr int n = kGaussLegendreNodes;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

const Rule& rule() {
    static const Rule r = make_rule();
    return r;
}

void adapt(const std::function<double(double)>& f, double a, double b, double whole,
           double tol, int depth, int max_depth, CompensatedSum& value, double& error,
           bool& converged) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_legendre(f, a, mid);
    const double right = gauss_legendre(f, mid, b);
    const double refined = left + right;
    const double diff = std::abs(refined - whole);
    if (diff <= tol || depth >= max_depth) {
        if (diff > tol) converged = false;
        value.add(refined);
        error += diff;
        return;
    }
    adapt(f, a, mid, left, 0.5 * tol, depth + 1, max_depth, value, error, converged);
    adapt(f, mid, b, right, 0.5 * tol, depth + 1, max_depth, value, error, converged);
}

}  // namespace

double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
    const Rule& r = rule();
    const double half = 0.5 * (b - a);
    const double centre = 0.5 * (a + b);
    CompensatedSum acc;
    for (int i = 0; i < kGaussLegendreNodes; ++i) {
        acc.add(r.weights[i] * f(centre + half * r.nodes[i]));
    }
    return half * acc.value();
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                     int max_depth) {
    QuadResult out;
    if (a == b) return out;
    const double sign = a < b ? 1.0 : -1.0;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    CompensatedSum value;
    const double whole = gauss_legendre(f, lo, hi);
    adapt(f, lo, hi, whole, tol, 0, max_depth, value, out.error, out.converged);
    out.value = sign * value.value();
    return out;
}

QuadResult integrate_pieces(const std::function<double(double)>& f,
                            std::span<const double> edges, double tol, int max_depth) {
    QuadResult out;
    if (edges.size() < 2) return out;
    CompensatedSum value;
    const double span = std::abs(edges.back() - edges.front());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double w = std::abs(edges[i + 1] - edges[i]);
        if (w == 0.0) continue;
        const double share = span > 0.0 ? tol * w / span : tol;
        const QuadResult piece = integrate(f, edges[i], edges[i + 1], share, max_depth);
        value.add(piece.value);
        out.error += piece.error;
        out.converged = out.converged && piece.converged;
    }
    out.value = value.value();
    return out;
}

QuadResult integrate_cube(const std::function<double(std::span<const double>)>& f, int m,
                          double tol) {
    if (m < 1 || m > 3) throw std::invalid_argument("integrate_cube: supports 1 <= m <= 3");
    std::vector<double> point(static_cast<std::size_t>(m), 0.0);
    QuadResult total;
    // Recursive lambda over coordinates; the inner tolerance is tightened so
    // that inner errors do not dominate the outer acceptance test.
    std::function<double(int, double)> nest = [&](int axis, double axis_tol) -> double {
        if (axis == m) return f(point);
        const QuadResult r = integrate(
            [&](double x) {
                point[static_cast<std::size_t>(axis)] = x;
                return nest(axis + 1, axis_tol * 0.1);
            },
            0.0, 1.0, axis_tol, 20);
        if (axis == 0) total.error = r.error;
        if (!r.converged) total.converged = false;
        return r.value;
    };
    total.value = nest(0, tol);
    return total;
}

}  // namespace sipkit
