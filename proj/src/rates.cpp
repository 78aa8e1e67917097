#include "sipkit/rates.hpp"

#include <algorithm>
#include <cmath>

#include "sipkit/types.hpp"

namespace sipkit {

namespace {

void require_p(double p) {
    if (!(p > 2.0)) throw SpecError("exponent calculus: p must be > 2");
}

}  // namespace

double kappa(double p) {
    require_p(p);
    return ((p - 2.0) * std::sqrt(p * p + 12.0 * p + 4.0) + p * p + 4.0 * p - 4.0) / (8.0 * p);
}

double tau(double p) {
    require_p(p);
    return ((p - 2.0) * std::sqrt(p * p + 20.0 * p + 4.0) + p * p - 4.0) / (8.0 * p);
}

double feasibility_quadratic(double p, double gamma) {
    return 4.0 * p * gamma * gamma - (p * p + 4.0 * p - 4.0) * gamma + 3.0 * p - 4.0;
}

bool witness_valid(double p, double gamma, const RateWitness& w, double margin) {
    const double b = w.beta, r = w.r;
    return b > margin && b <= 2.0 && r - p > margin && (1.0 + gamma * p) - r > margin &&
           b * (2.0 * gamma - 1.0) - (p - 2.0) > margin && 2.0 * (r - p) - b * (r - 2.0) > margin;
}

RateCertificate feasibility(double p, double gamma) {
    require_p(p);
    if (!(gamma > 0.0)) throw SpecError("exponent calculus: gamma must be > 0");
    RateCertificate c;
    c.p = p;
    c.gamma = gamma;
    c.kappa = kappa(p);
    c.tau = tau(p);
    c.quadratic = feasibility_quadratic(p, gamma);
    if (!(4.0 * gamma > p)) {
        c.reason = "4 gamma <= p";
        return c;
    }
    if (!(c.quadratic > 0.0)) {
        c.reason = "quadratic <= 0";
        return c;
    }
    // Solving the three conditions for r given the smallest admissible beta.
    const double r_lo = std::max(p, 2.0 + (2.0 * p - 4.0) * (2.0 * gamma - 1.0) / (4.0 * gamma - p));
    const double r_hi = 1.0 + gamma * p;
    if (!(r_lo < r_hi)) {
        c.reason = "interval empty";
        return c;
    }
    RateWitness w;
    w.r = 0.5 * (r_lo + r_hi);
    const double b_lo = (p - 2.0) / (2.0 * gamma - 1.0);
    const double b_hi = std::min(2.0, 2.0 * (w.r - p) / (w.r - 2.0));
    if (!(b_lo < b_hi)) {
        c.reason = "interval empty";
        return c;
    }
    w.beta = 0.5 * (b_lo + b_hi);
    if (!witness_valid(p, gamma, w)) {
        c.reason = "interval empty";
        return c;
    }
    c.feasible = true;
    c.witness = w;
    return c;
}

bool feasibility_grid_search(double p, double gamma, double step) {
    require_p(p);
    if (!(step > 0.0)) throw SpecError("grid search: step must be > 0");
    const double r_hi = 1.0 + gamma * p;
    for (long i = 1;; ++i) {
        const double r = p + static_cast<double>(i) * step;
        if (!(r < r_hi)) break;
        // For fixed r the admissible beta form an interval; test its lattice points.
        const double lo = (p - 2.0) / (2.0 * gamma - 1.0);
        const double hi = std::min(2.0, 2.0 * (r - p) / (r - 2.0));
        if (2.0 * gamma - 1.0 <= 0.0 || lo >= hi) continue;
        // Smaller beta only helps the upper condition, so the first strictly valid lattice point decides.
        double k = std::floor(lo / step);
        while (!(k * step * (2.0 * gamma - 1.0) > p - 2.0)) k += 1.0;
        const double first = k * step;
        if (first < hi && first <= 2.0 && witness_valid(p, gamma, {first, r})) return true;
    }
    return false;
}

LinearThresholds linear_thresholds(double p, double beta_mod) {
    require_p(p);
    if (!(beta_mod > 0.0 && beta_mod <= 1.0))
        throw SpecError("linear thresholds: beta must lie in (0, 1]");
    LinearThresholds t;
    t.blw_small_p = 2.0 / beta_mod;
    t.blw_large_p = (tau(p) + 1.0) / beta_mod;
    t.blw = p <= 4.0 ? t.blw_small_p : t.blw_large_p;
    t.new_threshold = kappa(p) / beta_mod + 0.5;
    t.new_below_blw = t.new_threshold < t.blw;
    return t;
}

SigmaZeroVerdict sigma_zero_check(double p, double gamma) {
    require_p(p);
    SigmaZeroVerdict v;
    v.summable = gamma + 2.0 / (p * p) > 1.0;
    v.lhs = p * std::sqrt(p * p + 12.0 * p + 4.0);
    v.rhs = -(p * p - 2.0 * p - 8.0);
    v.inequality = v.lhs > v.rhs;
    return v;
}

}  // namespace sipkit
