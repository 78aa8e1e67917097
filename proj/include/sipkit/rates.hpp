// Exponent arithmetic: kappa, tau, the (beta, r, gamma) feasibility system
// and the linear-process threshold comparison.
#pragma once

#include <optional>
#include <string>

namespace sipkit {

/// ((p-2) sqrt(p^2 + 12p + 4) + p^2 + 4p - 4) / (8p), p > 2.
double kappa(double p);
/// ((p-2) sqrt(p^2 + 20p + 4) + p^2 - 4) / (8p), p > 2.
double tau(double p);

/// 4 p gamma^2 - (p^2 + 4p - 4) gamma + 3p - 4.
double feasibility_quadratic(double p, double gamma);

struct RateWitness {
    double beta = 0.0;
    double r = 0.0;
};

struct RateCertificate {
    double p = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double tau = 0.0;
    double quadratic = 0.0;
    bool feasible = false;
    std::optional<RateWitness> witness;
    std::string reason;  ///< "quadratic <= 0", "4 gamma <= p" or "interval empty" when infeasible
};

/// p - 2 < beta (2 gamma - 1), r < 1 + gamma p, beta (r - 2) < 2 (r - p),
/// r > p and 0 < beta <= 2, all strict except beta <= 2.
bool witness_valid(double p, double gamma, const RateWitness& w, double margin = 0.0);

/// Midpoint witness when feasible, otherwise the failing condition.
RateCertificate feasibility(double p, double gamma);

/// Independent oracle: search beta in (0, 2], r in (p, 1 + gamma p) on a
/// lattice of the given step.
bool feasibility_grid_search(double p, double gamma, double step = 0.005);

struct LinearThresholds {
    double blw_small_p = 0.0;  ///< 2 / beta, used for p <= 4
    double blw_large_p = 0.0;  ///< (tau(p) + 1) / beta, used for p > 4
    double blw = 0.0;          ///< the one that applies
    double new_threshold = 0.0;  ///< kappa(p) / beta + 1/2
    bool new_below_blw = false;
};

/// Thresholds on a with |a_i| = O(i^{-a}); beta is the Holder exponent of c.
LinearThresholds linear_thresholds(double p, double beta_mod);

struct SigmaZeroVerdict {
    bool summable = false;       ///< gamma + 2/p^2 > 1
    bool inequality = false;     ///< p sqrt(p^2 + 12p + 4) > -(p^2 - 2p - 8)
    double lhs = 0.0;
    double rhs = 0.0;
};

SigmaZeroVerdict sigma_zero_check(double p, double gamma);

}  // namespace sipkit
