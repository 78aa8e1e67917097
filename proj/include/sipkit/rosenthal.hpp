// Dyadic martingale-type decomposition of partial sums and the
// Rosenthal-type maximal inequality built on it.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sipkit/model.hpp"
#include "sipkit/stats.hpp"

namespace sipkit {

/// Constants of the inequality. C_p defaults to 7.35 p / ln(max(p, e));
/// strict mode multiplies it by the Doob factor p / (p - 1).
struct RosenthalConstants {
    double p = 2.0;
    double cp = 0.0;
    double cp_prime = 0.0;   ///< C_p 2^{3/2} / (sqrt 2 - 1)
    double cp_second = 0.0;  ///< 2^{1+1/p} (C_p + 1) / (2^{1/p} - 1)
    bool strict = false;
};

double default_rosenthal_cp(double p);
RosenthalConstants rosenthal_constants(double p, bool strict = false,
                                       std::optional<double> cp_override = std::nullopt);

/// U[k][l], T[k][l] (0-based l) and S_1..S_{2^d} of one path.
struct PathDecomposition {
    std::vector<std::vector<double>> U;
    std::vector<std::vector<double>> T;
    std::vector<double> S;
    /// Sum of 95% half-widths of the Monte Carlo conditional expectations (0 when exact).
    double mc_error = 0.0;
};

struct DyadicDecomposition {
    int d = 0;
    bool exact = true;  ///< all conditional expectations exact
    std::vector<PathDecomposition> paths;
};

/// c(j, s) = E(X_j | eps_s..eps_j) for all 1 <= s <= j <= n on one path.
/// Exact for affine families, Monte Carlo (budget per entry) otherwise.
struct CondTable {
    int n = 0;
    std::vector<std::vector<double>> value;  ///< value[j-1][s-1]
    std::vector<std::vector<double>> half_width;
    bool exact = true;
};
CondTable conditional_table(const Model& model, const PathBundle& path, std::size_t mc_budget,
                            std::uint64_t seed);

/// Decomposition of one path from its conditional-expectation table.
PathDecomposition decompose_path(const PathBundle& path, const CondTable& c, int d);

/// Requires a centered model and d <= 12. Path i uses stream (seed, i).
DyadicDecomposition build_decomposition(const Model& model, int d, std::size_t ensemble,
                                        std::uint64_t seed, int workers = 1,
                                        std::size_t mc_budget = 1000);

struct PathVerdict {
    std::size_t path_id = 0;
    double margin_pointwise = 0.0;    ///< rhs - max|S_n| (>= -slack required)
    double margin_telescoping = 0.0;  ///< |S_{2^d} - U[d][1] - sum T|
    double slack = 0.0;
    bool pointwise_ok = false;
    bool telescoping_ok = false;
};

/// max_n |S_n| <= sum_k max_l |U_{k,l}| + sum_k max_m |sum_{l<=m} T_{k,l}|.
std::vector<PathVerdict> verify_pointwise(const DyadicDecomposition& dec);

/// S_{2^d} = U_{d,1} + sum_{k,l} T_{k,l}; merged into the same verdicts.
void verify_telescoping(const DyadicDecomposition& dec, std::vector<PathVerdict>& verdicts);

struct DeltaStarTable {
    double p = 2.0;
    std::vector<double> values;  ///< n = 0..N
    std::vector<std::string> provenance;
};

/// ||X_1 - E X_1||_p for the stationary law (quadrature where possible).
double stationary_lp_norm(const Model& model, double p);

/// Analytic delta*_p(n), n = 0..N: ||X_1||_p at 0, then the family bound
/// capped by 2 ||X_1||_p.
DeltaStarTable analytic_delta_star(const Model& model, int n_max, double p);

/// Smaller of 2 x (Monte Carlo star norm) and the analytic bound, per entry.
DeltaStarTable estimate_delta_star(const Model& model, int n_max, double p, std::size_t budget,
                                   std::uint64_t seed, int workers = 1);

struct MomentRhs {
    double rhs_25 = 0.0;  ///< U/T-norm form
    double rhs_26 = 0.0;  ///< delta*-series form
    double rhs_27 = 0.0;  ///< level-sum form
};

/// rhs_26 and rhs_27 from delta* tables covering 0..2^d; rhs_25 is left 0.
MomentRhs moment_rhs(const DeltaStarTable& delta2, const DeltaStarTable& deltap, int d,
                     const RosenthalConstants& c);

/// U/T-norm form from Monte Carlo norms of the decomposition entries.
double moment_rhs_norms(const DyadicDecomposition& dec, const RosenthalConstants& c);

struct MomentReport {
    int d = 0;
    double p = 2.0;
    RosenthalConstants constants;
    std::string mode;  ///< "default" or "strict"
    double lhs = 0.0;  ///< ||max_n |S_n|||_p
    double lhs_se = 0.0;
    MomentRhs rhs;
    double margin = 0.0;        ///< rhs_26 - lhs
    double margin_delta0 = 0.0; ///< rhs_27 - lhs
    bool holds = false;         ///< margin > 4 se
};

MomentReport verify_moment_bound(const Model& model, const DyadicDecomposition& dec, double p,
                                 bool strict, std::optional<double> cp_override = std::nullopt);

}  // namespace sipkit
