// Couplings of a stationary sequence with copies of itself, Monte Carlo
// estimates of the coupling coefficients and their analytic bounds.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sipkit/model.hpp"
#include "sipkit/modulus.hpp"
#include "sipkit/stats.hpp"

namespace sipkit {

enum class CoefficientKind {
    Wu,       ///< delta_p(n): time-0 innovation replaced
    Star,     ///< ||X_n - X_n^*||_p: whole past replaced
    Markov,   ///< delta'_p(n), reported as 2 ||X_n - X_n^*||_p
    SupInf,   ///< delta_inf(n): sup over starting points of E|X_{n,x} - X_{n,y}|
};

std::string kind_name(CoefficientKind k);
CoefficientKind parse_kind(const std::string& s);

struct CoefficientEstimate {
    int n = 0;
    double p = 2.0;
    CoefficientKind kind = CoefficientKind::Star;
    double estimate = 0.0;
    double ci = 0.0;  ///< 95% half-width
    double se = 0.0;
    std::size_t samples = 0;
    std::optional<double> analytic_bound;
    std::string bound_name;
    std::uint64_t seed = 0;
};

/// X_1..X_n and X*_1..X*_n driven by the same eps_1..eps_n.
struct PathPair {
    std::vector<double> x;
    std::vector<double> x_star;
};

/// Star coupling: independent stationary starts W_0, W_0^* (independent
/// past innovations for linear processes). Index 0 of the returned
/// vectors is time 1.
PathPair simulate_star_pair(const Model& model, int n, RngStream& rng);

/// Wu coupling for linear processes: only eps_0 is replaced.
PathPair simulate_wu_pair(const Model& model, int n, RngStream& rng);

/// |X_k - X'_k| for k = 1..n_max over `pairs` coupled pairs; row k-1
/// holds the pair samples at lag k. Pair i uses stream (seed, i).
struct DifferenceTable {
    std::vector<std::vector<double>> abs_diff;  ///< [k-1][i]
    std::vector<double> abs_x1;                 ///< |X_1| per pair
    std::uint64_t seed = 0;
};
DifferenceTable sample_differences(const Model& model, CoefficientKind kind, int n_max,
                                   std::size_t pairs, std::uint64_t seed, int workers = 1);

/// Estimate from precomputed samples (n >= 0, p >= 1). Markov at n = 0
/// returns ||X_1||_p, otherwise twice the star norm.
CoefficientEstimate estimate_from_table(const Model& model, const DifferenceTable& table, int n,
                                        double p, CoefficientKind kind);

/// One-shot estimate with the tightest available analytic bound attached.
CoefficientEstimate estimate_coefficient(const Model& model, int n, double p, CoefficientKind kind,
                                         std::size_t budget, std::uint64_t seed, int workers = 1);

// --- analytic bounds ---------------------------------------------------------

struct LinearBounds {
    double wu = 0.0;
    std::optional<double> star;  ///< needs p >= 2
};

/// c(2 ||eps||_p |a_n|) and c((p - 1) ||eps||_p sqrt(sum_{i>=n} a_i^2)).
LinearBounds bound_linear(const LinearProcess& lp, int n, double p,
                          std::optional<ConcaveModulus> modulus = std::nullopt,
                          double burkholder = -1.0);

/// Either (beta, omega1, omega2, C) directly or the raw contraction data of
/// the iterated-random-function lemma.
struct IrfBoundParams {
    ConcaveModulus beta{1.0, 1.0};
    double omega1 = 0.5;
    double omega2 = 0.5;
    double constant = 1.0;
    std::string derivation;  ///< how omega1, omega2, C were obtained
};

struct IrfRawParams {
    double p = 2.0;
    double alpha = 2.0;       ///< contraction exponent
    double c_contr = 1.0;     ///< C in E d^alpha <= C rho^n d^alpha
    double rho = 0.5;
    double s = 0.0;           ///< growth exponent of |h|
    double t = 0.0;           ///< growth exponent of the local modulus
    double eta_p = 1.0;       ///< int eta^p dmu
    double eta_tilde_p = 1.0; ///< int eta~^p dmu
    double chi_alpha = 1.0;   ///< int chi^alpha dnu
    ConcaveModulus beta{1.0, 1.0};
};

/// Derives (omega1, omega2, C) with eps at the midpoint of its admissible
/// interval. Throws SpecError unless s < alpha/p and t <= alpha/p.
IrfBoundParams derive_irf_params(const IrfRawParams& raw);

/// C (beta(omega1^n) + omega2^n).
double bound_irf(const IrfBoundParams& params, int n);

/// 2^{m/p+1} omega_{p,h}(diam A^{-n}[0,1]^m).
double bound_torus(const TorusEndomorphism& t, const ModulusEvaluator& omega_p, int n);

/// 2 omega_{inf,h}(alpha_bar^n).
double bound_affine(const PiecewiseAffine& a, const ModulusEvaluator& omega_inf, int n);

/// Tightest applicable bound for a coefficient kind, with its name.
std::optional<std::pair<double, std::string>> analytic_bound(const Model& model, int n, double p,
                                                             CoefficientKind kind);

// --- contraction ---------------------------------------------------------------

struct ContractionEstimate {
    double alpha = 1.0;
    std::vector<MeanEstimate> decay;  ///< E d(W_{n,x}, W_{n,y})^alpha, n = 0..horizon
    double rho_hat = 0.0;
    double fit_residual = 0.0;
    bool warning = false;  ///< no decay: the family may violate the contraction hypothesis
};

ContractionEstimate estimate_contraction(const Model& model, double alpha, int horizon,
                                         std::size_t budget, std::uint64_t seed, int workers = 1);

// --- Wu versus star ---------------------------------------------------------------

struct WuStarRow {
    int n = 0;
    CoefficientEstimate wu;
    CoefficientEstimate star;
    double slack = 0.0;  ///< 3 combined standard errors
    bool holds = false;  ///< wu <= 2 star + slack
};

std::vector<WuStarRow> check_wu_vs_star(const Model& model, int n_max, double p,
                                        std::size_t budget, std::uint64_t seed, int workers = 1);

// --- pathwise affine bound ----------------------------------------------------------

struct PathwiseReport {
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;  ///< min over samples of bound - |X_n - X_n^*|
};

/// |X_n - X_n^*| <= 2 omega_inf(r^n) for every sampled star pair, with r the
/// contraction rate (alpha_bar, or the cube diameter for torus maps).
PathwiseReport pathwise_affine_check(const Model& model, int n_max, std::size_t pairs,
                                     std::uint64_t seed, int workers = 1);

}  // namespace sipkit
