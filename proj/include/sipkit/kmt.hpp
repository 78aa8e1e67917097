// Truncation and block schedules on base-3 windows, m-dependent
// approximations, block variances, long-run variance and the condition
// checkers of the strong-approximation argument.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sipkit/model.hpp"
#include "sipkit/stats.hpp"

namespace sipkit {

/// M_k = 3^{k/p}, m_k = max(1, round(3^{k beta/p})), k0 = first k >= 1 with
/// m_k <= 3^{k-2}/2. Vectors are indexed by k = 0..k_max.
struct KmtSchedule {
    double p = 3.0;
    double beta = 1.0;
    int k_max = 8;
    int k0 = 0;  ///< 0 when no k <= k_max qualifies
    std::vector<double> M;
    std::vector<int> m;

    double level(int k) const { return M.at(static_cast<std::size_t>(k)); }
    int block(int k) const { return m.at(static_cast<std::size_t>(k)); }
};

KmtSchedule make_schedule(double p, double beta, int k_max);

/// m_k k / 3^{2k/p} for k = 1..k_max (should decrease towards 0).
std::vector<double> schedule_growth_ratio(const KmtSchedule& s);

struct Clipped {
    double phi = 0.0;  ///< (x ^ M) v (-M)
    double g = 0.0;    ///< x - phi
};
Clipped clip(double x, double level);

struct KmtBlocks {
    int k = 0;
    int m = 0;
    double M = 0.0;
    int window_start = 0;  ///< 1 + 3^{k-1}
    int span = 0;          ///< window entries simulated per path
    double clip_mean = 0.0;  ///< E phi_k(X_1)
    bool exact = true;       ///< X~ from exact conditional expectations
    double ell = 0.0;        ///< 3^{k(p-2)/(2p)} (log k)^{-1/2}
    std::vector<std::vector<double>> x;        ///< [path][i] X_{k, window_start + i}
    std::vector<std::vector<double>> x_tilde;  ///< [path][i]
};

/// Simulates `ensemble` paths over the first `span` entries of the window
/// [1 + 3^{k-1}, 3^k] (span = 0: the whole window). Each path starts from
/// the stationary law just before the earliest innovation it needs. Path i
/// uses stream (seed, i) for every k. Requires k0 <= k and 3^k <= 3^10.
KmtBlocks build_blocks(const Model& model, const KmtSchedule& schedule, int k,
                       std::size_t ensemble, std::uint64_t seed, int workers = 1, int span = 0,
                       std::size_t mc_budget = 1000);

/// E phi_M(X_j | eps_{j-m}..eps_j) - E phi_M(X) for the given noise window
/// (m + 1 entries ending at time j); exact for affine families.
double m_dependent_value(const Model& model, double level, double clip_mean,
                         std::span<const double> window, std::size_t mc_budget,
                         std::uint64_t seed, bool* exact = nullptr);

/// nu_k = (E W~_m^2 + 2 E W~_m (W~_{2m} - W~_m)) / m. Needs span >= 2m.
MeanEstimate nu_k(const KmtBlocks& blocks);

/// Lag-i covariances (i = 0..lags) of X_{k,.} and of X~_{k,.} started
/// at offset m (so c~_{k,i} = cov(X~_{k,m+1}, X~_{k,m+1+i})).
struct BlockCovariances {
    std::vector<MeanEstimate> hat;
    std::vector<MeanEstimate> tilde;
};
BlockCovariances block_covariances(const KmtBlocks& blocks, int lags);

struct Sigma2Estimate {
    MeanEstimate series;        ///< Var(X_1) + 2 sum_{i<=L} Cov(X_1, X_{1+i})
    double tail_bound = 0.0;    ///< bound on the omitted covariances
    bool tail_certified = false;
    MeanEstimate batch;         ///< E S_n^2 / n over independent paths of length n
    int lag_cutoff = 0;
    int batch_length = 0;
    bool agree = false;         ///< within 6 combined standard errors
    std::string warning;
};

Sigma2Estimate sigma2(const Model& model, int lag_cutoff, std::size_t ensemble,
                      std::uint64_t seed, int workers = 1, int batch_length = 256);

// --- condition checkers ---------------------------------------------------------

inline constexpr const char* kFiniteKLabel = "finite-k diagnostic, not a proof";
inline constexpr const char* kRigorousLabel = "rigorous for power-law inputs";

struct ConditionRow {
    int k = 0;
    double summand = 0.0;
    double se = 0.0;
    double cumulative = 0.0;
};

struct ConditionReport {
    std::string name;
    std::vector<ConditionRow> rows;
    double slope = 0.0;  ///< least-squares slope of log(summand) against k
    bool convergent = false;
    bool skipped = false;
    std::string verdict;  ///< "convergent", "divergent", "zero", "skipped: ..."
    std::string label;
};

struct BlwOptions {
    double alpha = 0.0;  ///< exponent of the m-dependence condition (0: p)
    double r = 0.0;      ///< moment of the Sakhanenko condition (0: default_sakhanenko_r)
    std::size_t ensemble = 20000;       ///< paths for nu_k and the Sakhanenko term
    std::size_t window_ensemble = 400;  ///< paths for the full-window m-dependence term
    std::size_t mc_budget = 1000;
    std::optional<double> sigma;  ///< taken from sigma2 when absent
    int sigma_lags = 16;
    std::size_t sigma_ensemble = 100000;
};

/// max(p + 1, (2p - 2 beta)/(2 - beta) + 2): inside beta (r - 2) < 2 (r - p).
double default_sakhanenko_r(double p, double beta);

struct BlwReport {
    KmtSchedule schedule;
    double sigma = 0.0;
    double sigma_se = 0.0;
    std::vector<MeanEstimate> nu;  ///< per k in [k0, k_max]
    std::vector<ConditionReport> conditions;  ///< truncation, m-dependence, sakhanenko, variance
    std::string label = kFiniteKLabel;
};

BlwReport check_blw_conditions(const Model& model, const KmtSchedule& schedule,
                               const BlwOptions& options, std::uint64_t seed, int workers = 1);

/// delta'_q(n) = c n^{-gamma} for n >= 1.
struct PowerLawDecay {
    double c = 1.0;
    double gamma = 1.0;
    double operator()(double n) const { return n <= 0.0 ? c : c * std::pow(n, -gamma); }
};

struct DeltaPrimeReport {
    double p = 0.0, beta = 0.0, r = 0.0;
    std::vector<ConditionReport> conditions;  ///< first-a, first-b, fourth, second, third
    bool all_convergent = false;
    std::string label;
};

/// Closed-form verdicts for power-law delta'; partial sums for k <= K_max
/// are reported alongside.
DeltaPrimeReport check_delta_prime_conditions(const PowerLawDecay& decay,
                                              const KmtSchedule& schedule, double r);

/// Same series from tabulated delta' values (finite-k diagnostic only).
DeltaPrimeReport check_delta_prime_conditions(const std::function<double(int)>& delta_prime,
                                              const KmtSchedule& schedule, double r);

struct GmReport {
    int n = 0;
    double M = 0.0;
    double p = 0.0;
    double delta_prime = 0.0;     ///< 2 x Monte Carlo ||X_n - X_n^*||_p
    double delta_prime_ci = 0.0;
    double epsilon = 0.0;
    double lhs = 0.0;  ///< ||E(g_M(X_n) | W_0) - E g_M(X_n)||_2^2
    double lhs_se = 0.0;
    double rhs = 0.0;  ///< at the upper end of the delta' interval
    double moment_p = 0.0;  ///< E|X_1|^p
    bool inner_exact = true;
    bool holds = false;
};

GmReport gM_projection_check(const Model& model, int n, double M, double p, std::size_t budget,
                             std::uint64_t seed, int workers = 1);

}  // namespace sipkit
