// Path generation for the process families: backward chains, forward
// series, affine propagation of noise windows and the invariant mean.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "sipkit/family.hpp"
#include "sipkit/observable.hpp"
#include "sipkit/rng.hpp"
#include "sipkit/types.hpp"

namespace sipkit {

/// A family together with the observable read off its states. Linear
/// processes use their own transform g and ignore `observable`.
struct Model {
    ProcessFamily family;
    Observable observable;
    double mean = 0.0;  ///< pi(h) subtracted when centered
    bool centered = false;

    /// h(w) - mean (or h(w) when not centered).
    double value(const Point& w) const;
    /// g(s) - mean for a linear process with inner sum s.
    double linear_value(double s) const;
    int dim() const { return state_dim(family); }
    void validate() const;
};

/// Provenance-tagged invariant mean.
struct InvariantMean {
    double value = 0.0;
    double se = 0.0;
    std::string method;  ///< "exact", "quadrature" or "mc"
};

/// u -> lin * u + off.
struct AffineState {
    LinMap lin;
    Point off;

    static AffineState identity(int m);
    Point apply(const Point& u) const;
    /// (A2, B2) o (A1, B1) = (A2 A1, A2 B1 + B2): `after` applied to the result of `before`.
    static AffineState compose(const AffineState& after, const AffineState& before);
};

struct PathBundle {
    std::vector<double> noise;  ///< eps_1..eps_n (symbol indices for symbol families)
    std::vector<Point> states;  ///< W_0..W_n (empty for linear processes)
    std::vector<double> x;      ///< X_1..X_n
    bool centered = false;
    double mean = 0.0;
    double truncation_bound = 0.0;  ///< forward series only
};

/// One step W -> F(eps, W) of the backward chain.
Point chain_step(const ProcessFamily& family, const Point& w, double eps);

/// Exact backward chain from w0. Torus states are reduced to [0,1)^m after
/// every step.
PathBundle simulate_chain(const Model& model, const Point& w0, std::span<const double> noise);

/// Largest deviation |W_j - F(eps_j, W_{j-1})| over the path (torus
/// differences measured with wrap-around).
double recursion_residual(const Model& model, const PathBundle& path);

/// Effective truncation depth of a linear process.
int linear_depth(const LinearProcess& lp);

/// X_1..X_n of a linear process. `noise` holds eps_{1-D}..eps_n with
/// D = linear_depth(lp), so its length is n + D.
std::vector<double> linear_values(const Model& model, std::span<const double> noise);

/// Certified truncation error of the forward series at depth D.
double forward_tail_bound(const ProcessFamily& family, int depth);

/// Forward (one-sided) states Z_n truncated at depth D.
///   torus:  Z_n = sum_{k=0}^{D} A^{-k-1} gamma_{eps_{n+k}}, reduced mod 1,
///           noise eps_1..eps_{N+D};
///   affine: Z_n = s_{eps_n} o ... o s_{eps_{n+D}}(0), noise eps_1..eps_{N+D};
///   linear: X_n = g(sum_{i=0}^{D} a_i eps_{n-i}), noise eps_{1-D}..eps_N.
/// Throws ToleranceError naming the required depth when the tail bound
/// exceeds `tolerance`.
PathBundle simulate_forward(const Model& model, std::span<const double> noise, int depth,
                            double tolerance = 1e-12);

/// Smallest depth whose forward tail bound is below `tolerance` (capped at 4096).
int required_forward_depth(const ProcessFamily& family, double tolerance);

/// The affine map u -> state after consuming `window` (eps_s..eps_j).
/// Throws UnsupportedFamily for linear processes, iterated random
/// functions and torus maps that are not cube preserving.
AffineState affine_propagation(const ProcessFamily& family, std::span<const double> window);

/// Affine map of a single step with symbol `eps`.
AffineState affine_step(const ProcessFamily& family, double eps);

/// pi(h): exact for trigonometric and piecewise observables under Haar /
/// Lebesgue measure, quadrature for callables on m <= 3, Monte Carlo
/// otherwise (budget paths, seeded by `seed`).
InvariantMean invariant_mean(const ProcessFamily& family, const Observable& h,
                             std::uint64_t seed = 0, std::size_t budget = 100000);

/// Builds a model and, when `center` is set, centers it by invariant_mean.
Model make_model(ProcessFamily family, Observable h, bool center = true, std::uint64_t seed = 0);

/// W_0 drawn from the stationary law: uniform for torus and affine
/// families, burn-in from the base point for iterated random functions.
Point draw_stationary(const ProcessFamily& family, RngStream& rng);

/// One noise variable for the family (symbol index or real value).
double draw_noise(const ProcessFamily& family, RngStream& rng);

/// A stationary path of length n from a single stream: W_0, then eps_1..eps_n.
/// Linear processes draw the D past innovations first.
PathBundle sample_path(const Model& model, int n, RngStream& rng);

}  // namespace sipkit
