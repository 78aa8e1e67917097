// Conditional expectations of X_j given a window of innovations.
#pragma once

#include <cstdint>
#include <vector>

#include "sipkit/model.hpp"
#include "sipkit/stats.hpp"

namespace sipkit {

/// sigma(eps_start, ..., eps_end), optionally together with W_{start-1}.
/// An empty noise window conditions on nothing.
struct ConditioningWindow {
    int start = 1;
    int end = 0;
    std::vector<double> noise;  ///< eps_start..eps_end
    bool include_initial = false;
    Point initial;  ///< W_{start-1} when include_initial

    void validate() const;
};

/// E(h(A u + B)) for u uniform on the unit cube, minus the model mean.
/// Exact for trigonometric and piecewise observables.
double affine_average(const Model& model, const AffineState& map);

/// E(phi_M(h(A u + B) - mean)) with phi_M(x) = (x ^ M) v (-M).
double affine_average_clipped(const Model& model, const AffineState& map, double level);

/// E|g_M(h(A u + B) - mean)| with g_M(x) = x - phi_M(x).
double affine_average_residual_abs(const Model& model, const AffineState& map, double level);

/// E(X_j | window) for torus (cube preserving) and piecewise affine
/// families. Throws UnsupportedFamily for the others (use cond_exp_mc) and
/// ToleranceError when quadrature does not reach 1e-10.
double cond_exp(const Model& model, const ConditioningWindow& window);

/// E(phi_M(X_j) | window).
double cond_exp_truncated(const Model& model, double level, const ConditioningWindow& window);

/// Monte Carlo E(X_j | window): the unconditioned randomness (W_{start-1}
/// or the innovations before `start`) is resampled `budget` times.
MeanEstimate cond_exp_mc(const Model& model, const ConditioningWindow& window,
                         std::size_t budget, std::uint64_t seed);

}  // namespace sipkit
