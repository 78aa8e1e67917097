#include "sipkit/condexp.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "sipkit/quadrature.hpp"

namespace sipkit {

namespace {

constexpr double kCondTol = 1e-10;

/// int_0^1 e^{2 pi i t u} du.
std::complex<double> phi(double t) {
    if (std::abs(t) < 1e-300) return {1.0, 0.0};
    const double w = 2.0 * std::numbers::pi * t;
    return (std::exp(std::complex<double>(0.0, w)) - 1.0) / std::complex<double>(0.0, w);
}

double trig_average(const TrigPolynomial& t, const AffineState& map) {
    double total = 0.0;
    const int m = t.dim;
    for (const auto& term : t.terms) {
        Point k(m);
        for (int i = 0; i < m; ++i) k(i) = term.frequency[static_cast<std::size_t>(i)];
        const Point v = map.lin.transpose() * k;
        std::complex<double> z = std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * k.dot(map.off)));
        for (int i = 0; i < m; ++i) z *= phi(v(i));
        total += term.cos_coef * z.real() + term.sin_coef * z.imag();
    }
    return total;
}

double cube_average(const std::function<double(const Point&)>& f, const AffineState& map) {
    const int m = static_cast<int>(map.lin.cols());
    if (m > 3) throw ToleranceError("cube quadrature supports m <= 3 only; use cond_exp_mc");
    const auto r = integrate_cube(
        [&](std::span<const double> u) {
            Point x(m);
            for (int i = 0; i < m; ++i) x(i) = u[static_cast<std::size_t>(i)];
            return f(map.apply(x));
        },
        m, kCondTol);
    if (!r.converged)
        throw ToleranceError("conditional expectation quadrature reached only " +
                             std::to_string(r.error));
    return r.value;
}

double clip(double x, double level) { return std::max(-level, std::min(level, x)); }

bool is_point_mass(const AffineState& map) { return map.lin.cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

void ConditioningWindow::validate() const {
    if (start < 1) throw SpecError("conditioning window: start must be >= 1");
    if (!noise.empty() && static_cast<int>(noise.size()) != end - start + 1)
        throw SpecError("conditioning window: noise length must equal end - start + 1");
}

double affine_average(const Model& model, const AffineState& map) {
    const double shift = model.centered ? model.mean : 0.0;
    if (is_point_mass(map)) return model.observable(map.off) - shift;
    const auto& h = model.observable;
    if (h.is_trig()) return trig_average(h.trig(), map) - shift;
    if (h.is_piecewise()) {
        const double a = map.lin(0, 0), b = map.off(0);
        return integrate_piecewise(h.piecewise(), b, a + b) / a - shift;
    }
    return cube_average([&](const Point& x) { return h(x); }, map) - shift;
}

double affine_average_clipped(const Model& model, const AffineState& map, double level) {
    if (!(level > 0.0)) throw SpecError("truncation level must be > 0");
    const double shift = model.centered ? model.mean : 0.0;
    if (is_point_mass(map)) return clip(model.observable(map.off) - shift, level);
    const auto& h = model.observable;
    if (h.is_piecewise()) {
        const double a = map.lin(0, 0), b = map.off(0);
        const double lo = std::min(b, a + b), hi = std::max(b, a + b);
        return integrate_piecewise_clipped(h.piecewise(), lo, hi, shift, level) / std::abs(a);
    }
    if (const auto sup = h.sup_abs(); sup && *sup + std::abs(shift) <= level)
        return affine_average(model, map);
    return cube_average([&](const Point& x) { return clip(h(x) - shift, level); }, map);
}

double affine_average_residual_abs(const Model& model, const AffineState& map, double level) {
    if (!(level > 0.0)) throw SpecError("truncation level must be > 0");
    const double shift = model.centered ? model.mean : 0.0;
    const auto& h = model.observable;
    if (is_point_mass(map)) {
        const double y = h(map.off) - shift;
        return std::abs(y - clip(y, level));
    }
    if (h.is_piecewise()) {
        const double a = map.lin(0, 0), b = map.off(0);
        const double lo = std::min(b, a + b), hi = std::max(b, a + b);
        return integrate_piecewise_clip_residual_abs(h.piecewise(), lo, hi, shift, level) /
               std::abs(a);
    }
    if (const auto sup = h.sup_abs(); sup && *sup + std::abs(shift) <= level) return 0.0;
    return cube_average(
        [&](const Point& x) {
            const double y = h(x) - shift;
            return std::abs(y - clip(y, level));
        },
        map);
}

namespace {

AffineState window_map(const Model& model, const ConditioningWindow& window) {
    window.validate();
    if (!has_affine_structure(model.family))
        throw UnsupportedFamily("exact conditional expectation needs an affine family (" +
                                family_name(model.family) + "); use cond_exp_mc");
    AffineState map = affine_propagation(model.family, window.noise);
    if (window.include_initial) {
        if (window.initial.size() != model.dim())
            throw SpecError("conditioning window: initial state has wrong dimension");
        map = {LinMap::Zero(model.dim(), model.dim()), map.apply(window.initial)};
    }
    return map;
}

}  // namespace

double cond_exp(const Model& model, const ConditioningWindow& window) {
    if (window.include_initial && std::holds_alternative<TorusEndomorphism>(model.family) &&
        !std::get<TorusEndomorphism>(model.family).cube_preserving()) {
        // Measurable case needs no propagation: run the chain itself.
        const auto path = simulate_chain(model, window.initial, window.noise);
        return path.x.empty() ? model.value(window.initial) : path.x.back();
    }
    return affine_average(model, window_map(model, window));
}

double cond_exp_truncated(const Model& model, double level, const ConditioningWindow& window) {
    return affine_average_clipped(model, window_map(model, window), level);
}

MeanEstimate cond_exp_mc(const Model& model, const ConditioningWindow& window,
                         std::size_t budget, std::uint64_t seed) {
    window.validate();
    if (budget < 1000) throw SpecError("cond_exp_mc: budget must be >= 1000");
    const auto* lp = std::get_if<LinearProcess>(&model.family);
    if (window.include_initial && !lp) {
        const auto path = simulate_chain(model, window.initial, window.noise);
        const double v = path.x.empty() ? model.value(window.initial) : path.x.back();
        return {v, 0.0, budget};
    }
    std::vector<double> samples(budget);
    const std::uint64_t master = derive_seed(seed, "cond-exp-mc");
    for (std::size_t i = 0; i < budget; ++i) {
        RngStream rng(master, i);
        if (lp) {
            const int depth = linear_depth(*lp);
            // eps_{end-D}..eps_end with the window's part held fixed.
            std::vector<double> noise(static_cast<std::size_t>(depth) + 1);
            const int first = window.end - depth;
            for (int t = first; t <= window.end; ++t) {
                const auto idx = static_cast<std::size_t>(t - first);
                if (!window.noise.empty() && t >= window.start)
                    noise[idx] = window.noise[static_cast<std::size_t>(t - window.start)];
                else
                    noise[idx] = lp->noise.draw_value(rng);
            }
            samples[i] = linear_values(model, noise)[0];
        } else {
            const Point w0 = draw_stationary(model.family, rng);
            const auto path = simulate_chain(model, w0, window.noise);
            samples[i] = path.x.empty() ? model.value(w0) : path.x.back();
        }
        if (!std::isfinite(samples[i]))
            throw NumericalError("cond_exp_mc: non-finite sample at index " + std::to_string(i));
    }
    return batch_means(samples);
}

}  // namespace sipkit
