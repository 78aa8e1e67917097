#include "sipkit/model.hpp"

#include <algorithm>
#include <cmath>

#include "sipkit/quadrature.hpp"
#include "sipkit/stats.hpp"

namespace sipkit {

namespace {

int symbol_index(double eps, std::size_t alphabet) {
    const double r = std::round(eps);
    if (r != eps || r < 0.0 || r >= static_cast<double>(alphabet))
        throw SpecError("noise symbol " + std::to_string(eps) + " outside alphabet of size " +
                        std::to_string(alphabet));
    return static_cast<int>(r);
}

Point reduce_unit(Point w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) -= std::floor(w(i));
    return w;
}

double wrap_distance(const Point& a, const Point& b) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double d = std::abs(a(i) - b(i));
        d = std::min(d, std::abs(1.0 - d));
        m = std::max(m, d);
    }
    return m;
}

Point gamma_point(const TorusEndomorphism& t, int k) {
    return t.gamma[static_cast<std::size_t>(k)].cast<double>();
}

}  // namespace

double Model::value(const Point& w) const {
    const double v = observable(w);
    return centered ? v - mean : v;
}

double Model::linear_value(double s) const {
    const auto& lp = std::get<LinearProcess>(family);
    const double v = lp.g(s);
    return centered ? v - mean : v;
}

void Model::validate() const {
    validate_family(family);
    if (!std::holds_alternative<LinearProcess>(family)) {
        observable.validate();
        if (observable.dim() != dim())
            throw SpecError("observable dimension " + std::to_string(observable.dim()) +
                            " does not match state dimension " + std::to_string(dim()));
    }
}

// --- AffineState -------------------------------------------------------------

AffineState AffineState::identity(int m) {
    return {LinMap::Identity(m, m), Point::Zero(m)};
}

Point AffineState::apply(const Point& u) const { return lin * u + off; }

AffineState AffineState::compose(const AffineState& after, const AffineState& before) {
    return {after.lin * before.lin, after.lin * before.off + after.off};
}

// --- backward chains -----------------------------------------------------------

Point chain_step(const ProcessFamily& family, const Point& w, double eps) {
    if (const auto* t = std::get_if<TorusEndomorphism>(&family)) {
        const int k = symbol_index(eps, t->gamma.size());
        return reduce_unit(t->inverse() * (w + gamma_point(*t, k)));
    }
    if (const auto* a = std::get_if<PiecewiseAffine>(&family)) {
        const int k = symbol_index(eps, a->slopes.size());
        if (w(0) < -1e-12 || w(0) > 1.0 + 1e-12)
            throw SpecError("piecewise affine state " + std::to_string(w(0)) +
                            " outside [0,1]");
        return scalar_point(a->slopes[static_cast<std::size_t>(k)] * w(0) +
                            a->intercepts[static_cast<std::size_t>(k)]);
    }
    if (const auto* irf = std::get_if<IteratedRandomFunction>(&family))
        return scalar_point(irf->map(eps, w(0)));
    throw UnsupportedFamily("linear processes have no state recursion; use linear_values");
}

PathBundle simulate_chain(const Model& model, const Point& w0, std::span<const double> noise) {
    if (std::holds_alternative<LinearProcess>(model.family))
        throw UnsupportedFamily("simulate_chain: linear processes have no Markov state");
    if (w0.size() != model.dim()) throw SpecError("simulate_chain: initial state has wrong dimension");
    if (std::holds_alternative<TorusEndomorphism>(model.family)) {
        for (Eigen::Index i = 0; i < w0.size(); ++i)
            if (w0(i) < 0.0 || w0(i) >= 1.0)
                throw SpecError("simulate_chain: torus state outside [0,1)^m");
    }
    PathBundle out;
    out.noise.assign(noise.begin(), noise.end());
    out.states.reserve(noise.size() + 1);
    out.x.reserve(noise.size());
    out.states.push_back(w0);
    out.centered = model.centered;
    out.mean = model.mean;
    for (double eps : noise) {
        out.states.push_back(chain_step(model.family, out.states.back(), eps));
        out.x.push_back(model.value(out.states.back()));
    }
    return out;
}

double recursion_residual(const Model& model, const PathBundle& path) {
    double worst = 0.0;
    const bool torus = std::holds_alternative<TorusEndomorphism>(model.family);
    for (std::size_t j = 1; j < path.states.size(); ++j) {
        const Point again = chain_step(model.family, path.states[j - 1], path.noise[j - 1]);
        const double d = torus ? wrap_distance(again, path.states[j])
                               : (again - path.states[j]).cwiseAbs().maxCoeff();
        worst = std::max(worst, d);
    }
    return worst;
}

// --- linear processes ----------------------------------------------------------

int linear_depth(const LinearProcess& lp) {
    if (lp.power_law) return lp.depth;
    return static_cast<int>(lp.coefficients.size()) - 1;
}

std::vector<double> linear_values(const Model& model, std::span<const double> noise) {
    const auto& lp = std::get<LinearProcess>(model.family);
    const int depth = linear_depth(lp);
    if (noise.size() < static_cast<std::size_t>(depth) + 1)
        throw SpecError("linear_values: noise shorter than the truncation depth");
    const std::size_t n = noise.size() - static_cast<std::size_t>(depth);
    std::vector<double> coef(static_cast<std::size_t>(depth) + 1);
    for (int i = 0; i <= depth; ++i) coef[static_cast<std::size_t>(i)] = lp.coefficient(i);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        // X_{t+1} uses eps_{t+1-i}, stored at noise[t + D - i].
        CompensatedSum s;
        for (int i = 0; i <= depth; ++i)
            s += coef[static_cast<std::size_t>(i)] *
                 noise[t + static_cast<std::size_t>(depth - i)];
        x[t] = model.linear_value(s.value());
    }
    return x;
}

// --- forward series -------------------------------------------------------------

double forward_tail_bound(const ProcessFamily& family, int depth) {
    if (depth < 0) throw SpecError("forward depth must be >= 0");
    if (const auto* t = std::get_if<TorusEndomorphism>(&family)) {
        double gmax = 0.0;
        for (const auto& g : t->gamma) gmax = std::max(gmax, g.cast<double>().norm());
        // sum_{j >= D+2} ||A^{-j}||: find L with q = ||A^{-L}|| < 1, then
        // bound the tail by one period of terms divided by 1 - q.
        const LinMap& inv = t->inverse();
        LinMap power = LinMap::Identity(t->dim(), t->dim());
        int period = 0;
        double q = 1.0;
        while (period < 256) {
            power = power * inv;
            ++period;
            q = power.operatorNorm();
            if (q < 1.0) break;
        }
        if (!(q < 1.0)) throw NumericalError("torus forward tail: A^{-L} never contracts");
        LinMap pj = LinMap::Identity(t->dim(), t->dim());
        for (int j = 0; j < depth + 2; ++j) pj = pj * inv;
        double block = 0.0;
        for (int j = 0; j < period; ++j) {
            block += pj.operatorNorm();
            pj = pj * inv;
        }
        return gmax * block / (1.0 - q);
    }
    if (const auto* a = std::get_if<PiecewiseAffine>(&family))
        return std::pow(a->alpha_bar(), depth + 1);
    if (const auto* lp = std::get_if<LinearProcess>(&family)) {
        const double l2 = lp->noise.lp_norm(2.0) * lp->tail_l2(depth + 1);
        switch (lp->g.kind) {
            case ScalarTransform::Kind::Identity:
            case ScalarTransform::Kind::Abs:
                return l2;
            default:
                return lp->g.modulus(l2);
        }
    }
    throw UnsupportedFamily("forward series are not defined for iterated random functions");
}

int required_forward_depth(const ProcessFamily& family, double tolerance) {
    for (int d = 0; d <= 4096; ++d)
        if (forward_tail_bound(family, d) <= tolerance) return d;
    throw ToleranceError("forward tail stays above " + std::to_string(tolerance) +
                         " up to depth 4096");
}

PathBundle simulate_forward(const Model& model, std::span<const double> noise, int depth,
                            double tolerance) {
    const double tail = forward_tail_bound(model.family, depth);
    if (tail > tolerance) {
        int need = -1;
        try {
            need = required_forward_depth(model.family, tolerance);
        } catch (const ToleranceError&) {
        }
        throw ToleranceError("forward tail bound " + std::to_string(tail) + " exceeds tolerance " +
                             std::to_string(tolerance) + "; required depth " +
                             (need >= 0 ? std::to_string(need) : std::string("> 4096")));
    }
    if (noise.size() < static_cast<std::size_t>(depth) + 1)
        throw SpecError("simulate_forward: noise shorter than depth + 1");
    PathBundle out;
    out.noise.assign(noise.begin(), noise.end());
    out.centered = model.centered;
    out.mean = model.mean;
    out.truncation_bound = tail;
    const std::size_t n = noise.size() - static_cast<std::size_t>(depth);
    if (std::holds_alternative<LinearProcess>(model.family)) {
        out.x = linear_values(model, noise);
        return out;
    }
    const auto d = static_cast<std::size_t>(depth);
    for (std::size_t t = 0; t < n; ++t) {
        // Innermost map first: start at 0 and apply eps_{t+D}, ..., eps_t.
        Point z = Point::Zero(model.dim());
        if (const auto* tor = std::get_if<TorusEndomorphism>(&model.family)) {
            for (std::size_t k = d + 1; k-- > 0;) {
                const int s = symbol_index(noise[t + k], tor->gamma.size());
                z = tor->inverse() * (z + gamma_point(*tor, s));
            }
            z = reduce_unit(z);
        } else {
            for (std::size_t k = d + 1; k-- > 0;) z = chain_step(model.family, z, noise[t + k]);
        }
        out.states.push_back(z);
        out.x.push_back(model.value(z));
    }
    return out;
}

// --- affine propagation ---------------------------------------------------------

AffineState affine_step(const ProcessFamily& family, double eps) {
    if (const auto* t = std::get_if<TorusEndomorphism>(&family)) {
        if (!t->cube_preserving())
            throw UnsupportedFamily(
                "affine propagation needs A^{-1}([0,1]^m + gamma) inside [0,1]^m; use cond_exp_mc");
        const int k = symbol_index(eps, t->gamma.size());
        return {t->inverse(), t->inverse() * gamma_point(*t, k)};
    }
    if (const auto* a = std::get_if<PiecewiseAffine>(&family)) {
        const auto k = static_cast<std::size_t>(symbol_index(eps, a->slopes.size()));
        LinMap lin(1, 1);
        lin(0, 0) = a->slopes[k];
        return {lin, scalar_point(a->intercepts[k])};
    }
    throw UnsupportedFamily("affine propagation is defined only for torus and piecewise affine "
                            "families; use cond_exp_mc");
}

AffineState affine_propagation(const ProcessFamily& family, std::span<const double> window) {
    AffineState acc = AffineState::identity(state_dim(family));
    if (window.empty()) {
        if (!has_affine_structure(family))
            throw UnsupportedFamily("affine propagation unavailable for " + family_name(family));
        return acc;
    }
    for (double eps : window) acc = AffineState::compose(affine_step(family, eps), acc);
    return acc;
}

// --- invariant mean and stationary draws ---------------------------------------

Point draw_stationary(const ProcessFamily& family, RngStream& rng) {
    if (const auto* irf = std::get_if<IteratedRandomFunction>(&family)) {
        double w = irf->base_point;
        const int burn = irf->burn_in();
        for (int i = 0; i < burn; ++i) w = irf->map(irf->noise.draw_value(rng), w);
        return scalar_point(w);
    }
    if (std::holds_alternative<LinearProcess>(family))
        throw UnsupportedFamily("linear processes have no state to draw");
    const int m = state_dim(family);
    Point w(m);
    for (int i = 0; i < m; ++i) w(i) = rng.uniform();
    return w;
}

double draw_noise(const ProcessFamily& family, RngStream& rng) {
    if (const auto* t = std::get_if<TorusEndomorphism>(&family))
        return static_cast<double>(rng.below(t->gamma.size()));
    if (const auto* a = std::get_if<PiecewiseAffine>(&family)) {
        // Branch k with probability |alpha_k|.
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < a->slopes.size(); ++k) {
            acc += std::abs(a->slopes[k]);
            if (u < acc) return static_cast<double>(k);
        }
        return static_cast<double>(a->slopes.size() - 1);
    }
    if (const auto* irf = std::get_if<IteratedRandomFunction>(&family))
        return irf->noise.draw_value(rng);
    return std::get<LinearProcess>(family).noise.draw_value(rng);
}

PathBundle sample_path(const Model& model, int n, RngStream& rng) {
    if (n < 0) throw SpecError("sample_path: negative length");
    if (const auto* lp = std::get_if<LinearProcess>(&model.family)) {
        const int depth = linear_depth(*lp);
        PathBundle out;
        out.noise.resize(static_cast<std::size_t>(n + depth));
        for (double& e : out.noise) e = lp->noise.draw_value(rng);
        out.x = linear_values(model, out.noise);
        out.centered = model.centered;
        out.mean = model.mean;
        return out;
    }
    const Point w0 = draw_stationary(model.family, rng);
    std::vector<double> noise(static_cast<std::size_t>(n));
    for (double& e : noise) e = draw_noise(model.family, rng);
    return simulate_chain(model, w0, noise);
}

InvariantMean invariant_mean(const ProcessFamily& family, const Observable& h,
                             std::uint64_t seed, std::size_t budget) {
    if (const auto* lp = std::get_if<LinearProcess>(&family)) {
        if (lp->g.kind == ScalarTransform::Kind::Identity) {
            const double mu = lp->noise.mean();
            if (mu == 0.0) return {0.0, 0.0, "exact"};
            if (!lp->power_law) {
                CompensatedSum s;
                for (double a : lp->coefficients) s += a;
                return {mu * s.value(), 0.0, "exact"};
            }
        }
    } else if (!std::holds_alternative<IteratedRandomFunction>(family)) {
        // Haar / Lebesgue invariant law on the unit cube.
        if (h.is_trig()) {
            double c = 0.0;
            for (const auto& term : h.trig().terms)
                if (std::all_of(term.frequency.begin(), term.frequency.end(),
                                [](int k) { return k == 0; }))
                    c += term.cos_coef;
            return {c, 0.0, "exact"};
        }
        if (h.is_piecewise()) return {integrate_piecewise(h.piecewise(), 0.0, 1.0), 0.0, "exact"};
        if (h.dim() <= 3) {
            const auto r = integrate_cube(
                [&h](std::span<const double> u) {
                    Point p(static_cast<Eigen::Index>(u.size()));
                    for (std::size_t i = 0; i < u.size(); ++i) p(static_cast<Eigen::Index>(i)) = u[i];
                    return h(p);
                },
                h.dim());
            if (!r.converged)
                throw ToleranceError("invariant_mean: quadrature did not converge (error " +
                                     std::to_string(r.error) + ")");
            return {r.value, r.error, "quadrature"};
        }
    }
    Model raw{family, h, 0.0, false};
    std::vector<double> samples(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        RngStream rng(derive_seed(seed, "invariant-mean"), i);
        if (std::holds_alternative<LinearProcess>(family)) {
            samples[i] = sample_path(raw, 1, rng).x[0];
        } else {
            samples[i] = h(draw_stationary(family, rng));
        }
    }
    const MeanEstimate e = batch_means(samples);
    return {e.mean, e.se, "mc"};
}

Model make_model(ProcessFamily family, Observable h, bool center, std::uint64_t seed) {
    Model m{std::move(family), std::move(h), 0.0, false};
    m.validate();
    if (center) {
        m.mean = invariant_mean(m.family, m.observable, seed).value;
        m.centered = true;
    }
    return m;
}

}  // namespace sipkit
