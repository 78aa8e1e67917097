#include "sipkit/coupling.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "sipkit/parallel.hpp"

namespace sipkit {

std::string kind_name(CoefficientKind k) {
    switch (k) {
        case CoefficientKind::Wu:
            return "wu";
        case CoefficientKind::Star:
            return "star";
        case CoefficientKind::Markov:
            return "markov";
        case CoefficientKind::SupInf:
            return "sup";
    }
    return "star";
}

CoefficientKind parse_kind(const std::string& s) {
    if (s == "wu") return CoefficientKind::Wu;
    if (s == "star") return CoefficientKind::Star;
    if (s == "markov" || s == "delta-prime") return CoefficientKind::Markov;
    if (s == "sup" || s == "sup-inf") return CoefficientKind::SupInf;
    throw SpecError("unknown coefficient kind '" + s + "'");
}

// --- pairs ------------------------------------------------------------------------

PathPair simulate_star_pair(const Model& model, int n, RngStream& rng) {
    if (n < 0) throw SpecError("star pair: n must be >= 0");
    if (const auto* lp = std::get_if<LinearProcess>(&model.family)) {
        const auto depth = static_cast<std::size_t>(linear_depth(*lp));
        const auto len = static_cast<std::size_t>(n);
        std::vector<double> a(depth + len), b(depth + len);
        for (std::size_t i = 0; i < depth; ++i) a[i] = lp->noise.draw_value(rng);
        for (std::size_t i = 0; i < depth; ++i) b[i] = lp->noise.draw_value(rng);
        for (std::size_t i = depth; i < depth + len; ++i) a[i] = b[i] = lp->noise.draw_value(rng);
        if (n == 0) return {};
        return {linear_values(model, a), linear_values(model, b)};
    }
    const Point w0 = draw_stationary(model.family, rng);
    const Point w0s = draw_stationary(model.family, rng);
    std::vector<double> noise(static_cast<std::size_t>(n));
    for (double& e : noise) e = draw_noise(model.family, rng);
    return {simulate_chain(model, w0, noise).x, simulate_chain(model, w0s, noise).x};
}

PathPair simulate_wu_pair(const Model& model, int n, RngStream& rng) {
    const auto* lp = std::get_if<LinearProcess>(&model.family);
    if (!lp) throw UnsupportedFamily("the Wu coupling is defined for linear processes only");
    const auto depth = static_cast<std::size_t>(linear_depth(*lp));
    const auto len = static_cast<std::size_t>(std::max(n, 0));
    std::vector<double> a(depth + len);
    for (double& e : a) e = lp->noise.draw_value(rng);
    std::vector<double> b = a;
    const double replacement = lp->noise.draw_value(rng);
    if (depth >= 1) b[depth - 1] = replacement;  // eps_0
    if (n == 0) return {};
    return {linear_values(model, a), linear_values(model, b)};
}

DifferenceTable sample_differences(const Model& model, CoefficientKind kind, int n_max,
                                   std::size_t pairs, std::uint64_t seed, int workers) {
    if (n_max < 1) throw SpecError("sample_differences: n_max must be >= 1");
    const bool wu = kind == CoefficientKind::Wu;
    const std::uint64_t master = derive_seed(seed, wu ? "wu-pair" : "star-pair");
    DifferenceTable t;
    t.seed = seed;
    t.abs_diff.assign(static_cast<std::size_t>(n_max), std::vector<double>(pairs));
    t.abs_x1.resize(pairs);
    parallel_for(pairs, workers, [&](std::size_t i) {
        RngStream rng(master, i);
        const PathPair pp = wu ? simulate_wu_pair(model, n_max, rng)
                               : simulate_star_pair(model, n_max, rng);
        for (int k = 0; k < n_max; ++k) {
            const double d = std::abs(pp.x[static_cast<std::size_t>(k)] -
                                      pp.x_star[static_cast<std::size_t>(k)]);
            if (!std::isfinite(d))
                throw NumericalError("coupling: non-finite difference at pair " +
                                     std::to_string(i) + ", lag " + std::to_string(k + 1));
            t.abs_diff[static_cast<std::size_t>(k)][i] = d;
        }
        t.abs_x1[i] = std::abs(pp.x[0]);
    });
    return t;
}

CoefficientEstimate estimate_from_table(const Model& model, const DifferenceTable& table, int n,
                                        double p, CoefficientKind kind) {
    (void)model;
    if (!(p >= 1.0)) throw SpecError("coefficient: p must be >= 1");
    CoefficientEstimate e;
    e.n = n;
    e.p = p;
    e.kind = kind;
    e.seed = table.seed;
    NormEstimate ne;
    if (kind == CoefficientKind::Markov && n == 0) {
        ne = lp_norm(table.abs_x1, p);
    } else {
        if (n < 1 || n > static_cast<int>(table.abs_diff.size()))
            throw SpecError("coefficient: lag outside the sampled range");
        ne = lp_norm(table.abs_diff[static_cast<std::size_t>(n - 1)], p);
        if (kind == CoefficientKind::Markov) {
            ne.value *= 2.0;
            ne.se *= 2.0;
        }
    }
    e.estimate = ne.value;
    e.se = ne.se;
    e.ci = ne.half_width();
    e.samples = ne.count;
    return e;
}

namespace {

CoefficientEstimate estimate_sup(const Model& model, int n, double p, std::size_t budget,
                                 std::uint64_t seed, int workers) {
    if (std::holds_alternative<LinearProcess>(model.family))
        throw UnsupportedFamily("delta_inf needs a Markov state");
    constexpr std::size_t kStarts = 16;
    const std::size_t inner = std::max<std::size_t>(budget / kStarts, 64);
    const std::uint64_t master = derive_seed(seed, "sup-pair");
    std::vector<MeanEstimate> means(kStarts);
    const int m = model.dim();
    parallel_for(kStarts, workers, [&](std::size_t s) {
        RngStream start_rng(master, s);
        Point x(m), y(m);
        if (s == 0) {
            x.setZero();
            y.setConstant(0.5);
            if (std::holds_alternative<PiecewiseAffine>(model.family)) y.setConstant(1.0);
        } else {
            x = draw_stationary(model.family, start_rng);
            y = draw_stationary(model.family, start_rng);
        }
        std::vector<double> d(inner);
        for (std::size_t i = 0; i < inner; ++i) {
            RngStream rng(master, kStarts + s * inner + i);
            std::vector<double> noise(static_cast<std::size_t>(n));
            for (double& e : noise) e = draw_noise(model.family, rng);
            const double a = simulate_chain(model, x, noise).x.back();
            const double b = simulate_chain(model, y, noise).x.back();
            d[i] = std::abs(a - b);
        }
        means[s] = batch_means(d);
    });
    std::size_t best = 0;
    for (std::size_t s = 1; s < kStarts; ++s)
        if (means[s].mean > means[best].mean) best = s;
    CoefficientEstimate e;
    e.n = n;
    e.p = p;
    e.kind = CoefficientKind::SupInf;
    e.estimate = means[best].mean;
    e.se = means[best].se;
    e.ci = means[best].half_width();
    e.samples = inner * kStarts;
    e.seed = seed;
    return e;
}

ConcaveModulus linear_modulus(const LinearProcess& lp) {
    switch (lp.g.kind) {
        case ScalarTransform::Kind::Identity:
        case ScalarTransform::Kind::Abs:
            return {1.0, 1.0};
        default:
            return lp.g.modulus;
    }
}

/// omega evaluated at a diameter that may exceed 1 on the torus.
double torus_omega(const ModulusEvaluator& ev, double delta, int m) {
    if (delta <= 1.0) return ev(delta);
    // Every shift is congruent to one of length <= sqrt(m)/2.
    if (std::sqrt(static_cast<double>(m)) / 2.0 <= 1.0) return ev(1.0);
    const auto sup = ev.observable().sup_abs();
    if (!sup) throw SpecError("torus bound: diameter above 1 needs a bounded observable");
    return 2.0 * *sup;
}

}  // namespace

CoefficientEstimate estimate_coefficient(const Model& model, int n, double p, CoefficientKind kind,
                                         std::size_t budget, std::uint64_t seed, int workers) {
    if (budget < 1000) throw SpecError("coefficient: budget must be >= 1000 pairs");
    CoefficientEstimate e;
    if (kind == CoefficientKind::SupInf) {
        e = estimate_sup(model, n, p, budget, seed, workers);
    } else {
        const auto table = sample_differences(model, kind, std::max(n, 1), budget, seed, workers);
        e = estimate_from_table(model, table, n, p, kind);
    }
    if (const auto b = analytic_bound(model, n, p, kind)) {
        e.analytic_bound = b->first;
        e.bound_name = b->second;
    }
    return e;
}

// --- analytic bounds ---------------------------------------------------------------

LinearBounds bound_linear(const LinearProcess& lp, int n, double p,
                          std::optional<ConcaveModulus> modulus, double burkholder) {
    const ConcaveModulus c = modulus.value_or(linear_modulus(lp));
    const double eps_p = lp.noise.lp_norm(p);
    LinearBounds out;
    out.wu = c(2.0 * eps_p * std::abs(lp.coefficient(n)));
    if (p >= 2.0) {
        const double cp = burkholder > 0.0 ? burkholder : p - 1.0;
        out.star = c(cp * eps_p * lp.tail_l2(n));
    }
    return out;
}

IrfBoundParams derive_irf_params(const IrfRawParams& raw) {
    const double p = raw.p, a = raw.alpha;
    if (!(raw.s >= 0.0 && raw.s < a / p))
        throw SpecError("irf bound: need 0 <= s < alpha/p (s = " + std::to_string(raw.s) + ")");
    if (!(raw.t >= 0.0 && raw.t <= a / p))
        throw SpecError("irf bound: need 0 <= t <= alpha/p (t = " + std::to_string(raw.t) + ")");
    if (!(raw.rho > 0.0 && raw.rho < 1.0)) throw SpecError("irf bound: need 0 < rho < 1");
    if (!(a >= 1.0)) throw SpecError("irf bound: need alpha >= 1");
    // Integrated contraction: C(alpha) = C 2^alpha int chi^alpha, rho(alpha) = rho.
    const double c_alpha = raw.c_contr * std::pow(2.0, a) * raw.chi_alpha;
    // (rho^{1/alpha} / rho^eps) < 1 iff eps < 1/alpha; eps at the midpoint.
    const double eps = 0.5 / a;
    IrfBoundParams out;
    out.beta = raw.beta;
    out.omega1 = std::pow(raw.rho, eps);
    out.omega2 = std::pow(std::pow(raw.rho, 1.0 / a) / std::pow(raw.rho, eps), (a - raw.s * p) / p);
    const double c1 = std::pow(raw.eta_tilde_p * std::pow(raw.chi_alpha, p * raw.t / a), 1.0 / p);
    const double c2 = std::pow(std::pow(2.0, p) * raw.eta_p * std::pow(raw.chi_alpha, raw.s * p / a) *
                                   std::pow(c_alpha, 1.0 - raw.s * p / a),
                               1.0 / p);
    out.constant = 2.0 * std::max(c1, c2);
    out.derivation = "eps = 1/(2 alpha) = " + std::to_string(eps) +
                     " (midpoint of (0, 1/alpha)); omega1 = rho^eps, omega2 = (rho^{1/alpha - eps})^{(alpha - s p)/p}";
    return out;
}

double bound_irf(const IrfBoundParams& params, int n) {
    if (n < 0) throw SpecError("irf bound: n must be >= 0");
    return params.constant * (params.beta(std::pow(params.omega1, n)) + std::pow(params.omega2, n));
}

double bound_torus(const TorusEndomorphism& t, const ModulusEvaluator& omega_p, int n) {
    const int m = t.dim();
    const double diam = cube_diameter(t.matrix, n);
    return std::pow(2.0, m / omega_p.p() + 1.0) * torus_omega(omega_p, diam, m);
}

double bound_affine(const PiecewiseAffine& a, const ModulusEvaluator& omega_inf, int n) {
    return 2.0 * omega_inf(std::min(1.0, std::pow(a.alpha_bar(), n)));
}

std::optional<std::pair<double, std::string>> analytic_bound(const Model& model, int n, double p,
                                                             CoefficientKind kind) {
    if (const auto* lp = std::get_if<LinearProcess>(&model.family)) {
        // The star differences are a_i (eps - eps'), and ||eps - eps'||_p <= 2 ||eps||_p.
        const auto b = bound_linear(*lp, std::max(n, 0), p, std::nullopt, 2.0 * (p - 1.0));
        if (kind == CoefficientKind::Wu) return std::pair{b.wu, std::string("linear-wu")};
        if (kind == CoefficientKind::SupInf || !b.star) return std::nullopt;
        if (kind == CoefficientKind::Markov && n == 0) return std::nullopt;
        const double scale = kind == CoefficientKind::Markov ? 2.0 : 1.0;
        return std::pair{scale * *b.star, std::string("linear-star-burkholder")};
    }
    if (kind == CoefficientKind::Wu) return std::nullopt;
    if (kind == CoefficientKind::Markov && n == 0) {
        if (const auto sup = model.observable.sup_abs())
            return std::pair{*sup + (model.centered ? std::abs(model.mean) : 0.0),
                             std::string("sup-abs")};
        return std::nullopt;
    }
    if (const auto* t = std::get_if<TorusEndomorphism>(&model.family)) {
        if (kind == CoefficientKind::SupInf) return std::nullopt;
        ModulusEvaluator ev(model.observable, p, true);
        return std::pair{bound_torus(*t, ev, n), std::string("torus-modulus")};
    }
    if (const auto* a = std::get_if<PiecewiseAffine>(&model.family)) {
        ModulusEvaluator ev(model.observable, kInfinity, false);
        return std::pair{bound_affine(*a, ev, n), std::string("affine-modulus")};
    }
    return std::nullopt;
}

// --- contraction --------------------------------------------------------------------

ContractionEstimate estimate_contraction(const Model& model, double alpha, int horizon,
                                         std::size_t budget, std::uint64_t seed, int workers) {
    if (!(alpha >= 1.0)) throw SpecError("contraction: alpha must be >= 1");
    if (horizon < 2) throw SpecError("contraction: horizon must be >= 2");
    if (std::holds_alternative<LinearProcess>(model.family))
        throw UnsupportedFamily("contraction estimates need a Markov state");
    const std::uint64_t master = derive_seed(seed, "contraction");
    const auto h = static_cast<std::size_t>(horizon);
    std::vector<std::vector<double>> d(h + 1, std::vector<double>(budget));
    parallel_for(budget, workers, [&](std::size_t i) {
        RngStream rng(master, i);
        Point x = draw_stationary(model.family, rng);
        Point y = draw_stationary(model.family, rng);
        d[0][i] = std::pow((x - y).norm(), alpha);
        for (std::size_t k = 1; k <= h; ++k) {
            const double e = draw_noise(model.family, rng);
            x = chain_step(model.family, x, e);
            y = chain_step(model.family, y, e);
            d[k][i] = std::pow((x - y).norm(), alpha);
        }
    });
    ContractionEstimate out;
    out.alpha = alpha;
    std::vector<double> ks, logs;
    for (std::size_t k = 0; k <= h; ++k) {
        out.decay.push_back(batch_means(d[k]));
        if (k >= 1 && out.decay.back().mean > 1e-280) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log(out.decay.back().mean));
        }
    }
    if (ks.size() >= 2) {
        const LinearFit fit = least_squares(ks, logs);
        out.rho_hat = std::exp(fit.slope);
        out.fit_residual = fit.residual_rms;
    } else {
        out.rho_hat = 0.0;
    }
    // Pairs that never separate carry no information about the rate.
    const bool degenerate = ks.size() < 2 && !(out.decay[0].mean > 0.0);
    out.warning = degenerate || !(out.rho_hat < 0.999) || !std::isfinite(out.rho_hat);
    return out;
}

// --- Wu versus star -----------------------------------------------------------------

std::vector<WuStarRow> check_wu_vs_star(const Model& model, int n_max, double p,
                                        std::size_t budget, std::uint64_t seed, int workers) {
    const auto wu = sample_differences(model, CoefficientKind::Wu, n_max, budget, seed, workers);
    const auto star = sample_differences(model, CoefficientKind::Star, n_max, budget, seed, workers);
    std::vector<WuStarRow> rows;
    for (int n = 1; n <= n_max; ++n) {
        WuStarRow r;
        r.n = n;
        r.wu = estimate_from_table(model, wu, n, p, CoefficientKind::Wu);
        r.star = estimate_from_table(model, star, n, p, CoefficientKind::Star);
        r.slack = 3.0 * std::sqrt(r.wu.se * r.wu.se + 4.0 * r.star.se * r.star.se);
        r.holds = r.wu.estimate <= 2.0 * r.star.estimate + r.slack;
        rows.push_back(r);
    }
    return rows;
}

// --- pathwise affine bound -----------------------------------------------------------

PathwiseReport pathwise_affine_check(const Model& model, int n_max, std::size_t pairs,
                                     std::uint64_t seed, int workers) {
    std::vector<double> bound(static_cast<std::size_t>(n_max) + 1);
    if (const auto* t = std::get_if<TorusEndomorphism>(&model.family)) {
        if (!t->cube_preserving())
            throw UnsupportedFamily("pathwise bound needs a cube-preserving torus map");
        ModulusEvaluator ev(model.observable, kInfinity, true);
        for (int n = 0; n <= n_max; ++n)
            bound[static_cast<std::size_t>(n)] =
                2.0 * torus_omega(ev, cube_diameter(t->matrix, n), t->dim());
    } else if (const auto* a = std::get_if<PiecewiseAffine>(&model.family)) {
        ModulusEvaluator ev(model.observable, kInfinity, false);
        for (int n = 0; n <= n_max; ++n) bound[static_cast<std::size_t>(n)] = bound_affine(*a, ev, n);
    } else {
        throw UnsupportedFamily("pathwise bound is defined for torus and piecewise affine families");
    }
    const std::uint64_t master = derive_seed(seed, "pathwise");
    std::vector<double> margin(pairs);
    parallel_for(pairs, workers, [&](std::size_t i) {
        RngStream rng(master, i);
        const PathPair pp = simulate_star_pair(model, n_max, rng);
        double worst = 1e300;
        for (int n = 1; n <= n_max; ++n) {
            const auto k = static_cast<std::size_t>(n - 1);
            worst = std::min(worst, bound[static_cast<std::size_t>(n)] - std::abs(pp.x[k] - pp.x_star[k]));
        }
        margin[i] = worst;
    });
    PathwiseReport r;
    r.checked = pairs * static_cast<std::size_t>(n_max);
    r.worst_margin = 1e300;
    for (double m : margin) {
        if (m < 0.0) ++r.violations;
        r.worst_margin = std::min(r.worst_margin, m);
    }
    return r;
}

}  // namespace sipkit
