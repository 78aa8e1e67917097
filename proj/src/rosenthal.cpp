#include "sipkit/rosenthal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sipkit/condexp.hpp"
#include "sipkit/coupling.hpp"
#include "sipkit/parallel.hpp"
#include "sipkit/quadrature.hpp"

namespace sipkit {

namespace {

constexpr int kMaxLevel = 12;
constexpr double kExactSlack = 1e-9;

/// First index of the level-k block containing j (1-based).
int block_start(int j, int k) { return (((j - 1) >> k) << k) + 1; }

std::vector<double> window_of(const Model& model, const PathBundle& path, int s, int j) {
    int offset = 0;
    if (const auto* lp = std::get_if<LinearProcess>(&model.family)) offset = linear_depth(*lp);
    const auto first = path.noise.begin() + offset + (s - 1);
    return {first, path.noise.begin() + offset + j};
}

}  // namespace

double default_rosenthal_cp(double p) {
    return 7.35 * p / std::log(std::max(p, std::numbers::e));
}

RosenthalConstants rosenthal_constants(double p, bool strict, std::optional<double> cp_override) {
    if (!(p >= 2.0)) throw SpecError("Rosenthal constants need p >= 2");
    RosenthalConstants c;
    c.p = p;
    c.strict = strict;
    c.cp = cp_override ? *cp_override : default_rosenthal_cp(p);
    if (!(c.cp > 0.0)) throw SpecError("C_p must be positive");
    if (strict) c.cp *= p / (p - 1.0);
    c.cp_prime = c.cp * std::pow(2.0, 1.5) / (std::sqrt(2.0) - 1.0);
    c.cp_second = std::pow(2.0, 1.0 + 1.0 / p) * (c.cp + 1.0) / (std::pow(2.0, 1.0 / p) - 1.0);
    return c;
}

CondTable conditional_table(const Model& model, const PathBundle& path, std::size_t mc_budget,
                            std::uint64_t seed) {
    CondTable t;
    t.n = static_cast<int>(path.x.size());
    const auto n = static_cast<std::size_t>(t.n);
    t.value.assign(n, {});
    t.half_width.assign(n, {});
    bool exact = has_affine_structure(model.family);
    if (exact) {
        for (int j = 1; j <= t.n; ++j) {
            auto& row = t.value[static_cast<std::size_t>(j - 1)];
            row.resize(static_cast<std::size_t>(j));
            t.half_width[static_cast<std::size_t>(j - 1)].assign(static_cast<std::size_t>(j), 0.0);
            AffineState map = AffineState::identity(model.dim());
            for (int s = j; s >= 1; --s) {
                map = AffineState::compose(map, affine_step(model.family,
                                                            path.noise[static_cast<std::size_t>(s - 1)]));
                row[static_cast<std::size_t>(s - 1)] = affine_average(model, map);
            }
        }
        return t;
    }
    t.exact = false;
    const std::uint64_t master = derive_seed(seed, "cond-table");
    for (int j = 1; j <= t.n; ++j) {
        auto& row = t.value[static_cast<std::size_t>(j - 1)];
        auto& hw = t.half_width[static_cast<std::size_t>(j - 1)];
        row.resize(static_cast<std::size_t>(j));
        hw.resize(static_cast<std::size_t>(j));
        for (int s = 1; s <= j; ++s) {
            ConditioningWindow w;
            w.start = s;
            w.end = j;
            w.noise = window_of(model, path, s, j);
            const auto task = static_cast<std::uint64_t>(j) * 4096u + static_cast<std::uint64_t>(s);
            const auto e = cond_exp_mc(model, w, mc_budget, RngStream(master, task).next_u64());
            row[static_cast<std::size_t>(s - 1)] = e.mean;
            hw[static_cast<std::size_t>(s - 1)] = e.half_width();
        }
    }
    return t;
}

PathDecomposition decompose_path(const PathBundle& path, const CondTable& c, int d) {
    const int n = 1 << d;
    if (static_cast<int>(path.x.size()) < n || c.n < n)
        throw SpecError("decompose_path: path shorter than 2^d");
    auto cv = [&](int j, int s) {
        return c.value[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(s - 1)];
    };
    PathDecomposition out;
    out.U.resize(static_cast<std::size_t>(d) + 1);
    out.T.resize(static_cast<std::size_t>(d) + 1);
    for (int k = 0; k <= d; ++k) {
        const int blocks = n >> k;
        auto& u = out.U[static_cast<std::size_t>(k)];
        auto& t = out.T[static_cast<std::size_t>(k)];
        u.assign(static_cast<std::size_t>(blocks), 0.0);
        t.assign(static_cast<std::size_t>(blocks), 0.0);
        for (int l = 0; l < blocks; ++l) {
            CompensatedSum us, ts;
            for (int j = l * (1 << k) + 1; j <= (l + 1) * (1 << k); ++j) {
                const int s = block_start(j, k);
                us += path.x[static_cast<std::size_t>(j - 1)] - cv(j, s);
                if (k == 0)
                    ts += cv(j, j);
                else
                    ts += cv(j, s) - cv(j, block_start(j, k - 1));
            }
            u[static_cast<std::size_t>(l)] = us.value();
            t[static_cast<std::size_t>(l)] = ts.value();
        }
    }
    out.S.resize(static_cast<std::size_t>(n));
    CompensatedSum s;
    for (int j = 0; j < n; ++j) {
        s += path.x[static_cast<std::size_t>(j)];
        out.S[static_cast<std::size_t>(j)] = s.value();
    }
    if (!c.exact) {
        double ss = 0.0;
        for (int j = 1; j <= n; ++j)
            for (double h : c.half_width[static_cast<std::size_t>(j - 1)]) ss += h * h;
        out.mc_error = std::sqrt(ss);
    }
    return out;
}

DyadicDecomposition build_decomposition(const Model& model, int d, std::size_t ensemble,
                                        std::uint64_t seed, int workers, std::size_t mc_budget) {
    if (d < 0) throw SpecError("decomposition depth must be >= 0");
    if (d > kMaxLevel)
        throw SpecError("decomposition depth " + std::to_string(d) + " exceeds the limit " +
                        std::to_string(kMaxLevel));
    if (ensemble == 0) throw SpecError("decomposition ensemble must be >= 1");
    if (!model.centered && std::abs(model.mean) > 1e-12)
        throw SpecError("decomposition requires a centered observable");
    DyadicDecomposition dec;
    dec.d = d;
    dec.paths.resize(ensemble);
    const std::uint64_t master = derive_seed(seed, "rosenthal-path");
    std::vector<char> exact(ensemble, 1);
    parallel_for(ensemble, workers, [&](std::size_t i) {
        RngStream rng(master, i);
        const auto path = sample_path(model, 1 << d, rng);
        const auto table = conditional_table(model, path, mc_budget, RngStream(derive_seed(master, "cond"), i).next_u64());
        exact[i] = table.exact ? 1 : 0;
        dec.paths[i] = decompose_path(path, table, d);
    });
    dec.exact = std::all_of(exact.begin(), exact.end(), [](char e) { return e != 0; });
    return dec;
}

std::vector<PathVerdict> verify_pointwise(const DyadicDecomposition& dec) {
    std::vector<PathVerdict> out(dec.paths.size());
    for (std::size_t i = 0; i < dec.paths.size(); ++i) {
        const auto& pd = dec.paths[i];
        double lhs = 0.0;
        for (double s : pd.S) lhs = std::max(lhs, std::abs(s));
        double rhs = 0.0;
        for (std::size_t k = 0; k < pd.U.size(); ++k) {
            double mu = 0.0, mt = 0.0, run = 0.0;
            for (double u : pd.U[k]) mu = std::max(mu, std::abs(u));
            for (double t : pd.T[k]) {
                run += t;
                mt = std::max(mt, std::abs(run));
            }
            rhs += mu + mt;
        }
        auto& v = out[i];
        v.path_id = i;
        v.margin_pointwise = rhs - lhs;
        v.slack = kExactSlack + 6.0 * pd.mc_error;
        v.pointwise_ok = v.margin_pointwise >= -v.slack;
    }
    return out;
}

void verify_telescoping(const DyadicDecomposition& dec, std::vector<PathVerdict>& verdicts) {
    if (verdicts.size() != dec.paths.size()) verdicts.resize(dec.paths.size());
    for (std::size_t i = 0; i < dec.paths.size(); ++i) {
        const auto& pd = dec.paths[i];
        CompensatedSum total;
        total += pd.U.back().front();
        for (const auto& level : pd.T)
            for (double t : level) total += t;
        auto& v = verdicts[i];
        v.path_id = i;
        v.margin_telescoping = std::abs(pd.S.back() - total.value());
        const double scale = std::max(1.0, std::abs(pd.S.back()));
        v.telescoping_ok = v.margin_telescoping <= kExactSlack * scale + 6.0 * pd.mc_error;
    }
}

double stationary_lp_norm(const Model& model, double p) {
    if (!(p >= 1.0)) throw SpecError("stationary_lp_norm: p must be >= 1");
    const double shift = model.centered ? model.mean : 0.0;
    const auto& h = model.observable;
    if (has_affine_structure(model.family) ||
        std::holds_alternative<TorusEndomorphism>(model.family)) {
        const int m = model.dim();
        if (m == 1) {
            std::vector<double> edges{0.0, 1.0};
            if (h.is_piecewise()) edges = h.piecewise().breakpoints;
            const auto r = integrate_pieces(
                [&](double x) { return std::pow(std::abs(h.eval1(x) - shift), p); }, edges, 1e-12);
            if (r.converged) return std::pow(r.value, 1.0 / p);
        } else if (m <= 3) {
            const auto r = integrate_cube(
                [&](std::span<const double> u) {
                    Point x(m);
                    for (int i = 0; i < m; ++i) x(i) = u[static_cast<std::size_t>(i)];
                    return std::pow(std::abs(h(x) - shift), p);
                },
                m, 1e-11);
            if (r.converged) return std::pow(r.value, 1.0 / p);
        }
    }
    constexpr std::size_t kBudget = 1u << 18;
    std::vector<double> a(kBudget);
    const std::uint64_t master = derive_seed(0, "stationary-lp");
    for (std::size_t i = 0; i < kBudget; ++i) {
        RngStream rng(master, i);
        a[i] = std::abs(sample_path(model, 1, rng).x[0]);
    }
    return lp_norm(a, p).value;
}

DeltaStarTable analytic_delta_star(const Model& model, int n_max, double p) {
    if (n_max < 0) throw SpecError("delta* table: n_max must be >= 0");
    DeltaStarTable t;
    t.p = p;
    const double x1 = stationary_lp_norm(model, p);
    t.values.push_back(x1);
    t.provenance.emplace_back("norm-x1");
    for (int n = 1; n <= n_max; ++n) {
        const auto b = analytic_bound(model, n, p, CoefficientKind::Star);
        if (b && b->first < 2.0 * x1) {
            t.values.push_back(b->first);
            t.provenance.push_back(b->second);
        } else {
            t.values.push_back(2.0 * x1);
            t.provenance.emplace_back("twice-norm-x1");
        }
    }
    return t;
}

DeltaStarTable estimate_delta_star(const Model& model, int n_max, double p, std::size_t budget,
                                   std::uint64_t seed, int workers) {
    auto t = analytic_delta_star(model, n_max, p);
    if (n_max == 0) return t;
    const auto table = sample_differences(model, CoefficientKind::Star, n_max, budget, seed, workers);
    std::vector<double> mc(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int n = n_max; n >= 1; --n) {
        const auto e = estimate_from_table(model, table, n, p, CoefficientKind::Star);
        const double up = 2.0 * (e.estimate + e.ci);
        mc[static_cast<std::size_t>(n)] =
            n == n_max ? up : std::max(up, mc[static_cast<std::size_t>(n) + 1]);
    }
    for (int n = 1; n <= n_max; ++n) {
        const auto k = static_cast<std::size_t>(n);
        if (mc[k] < t.values[k]) {
            t.values[k] = mc[k];
            t.provenance[k] = "mc-2x";
        }
    }
    return t;
}

MomentRhs moment_rhs(const DeltaStarTable& delta2, const DeltaStarTable& deltap, int d,
                     const RosenthalConstants& c) {
    const std::size_t n = std::size_t{1} << d;
    if (delta2.values.size() < n + 1 || deltap.values.size() < n + 1)
        throw SpecError("moment_rhs: delta* tables must cover 0..2^d");
    const double p = c.p;
    MomentRhs r;
    CompensatedSum s2, sp;
    for (std::size_t j = 0; j <= n; ++j) {
        s2 += delta2.values[j] / std::sqrt(static_cast<double>(j + 1));
        sp += deltap.values[j] / std::pow(static_cast<double>(j + 1), 1.0 / p);
    }
    r.rhs_26 = c.cp_prime * std::pow(2.0, d / 2.0) * s2.value() +
               c.cp_second * std::pow(2.0, d / p) * sp.value();

    CompensatedSum a, b;
    for (int k = 0; k <= d; ++k) {
        const std::size_t top = k == 0 ? 0 : (std::size_t{1} << (k - 1));
        CompensatedSum inner2, innerp;
        for (std::size_t j = 0; j <= top; ++j) inner2 += delta2.values[j];
        for (std::size_t j = 1; j <= (std::size_t{1} << k); ++j) innerp += deltap.values[j];
        a += std::pow(2.0, (d - k) / 2.0) * inner2.value();
        b += std::pow(2.0, (d - k) / p) * innerp.value();
    }
    r.rhs_27 = 2.0 * c.cp * a.value() + std::pow(2.0, d / p) * deltap.values[0] +
               (2.0 * c.cp + 1.0) * b.value();
    return r;
}

double moment_rhs_norms(const DyadicDecomposition& dec, const RosenthalConstants& c) {
    if (dec.paths.empty()) throw SpecError("moment_rhs_norms: empty ensemble");
    const double p = c.p;
    const auto& first = dec.paths.front();
    std::vector<double> buf(dec.paths.size());
    auto norm = [&](const auto& pick, double q) {
        for (std::size_t i = 0; i < dec.paths.size(); ++i) buf[i] = std::abs(pick(dec.paths[i]));
        return lp_norm(buf, q, std::min<std::size_t>(kDefaultBatches, buf.size())).value;
    };
    CompensatedSum total;
    for (std::size_t k = 0; k < first.U.size(); ++k) {
        CompensatedSum up, t2, tp;
        for (std::size_t l = 0; l < first.U[k].size(); ++l) {
            up += std::pow(norm([&](const PathDecomposition& pd) { return pd.U[k][l]; }, p), p);
            t2 += std::pow(norm([&](const PathDecomposition& pd) { return pd.T[k][l]; }, 2.0), 2.0);
            tp += std::pow(norm([&](const PathDecomposition& pd) { return pd.T[k][l]; }, p), p);
        }
        total += std::pow(up.value(), 1.0 / p) +
                 c.cp * (std::sqrt(t2.value()) + std::pow(tp.value(), 1.0 / p));
    }
    return total.value();
}

MomentReport verify_moment_bound(const Model& model, const DyadicDecomposition& dec, double p,
                                 bool strict, std::optional<double> cp_override) {
    if (dec.paths.size() < 2) throw SpecError("moment bound needs at least 2 paths");
    MomentReport r;
    r.d = dec.d;
    r.p = p;
    r.constants = rosenthal_constants(p, strict, cp_override);
    r.mode = strict ? "strict" : "default";
    std::vector<double> mx(dec.paths.size());
    for (std::size_t i = 0; i < dec.paths.size(); ++i) {
        double m = 0.0;
        for (double s : dec.paths[i].S) m = std::max(m, std::abs(s));
        mx[i] = m;
    }
    const auto lhs = lp_norm(mx, p, std::min<std::size_t>(kDefaultBatches, mx.size()));
    r.lhs = lhs.value;
    r.lhs_se = lhs.se;
    const int n = 1 << dec.d;
    const auto d2 = analytic_delta_star(model, n, 2.0);
    const auto dp = p == 2.0 ? d2 : analytic_delta_star(model, n, p);
    r.rhs = moment_rhs(d2, dp, dec.d, r.constants);
    r.rhs.rhs_25 = moment_rhs_norms(dec, r.constants);
    r.margin = r.rhs.rhs_26 - r.lhs;
    r.margin_delta0 = r.rhs.rhs_27 - r.lhs;
    // A degenerate zero sum is the one case where equality is accepted.
    r.holds = r.margin > 4.0 * r.lhs_se || (r.lhs == 0.0 && r.margin >= 0.0);
    return r;
}

}  // namespace sipkit
