#include "sipkit/kmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sipkit/condexp.hpp"
#include "sipkit/coupling.hpp"
#include "sipkit/parallel.hpp"
#include "sipkit/rosenthal.hpp"

namespace sipkit {

namespace {

constexpr int kMaxWindowPower = 10;
constexpr std::size_t kStationaryBudget = 1u << 16;

double pow3(double e) { return std::pow(3.0, e); }

int ipow3(int k) {
    int r = 1;
    for (int i = 0; i < k; ++i) r *= 3;
    return r;
}

int linear_offset(const Model& model) {
    if (const auto* lp = std::get_if<LinearProcess>(&model.family)) return linear_depth(*lp);
    return 0;
}

/// Stationary samples of X_1 from a dedicated stream.
std::vector<double> stationary_sample(const Model& model, std::uint64_t seed, std::size_t count) {
    std::vector<double> out(count);
    const std::uint64_t master = derive_seed(seed, "kmt-stationary");
    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng(master, i);
        out[i] = sample_path(model, 1, rng).x[0];
    }
    return out;
}

double clip_mean_of(const Model& model, double level, std::uint64_t seed) {
    if (has_affine_structure(model.family))
        return affine_average_clipped(model, AffineState::identity(model.dim()), level);
    const auto xs = stationary_sample(model, seed, kStationaryBudget);
    CompensatedSum s;
    for (double x : xs) s += clip(x, level).phi;
    return s.value() / static_cast<double>(xs.size());
}

double residual_abs_mean(const Model& model, double level, std::uint64_t seed) {
    if (has_affine_structure(model.family))
        return affine_average_residual_abs(model, AffineState::identity(model.dim()), level);
    const auto xs = stationary_sample(model, seed, kStationaryBudget);
    CompensatedSum s;
    for (double x : xs) s += std::abs(clip(x, level).g);
    return s.value() / static_cast<double>(xs.size());
}

ConditionReport finish_trend(ConditionReport rep, const std::vector<bool>& at_floor = {}) {
    std::vector<double> ks, logs;
    bool all_zero = true, all_floor = !at_floor.empty();
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        if (r.summand > 0.0) {
            all_zero = false;
            ks.push_back(r.k);
            logs.push_back(std::log(r.summand));
        }
        if (!at_floor.empty() && !at_floor[i]) all_floor = false;
    }
    rep.label = kFiniteKLabel;
    if (all_zero) {
        rep.convergent = true;
        rep.verdict = "zero";
        rep.slope = 0.0;
        return rep;
    }
    if (ks.size() >= 2) rep.slope = least_squares(ks, logs).slope;
    rep.convergent = ks.size() >= 2 ? rep.slope < 0.0 : false;
    if (all_floor) rep.convergent = true;
    rep.verdict = rep.convergent ? (all_floor ? "convergent (noise floor)" : "convergent")
                                 : "divergent";
    return rep;
}

}  // namespace

KmtSchedule make_schedule(double p, double beta, int k_max) {
    if (!(p > 2.0)) throw SpecError("KMT schedule: p must be > 2");
    if (!(beta > 0.0 && beta <= 2.0)) throw SpecError("KMT schedule: beta must lie in (0, 2]");
    if (k_max < 1 || k_max > kMaxWindowPower)
        throw SpecError("KMT schedule: K_max must lie in [1, 10]");
    KmtSchedule s;
    s.p = p;
    s.beta = beta;
    s.k_max = k_max;
    for (int k = 0; k <= k_max; ++k) {
        s.M.push_back(pow3(k / p));
        s.m.push_back(std::max(1, static_cast<int>(std::lround(pow3(k * beta / p)))));
        if (s.k0 == 0 && k >= 1 && s.m.back() <= pow3(k - 2) / 2.0) s.k0 = k;
    }
    return s;
}

std::vector<double> schedule_growth_ratio(const KmtSchedule& s) {
    std::vector<double> out;
    for (int k = 1; k <= s.k_max; ++k) out.push_back(s.block(k) * k / pow3(2.0 * k / s.p));
    return out;
}

double default_sakhanenko_r(double p, double beta) {
    const double floor3 = beta < 2.0 ? (2.0 * p - 2.0 * beta) / (2.0 - beta) + 2.0 : 2.0 * p + 2.0;
    return std::max(p + 1.0, floor3);
}

Clipped clip(double x, double level) {
    if (!(level > 0.0)) throw SpecError("clip level must be > 0");
    const double phi = std::max(-level, std::min(level, x));
    return {phi, x - phi};
}

double m_dependent_value(const Model& model, double level, double clip_mean,
                         std::span<const double> window, std::size_t mc_budget,
                         std::uint64_t seed, bool* exact) {
    if (has_affine_structure(model.family)) {
        if (exact) *exact = true;
        return affine_average_clipped(model, affine_propagation(model.family, window), level) -
               clip_mean;
    }
    if (exact) *exact = false;
    if (mc_budget < 1) throw SpecError("m-dependent value: budget must be >= 1");
    const std::uint64_t master = derive_seed(seed, "m-dependent");
    CompensatedSum s;
    const auto* lp = std::get_if<LinearProcess>(&model.family);
    for (std::size_t b = 0; b < mc_budget; ++b) {
        RngStream rng(master, b);
        double x;
        if (lp) {
            const int depth = linear_depth(*lp);
            const int w = static_cast<int>(window.size());
            std::vector<double> noise(static_cast<std::size_t>(std::max(depth + 1, w)));
            const std::size_t fresh = noise.size() - window.size();
            for (std::size_t t = 0; t < fresh; ++t) noise[t] = lp->noise.draw_value(rng);
            std::copy(window.begin(), window.end(), noise.begin() + static_cast<std::ptrdiff_t>(fresh));
            // linear_values reads the last D + 1 entries for X at the final time.
            const std::span<const double> tail(noise.data() + noise.size() - (depth + 1),
                                               static_cast<std::size_t>(depth) + 1);
            x = linear_values(model, tail)[0];
        } else {
            const Point w0 = draw_stationary(model.family, rng);
            x = simulate_chain(model, w0, window).x.back();
        }
        s += clip(x, level).phi;
    }
    return s.value() / static_cast<double>(mc_budget) - clip_mean;
}

KmtBlocks build_blocks(const Model& model, const KmtSchedule& schedule, int k,
                       std::size_t ensemble, std::uint64_t seed, int workers, int span,
                       std::size_t mc_budget) {
    if (k > kMaxWindowPower)
        throw SpecError("KMT blocks: 3^k exceeds the resource guard 3^10");
    if (k < 1 || k > schedule.k_max) throw SpecError("KMT blocks: k outside the schedule");
    if (schedule.k0 == 0 || k < schedule.k0)
        throw SpecError("KMT blocks: k must be >= k0 = " + std::to_string(schedule.k0));
    if (ensemble == 0) throw SpecError("KMT blocks: ensemble must be >= 1");
    const int window_len = ipow3(k) - ipow3(k - 1);
    if (span <= 0) span = window_len;
    if (span > window_len) throw SpecError("KMT blocks: span exceeds the window");

    KmtBlocks b;
    b.k = k;
    b.m = schedule.block(k);
    b.M = schedule.level(k);
    b.window_start = ipow3(k - 1) + 1;
    b.span = span;
    b.clip_mean = clip_mean_of(model, b.M, seed);
    b.ell = k >= 2 ? pow3(k * (schedule.p - 2.0) / (2.0 * schedule.p)) / std::sqrt(std::log(k))
                   : std::numeric_limits<double>::infinity();
    b.x.assign(ensemble, {});
    b.x_tilde.assign(ensemble, {});

    const int m = b.m;
    const int length = m + span;  // eps_{start-m} .. eps_{start+span-1}
    const int offset = linear_offset(model);
    const std::uint64_t master = derive_seed(seed, "kmt-path");
    const std::uint64_t cond_master = derive_seed(seed, "kmt-cond");
    std::vector<char> exact(ensemble, 1);
    parallel_for(ensemble, workers, [&](std::size_t i) {
        RngStream rng(master, i);
        const auto path = sample_path(model, length, rng);
        auto& x = b.x[i];
        auto& xt = b.x_tilde[i];
        x.resize(static_cast<std::size_t>(span));
        xt.resize(static_cast<std::size_t>(span));
        for (int t = 0; t < span; ++t) {
            const auto idx = static_cast<std::size_t>(m + t);
            x[static_cast<std::size_t>(t)] = clip(path.x[idx], b.M).phi - b.clip_mean;
            const std::span<const double> window(path.noise.data() + offset + t,
                                                 static_cast<std::size_t>(m) + 1);
            bool ex = true;
            xt[static_cast<std::size_t>(t)] = m_dependent_value(
                model, b.M, b.clip_mean, window, mc_budget,
                RngStream(cond_master, i * static_cast<std::size_t>(span) + static_cast<std::size_t>(t))
                    .next_u64(),
                &ex);
            if (!ex) exact[i] = 0;
        }
    });
    b.exact = std::all_of(exact.begin(), exact.end(), [](char e) { return e != 0; });
    return b;
}

MeanEstimate nu_k(const KmtBlocks& blocks) {
    const int m = blocks.m;
    if (blocks.span < 2 * m) throw SpecError("nu_k: blocks must cover 2 m_k entries");
    std::vector<double> z(blocks.x_tilde.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const auto& xt = blocks.x_tilde[i];
        CompensatedSum w1, w2;
        for (int t = 0; t < m; ++t) w1 += xt[static_cast<std::size_t>(t)];
        for (int t = m; t < 2 * m; ++t) w2 += xt[static_cast<std::size_t>(t)];
        const double a = w1.value();
        z[i] = (a * a + 2.0 * a * w2.value()) / m;
    }
    return batch_means(z, std::min<std::size_t>(kDefaultBatches, z.size()));
}

BlockCovariances block_covariances(const KmtBlocks& blocks, int lags) {
    if (lags < 0 || blocks.span < blocks.m + lags + 1)
        throw SpecError("block covariances: span too short for the requested lags");
    BlockCovariances c;
    std::vector<double> hat(blocks.x.size()), tilde(blocks.x.size());
    const auto nb = std::min<std::size_t>(kDefaultBatches, hat.size());
    const auto m = static_cast<std::size_t>(blocks.m);
    for (int l = 0; l <= lags; ++l) {
        const auto L = static_cast<std::size_t>(l);
        for (std::size_t i = 0; i < hat.size(); ++i) {
            hat[i] = blocks.x[i][0] * blocks.x[i][L];
            tilde[i] = blocks.x_tilde[i][m] * blocks.x_tilde[i][m + L];
        }
        c.hat.push_back(batch_means(hat, nb));
        c.tilde.push_back(batch_means(tilde, nb));
    }
    return c;
}

Sigma2Estimate sigma2(const Model& model, int lag_cutoff, std::size_t ensemble,
                      std::uint64_t seed, int workers, int batch_length) {
    if (lag_cutoff < 0) throw SpecError("sigma2: lag cutoff must be >= 0");
    if (ensemble < 100) throw SpecError("sigma2: ensemble must be >= 100");
    if (batch_length < 1) throw SpecError("sigma2: batch length must be >= 1");
    const double shift = model.centered ? 0.0 : model.mean;
    Sigma2Estimate out;
    out.lag_cutoff = lag_cutoff;
    out.batch_length = batch_length;

    std::vector<double> series(ensemble), batch(ensemble);
    const std::uint64_t ms = derive_seed(seed, "sigma2-series");
    const std::uint64_t mb = derive_seed(seed, "sigma2-batch");
    parallel_for(ensemble, workers, [&](std::size_t i) {
        RngStream rs(ms, i);
        const auto a = sample_path(model, lag_cutoff + 1, rs);
        const double x1 = a.x[0] - shift;
        CompensatedSum cross;
        for (int t = 1; t <= lag_cutoff; ++t) cross += a.x[static_cast<std::size_t>(t)] - shift;
        series[i] = x1 * x1 + 2.0 * x1 * cross.value();

        RngStream rb(mb, i);
        const auto b = sample_path(model, batch_length, rb);
        CompensatedSum s;
        for (double x : b.x) s += x - shift;
        batch[i] = s.value() * s.value() / batch_length;
    });
    const auto nb = std::min<std::size_t>(kDefaultBatches, ensemble);
    out.series = batch_means(series, nb);
    out.batch = batch_means(batch, nb);

    // |Cov(X_1, X_{k+1})| <= ||X_1||_2 ||X_k - X_k^*||_2.
    const double x2 = stationary_lp_norm(model, 2.0);
    CompensatedSum tail;
    double last = std::numeric_limits<double>::infinity();
    bool bounded = true;
    for (int k = lag_cutoff + 1; k <= lag_cutoff + 4096; ++k) {
        const auto b = analytic_bound(model, k, 2.0, CoefficientKind::Star);
        if (!b) {
            bounded = false;
            break;
        }
        last = std::min(b->first, 2.0 * x2);
        tail += last;
        if (last == 0.0) break;
    }
    out.tail_bound = bounded ? 2.0 * x2 * tail.value() : std::numeric_limits<double>::infinity();
    out.tail_certified = bounded && last < 1e-17;

    const double combined = std::hypot(out.series.se, out.batch.se);
    out.agree = std::abs(out.series.mean - out.batch.mean) <= 6.0 * combined;
    if (!out.agree) out.warning = "series and batch-means estimates disagree (non-convergence)";
    return out;
}

BlwReport check_blw_conditions(const Model& model, const KmtSchedule& schedule,
                               const BlwOptions& options, std::uint64_t seed, int workers) {
    if (schedule.k_max > kMaxWindowPower) throw SpecError("BLW check: K_max must be <= 10");
    if (schedule.k0 == 0)
        throw SpecError("BLW check: no k <= K_max satisfies m_k <= 3^{k-2}/2");
    const double p = schedule.p;
    const double alpha = options.alpha > 0.0 ? options.alpha : p;
    const double r = options.r > 0.0 ? options.r : default_sakhanenko_r(p, schedule.beta);
    if (alpha < 1.0) throw SpecError("BLW check: alpha must be >= 1");
    if (!(r > 2.0)) throw SpecError("BLW check: r must be > 2");

    BlwReport rep;
    rep.schedule = schedule;
    if (options.sigma) {
        rep.sigma = *options.sigma;
    } else {
        const auto s2 = sigma2(model, options.sigma_lags, options.sigma_ensemble, seed, workers);
        rep.sigma = std::sqrt(std::max(0.0, s2.series.mean));
        rep.sigma_se = rep.sigma > 0.0 ? s2.series.se / (2.0 * rep.sigma) : std::sqrt(s2.series.se);
    }

    ConditionReport trunc{"truncation", {}, 0, false, false, "", ""};
    ConditionReport mdep{"m-dependence", {}, 0, false, false, "", ""};
    ConditionReport sakh{"sakhanenko", {}, 0, false, false, "", ""};
    ConditionReport var{"variance", {}, 0, false, false, "", ""};
    std::vector<bool> var_floor;
    const bool sigma_zero = rep.sigma <= 2.0 * rep.sigma_se;

    for (int k = schedule.k0; k <= schedule.k_max; ++k) {
        const int m = schedule.block(k);
        const double M = schedule.level(k);
        const double g1 = residual_abs_mean(model, M, seed);
        trunc.rows.push_back({k, pow3(k * (p - 1.0) / p) * g1, 0.0, 0.0});

        const int window_len = ipow3(k) - ipow3(k - 1);
        const int span = std::min(window_len, 3 * m);
        const auto blocks = build_blocks(model, schedule, k, options.ensemble, seed, workers, span,
                                         options.mc_budget);
        const auto nu = nu_k(blocks);
        rep.nu.push_back(nu);

        std::vector<double> mx(blocks.x_tilde.size());
        for (std::size_t i = 0; i < mx.size(); ++i) {
            double run = 0.0, best = 0.0;
            for (int t = 0; t < span; ++t) {
                run += blocks.x_tilde[i][static_cast<std::size_t>(t)];
                best = std::max(best, std::abs(run));
            }
            mx[i] = std::pow(best, r);
        }
        const auto sk = batch_means(mx, std::min<std::size_t>(kDefaultBatches, mx.size()));
        const double fs = pow3(k - k * r / p) / m;
        sakh.rows.push_back({k, fs * sk.mean, fs * sk.se, 0.0});

        const auto full = build_blocks(model, schedule, k, options.window_ensemble,
                                       derive_seed(seed, "kmt-window"), workers, 0,
                                       options.mc_budget);
        std::vector<double> dv(full.x.size());
        for (std::size_t i = 0; i < dv.size(); ++i) {
            double run = 0.0, best = 0.0;
            for (int t = 0; t < full.span; ++t) {
                run += full.x[i][static_cast<std::size_t>(t)] -
                       full.x_tilde[i][static_cast<std::size_t>(t)];
                best = std::max(best, std::abs(run));
            }
            dv[i] = std::pow(best, alpha);
        }
        const auto md = batch_means(dv, std::min<std::size_t>(kDefaultBatches, dv.size()));
        const double fm = pow3(-alpha * k / p);
        mdep.rows.push_back({k, fm * md.mean, fm * md.se, 0.0});

        const double root = std::sqrt(std::max(0.0, nu.mean));
        const double root_se = root > 0.0 ? nu.se / (2.0 * root) : std::sqrt(nu.se);
        const double gap = root - rep.sigma;
        const double scale = pow3(k) * std::log(static_cast<double>(k)) / pow3(2.0 * k / p);
        var.rows.push_back({k, scale * gap * gap, scale * 2.0 * std::abs(gap) * root_se, 0.0});
        var_floor.push_back(std::abs(gap) <= 2.0 * std::hypot(root_se, rep.sigma_se));
    }
    for (auto* c : {&trunc, &mdep, &sakh, &var}) {
        double cum = 0.0;
        for (auto& row : c->rows) row.cumulative = (cum += row.summand);
    }
    rep.conditions.push_back(finish_trend(trunc));
    rep.conditions.push_back(finish_trend(mdep));
    rep.conditions.push_back(finish_trend(sakh));
    if (sigma_zero) {
        var.skipped = true;
        var.convergent = true;
        var.verdict = "skipped: sigma~0";
        var.label = kFiniteKLabel;
        rep.conditions.push_back(var);
    } else {
        rep.conditions.push_back(finish_trend(var, var_floor));
    }
    return rep;
}

namespace {

struct DeltaSeries {
    std::function<double(double)> d2;  // delta'_2 at a block size
    std::function<double(double)> dp;
};

/// Rows of the five series for k0 <= k <= K_max, inner sums over
/// k <= l <= horizon with m_l = round(3^{l beta/p}).
std::vector<ConditionReport> series_rows(const DeltaSeries& d, const KmtSchedule& s, double r,
                                         int horizon) {
    const double p = s.p, beta = s.beta;
    auto mblk = [&](int l) { return std::max(1.0, std::round(pow3(l * beta / p))); };
    ConditionReport fa{"first-a", {}, 0, false, false, "", ""};
    ConditionReport fb{"first-b", {}, 0, false, false, "", ""};
    ConditionReport fourth{"fourth", {}, 0, false, false, "", ""};
    ConditionReport second{"second", {}, 0, false, false, "", ""};
    ConditionReport third{"third", {}, 0, false, false, "", ""};
    const int k_start = std::max(s.k0, 1);
    for (int k = k_start; k <= s.k_max; ++k) {
        CompensatedSum in2, inp;
        for (int l = k; l <= horizon; ++l) {
            in2 += d.d2(mblk(l)) * std::sqrt(mblk(l + 1));
            inp += d.dp(mblk(l)) * std::pow(mblk(l + 1), 1.0 - 1.0 / p);
        }
        fa.rows.push_back({k, pow3(k * (p - 2.0) / 2.0) * std::pow(in2.value(), p), 0.0, 0.0});
        fb.rows.push_back({k, std::pow(inp.value(), p), 0.0, 0.0});
        const double target = k >= 2 ? pow3(k * (2.0 - p) / (2.0 * p)) / std::sqrt(std::log(k))
                                     : pow3(k * (2.0 - p) / (2.0 * p));
        fourth.rows.push_back({k, in2.value() / target, 0.0, 0.0});
    }
    for (int k = 0; k <= s.k_max; ++k)
        second.rows.push_back({k, pow3(k * (p - r) / p) * std::pow(mblk(k), (r - 2.0) / 2.0), 0.0, 0.0});
    // Third series grouped over j in (3^{k-1}, 3^k].
    for (int k = 1; k <= s.k_max; ++k) {
        CompensatedSum g;
        for (int j = ipow3(k - 1) + (k == 1 ? 0 : 1); j <= ipow3(k); ++j)
            g += std::pow(d.dp(j), p / r) / std::pow(j, 1.0 / r);
        third.rows.push_back({k, g.value(), 0.0, 0.0});
    }
    std::vector<ConditionReport> out{fa, fb, fourth, second, third};
    for (auto& c : out) {
        double cum = 0.0;
        for (auto& row : c.rows) row.cumulative = (cum += row.summand);
    }
    return out;
}

void check_inputs(const KmtSchedule& s, double r) {
    if (!(r > s.p)) throw SpecError("delta' conditions: r must exceed p");
    if (s.k0 == 0) throw SpecError("delta' conditions: no k <= K_max satisfies the k0 rule");
}

}  // namespace

DeltaPrimeReport check_delta_prime_conditions(const PowerLawDecay& decay,
                                              const KmtSchedule& schedule, double r) {
    check_inputs(schedule, r);
    if (decay.c < 0.0) throw SpecError("delta' conditions: c must be >= 0");
    const double p = schedule.p, beta = schedule.beta, g = decay.gamma;
    DeltaPrimeReport rep;
    rep.p = p;
    rep.beta = beta;
    rep.r = r;
    rep.label = kRigorousLabel;
    DeltaSeries d{[&](double n) { return decay(n); }, [&](double n) { return decay(n); }};
    rep.conditions = series_rows(d, schedule, r, schedule.k_max + 200);
    const bool zero = decay.c == 0.0;
    const bool ok[5] = {
        zero || (g > 0.5 && p - 2.0 < beta * (2.0 * g - 1.0)),
        zero || g > 1.0 - 1.0 / p,
        zero || (g > 0.5 && beta * (2.0 * g - 1.0) > p - 2.0),
        beta * (r - 2.0) < 2.0 * (r - p),
        zero || (g * p + 1.0) / r > 1.0,
    };
    rep.all_convergent = true;
    for (std::size_t i = 0; i < 5; ++i) {
        auto& c = rep.conditions[i];
        c.convergent = ok[i];
        c.verdict = ok[i] ? "convergent" : "divergent";
        c.label = kRigorousLabel;
        rep.all_convergent = rep.all_convergent && ok[i];
    }
    return rep;
}

DeltaPrimeReport check_delta_prime_conditions(const std::function<double(int)>& delta_prime,
                                              const KmtSchedule& schedule, double r) {
    check_inputs(schedule, r);
    DeltaPrimeReport rep;
    rep.p = schedule.p;
    rep.beta = schedule.beta;
    rep.r = r;
    rep.label = kFiniteKLabel;
    auto f = [&](double n) { return delta_prime(static_cast<int>(std::lround(n))); };
    rep.conditions = series_rows({f, f}, schedule, r, schedule.k_max);
    rep.all_convergent = true;
    for (auto& c : rep.conditions) {
        c = finish_trend(c);
        rep.all_convergent = rep.all_convergent && c.convergent;
    }
    return rep;
}

namespace {

/// E(g_M(X_n) | W_0 = w) by depth-first enumeration of all noise words.
double enumerate_gm(const Model& model, const NoiseSpec& noise, const Point& w, int depth,
                    double M) {
    const auto& probs = noise.alphabet().probabilities;
    if (depth == 0) return clip(model.value(w), M).g;
    CompensatedSum s;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        const Point next = chain_step(model.family, w, static_cast<double>(a));
        s += probs[a] * enumerate_gm(model, noise, next, depth - 1, M);
    }
    return s.value();
}

}  // namespace

GmReport gM_projection_check(const Model& model, int n, double M, double p, std::size_t budget,
                             std::uint64_t seed, int workers) {
    if (n < 1) throw SpecError("g_M check: n must be >= 1");
    if (!(M > 0.0)) throw SpecError("g_M check: M must be > 0");
    if (!(p > 2.0)) throw SpecError("g_M check: p must be > 2");
    if (budget < 1000) throw SpecError("g_M check: budget must be >= 1000");
    if (std::holds_alternative<LinearProcess>(model.family))
        throw UnsupportedFamily("g_M check needs a Markov state");
    GmReport rep;
    rep.n = n;
    rep.M = M;
    rep.p = p;
    const auto dp = estimate_coefficient(model, n, p, CoefficientKind::Markov, budget, seed, workers);
    rep.delta_prime = dp.estimate;
    rep.delta_prime_ci = dp.ci;
    rep.moment_p = std::pow(stationary_lp_norm(model, p), p);

    const NoiseSpec noise = family_noise(model.family);
    const bool finite = has_affine_structure(model.family) ||
                        std::holds_alternative<TorusEndomorphism>(model.family);
    const double words = finite ? std::pow(static_cast<double>(noise.alphabet_size()), n) : 0.0;
    rep.inner_exact = finite && words <= 65536.0;

    std::vector<double> y(budget);
    const std::uint64_t master = derive_seed(seed, "gm-outer");
    parallel_for(budget, workers, [&](std::size_t i) {
        RngStream rng(master, i);
        const Point w0 = draw_stationary(model.family, rng);
        if (rep.inner_exact) {
            y[i] = enumerate_gm(model, noise, w0, n, M);
        } else {
            CompensatedSum s;
            constexpr int kInner = 256;
            for (int b = 0; b < kInner; ++b) {
                std::vector<double> e(static_cast<std::size_t>(n));
                for (double& v : e) v = draw_noise(model.family, rng);
                s += clip(simulate_chain(model, w0, e).x.back(), M).g;
            }
            y[i] = s.value() / kInner;
        }
    });
    double gbar;
    if (has_affine_structure(model.family)) {
        const auto id = AffineState::identity(model.dim());
        gbar = affine_average(model, id) - affine_average_clipped(model, id, M);
    } else {
        CompensatedSum s;
        for (double v : y) s += v;
        gbar = s.value() / static_cast<double>(budget);
    }
    std::vector<double> sq(budget);
    for (std::size_t i = 0; i < budget; ++i) sq[i] = (y[i] - gbar) * (y[i] - gbar);
    const auto lhs = batch_means(sq);
    rep.lhs = lhs.mean;
    rep.lhs_se = lhs.se;

    const double d = rep.delta_prime + rep.delta_prime_ci;
    if (d > 0.0) {
        rep.epsilon = M * std::pow(d, p / (p - 1.0));
        rep.rhs = 4.0 * rep.epsilon * std::pow(M, 1.0 - p) * rep.moment_p +
                  std::pow(2.0, p + 1.0) * std::pow(rep.epsilon, 2.0 - p) * std::pow(d, p);
    }
    rep.holds = rep.lhs - lhs.half_width() <= rep.rhs + 1e-15;
    return rep;
}

}  // namespace sipkit
