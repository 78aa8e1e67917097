#include "sipkit/observable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sipkit {

double ConcaveModulus::operator()(double delta) const {
    if (delta <= 0.0) return 0.0;
    return scale * std::pow(delta, exponent);
}

// --- polynomials -----------------------------------------------------------

double poly_eval(std::span<const double> c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

std::vector<double> poly_antiderivative(std::span<const double> c) {
    std::vector<double> out(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) out[i + 1] = c[i] / static_cast<double>(i + 1);
    return out;
}

std::vector<double> poly_derivative(std::span<const double> c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> out(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) out[i - 1] = c[i] * static_cast<double>(i);
    return out;
}

std::vector<double> poly_real_roots(std::span<const double> c, double lo, double hi) {
    std::size_t deg = c.size();
    while (deg > 0 && c[deg - 1] == 0.0) --deg;
    std::vector<double> roots;
    if (deg <= 1) return roots;  // constant: no isolated roots
    const std::size_t n = deg - 1;
    if (n == 1) {
        const double r = -c[0] / c[1];
        if (r > lo && r < hi) roots.push_back(r);
        return roots;
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) =
            -c[i] / c[n];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double re = ev(i).real();
        const double scale = std::max(1.0, std::abs(re));
        if (std::abs(ev(i).imag()) > 1e-7 * scale) continue;
        // Newton polish against the original coefficients.
        double x = re;
        const auto d = poly_derivative(c.first(deg));
        for (int it = 0; it < 8; ++it) {
            const double fx = poly_eval(c.first(deg), x);
            const double dfx = poly_eval(d, x);
            if (dfx == 0.0) break;
            const double step = fx / dfx;
            x -= step;
            if (std::abs(step) < 1e-16 * scale) break;
        }
        if (x > lo && x < hi) roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

double poly_sup_abs(std::span<const double> c, double lo, double hi) {
    double best = std::max(std::abs(poly_eval(c, lo)), std::abs(poly_eval(c, hi)));
    for (double r : poly_real_roots(poly_derivative(c), lo, hi))
        best = std::max(best, std::abs(poly_eval(c, r)));
    return best;
}

namespace {

std::size_t piece_index(const PiecewisePolynomial& h, double x) {
    const auto& b = h.breakpoints;
    const auto it = std::upper_bound(b.begin() + 1, b.end() - 1, x);
    return static_cast<std::size_t>(it - (b.begin() + 1));
}

double piece_integral(std::span<const double> c, double a, double b) {
    const auto prim = poly_antiderivative(c);
    return poly_eval(prim, b) - poly_eval(prim, a);
}

/// Splits [a, b] into maximal runs where the piece index is constant,
/// extending end pieces beyond [0, 1].
template <typename PieceFn>
double over_pieces(const PiecewisePolynomial& h, double a, double b, PieceFn&& fn) {
    if (a == b) return 0.0;
    const double sign = a < b ? 1.0 : -1.0;
    double lo = std::min(a, b);
    const double hi = std::max(a, b);
    double total = 0.0;
    while (lo < hi) {
        const std::size_t idx = piece_index(h, lo);
        double end = hi;
        if (idx + 1 < h.pieces.size()) end = std::min(hi, h.breakpoints[idx + 1]);
        if (end <= lo) {
            // lo sits exactly on a breakpoint that belongs to the next piece
            end = hi;
            if (idx + 2 < h.breakpoints.size()) end = std::min(hi, h.breakpoints[idx + 2]);
        }
        total += fn(h.pieces[idx], lo, end);
        lo = end;
    }
    return sign * total;
}

enum class ClipRegion { Below, Inside, Above };

/// Applies `region_integral(region, coefs, lo, hi)` on each sub-interval
/// between crossings of p(x) - shift = +-level.
template <typename RegionFn>
double clipped_piece(std::span<const double> c, double lo, double hi, double shift,
                     double level, RegionFn&& region_integral) {
    std::vector<double> shifted(c.begin(), c.end());
    if (shifted.empty()) shifted.push_back(0.0);
    shifted[0] -= shift;
    std::vector<double> cuts{lo};
    for (double sgn : {1.0, -1.0}) {
        std::vector<double> q = shifted;
        q[0] -= sgn * level;
        for (double r : poly_real_roots(q, lo, hi)) cuts.push_back(r);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b <= a) continue;
        const double y = poly_eval(shifted, 0.5 * (a + b));
        const ClipRegion region =
            y > level ? ClipRegion::Above : (y < -level ? ClipRegion::Below : ClipRegion::Inside);
        total += region_integral(region, shifted, a, b);
    }
    return total;
}

}  // namespace

double integrate_piecewise(const PiecewisePolynomial& h, double a, double b) {
    return over_pieces(h, a, b, [](const std::vector<double>& c, double lo, double hi) {
        return piece_integral(c, lo, hi);
    });
}

double integrate_piecewise_clipped(const PiecewisePolynomial& h, double a, double b,
                                   double shift, double level) {
    return over_pieces(h, a, b, [&](const std::vector<double>& c, double lo, double hi) {
        return clipped_piece(c, lo, hi, shift, level,
                             [level](ClipRegion r, const std::vector<double>& q, double x0,
                                     double x1) {
                                 switch (r) {
                                     case ClipRegion::Above:
                                         return level * (x1 - x0);
                                     case ClipRegion::Below:
                                         return -level * (x1 - x0);
                                     case ClipRegion::Inside:
                                         return piece_integral(q, x0, x1);
                                 }
                                 return 0.0;
                             });
    });
}

double integrate_piecewise_clip_residual_abs(const PiecewisePolynomial& h, double a, double b,
                                             double shift, double level) {
    return over_pieces(h, a, b, [&](const std::vector<double>& c, double lo, double hi) {
        return clipped_piece(c, lo, hi, shift, level,
                             [level](ClipRegion r, const std::vector<double>& q, double x0,
                                     double x1) {
                                 switch (r) {
                                     case ClipRegion::Above:
                                         return piece_integral(q, x0, x1) - level * (x1 - x0);
                                     case ClipRegion::Below:
                                         return -piece_integral(q, x0, x1) - level * (x1 - x0);
                                     case ClipRegion::Inside:
                                         return 0.0;
                                 }
                                 return 0.0;
                             });
    });
}

// --- Observable --------------------------------------------------------------

Observable::Observable() : kind_(TrigPolynomial{1, {}}) {}
Observable::Observable(TrigPolynomial t) : kind_(std::move(t)) { validate(); }
Observable::Observable(PiecewisePolynomial p) : kind_(std::move(p)) { validate(); }
Observable::Observable(LipschitzCallable c) : kind_(std::move(c)) { validate(); }

Observable Observable::cosine(int k, double amplitude) {
    return Observable(TrigPolynomial{1, {TrigTerm{{k}, amplitude, 0.0}}});
}

Observable Observable::constant(double c, int dim) {
    return Observable(TrigPolynomial{dim, {TrigTerm{std::vector<int>(static_cast<std::size_t>(dim), 0), c, 0.0}}});
}

Observable Observable::piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw SpecError("piecewise_linear: need >= 2 matching knots");
    PiecewisePolynomial h;
    h.breakpoints = xs;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        h.pieces.push_back({ys[i] - slope * xs[i], slope});
    }
    return Observable(std::move(h));
}

void Observable::validate() const {
    if (const auto* t = std::get_if<TrigPolynomial>(&kind_)) {
        if (t->dim < 1 || t->dim > kMaxDim) throw SpecError("trig observable: bad dimension");
        for (const auto& term : t->terms) {
            if (static_cast<int>(term.frequency.size()) != t->dim)
                throw SpecError("trig observable: frequency length != dimension");
            if (!std::isfinite(term.cos_coef) || !std::isfinite(term.sin_coef))
                throw SpecError("trig observable: non-finite coefficient");
        }
        return;
    }
    if (const auto* p = std::get_if<PiecewisePolynomial>(&kind_)) {
        const auto& b = p->breakpoints;
        if (b.size() < 2) throw SpecError("piecewise observable: need >= 2 breakpoints");
        if (p->pieces.size() + 1 != b.size())
            throw SpecError("piecewise observable: pieces must number breakpoints - 1");
        if (b.front() != 0.0 || b.back() != 1.0)
            throw SpecError("piecewise observable: breakpoints must span [0,1]");
        for (std::size_t i = 1; i < b.size(); ++i)
            if (!(b[i] > b[i - 1]))
                throw SpecError("piecewise observable: breakpoints must strictly increase");
        for (const auto& piece : p->pieces)
            if (piece.empty()) throw SpecError("piecewise observable: empty piece");
        return;
    }
    const auto& c = std::get<LipschitzCallable>(kind_);
    if (!c.fn) throw SpecError("callable observable: no evaluator");
    if (c.dim < 1 || c.dim > kMaxDim) throw SpecError("callable observable: bad dimension");
}

int Observable::dim() const {
    if (const auto* t = std::get_if<TrigPolynomial>(&kind_)) return t->dim;
    if (std::holds_alternative<PiecewisePolynomial>(kind_)) return 1;
    return std::get<LipschitzCallable>(kind_).dim;
}

double Observable::operator()(const Point& x) const {
    if (const auto* t = std::get_if<TrigPolynomial>(&kind_)) {
        double acc = 0.0;
        for (const auto& term : t->terms) {
            double phase = 0.0;
            for (int i = 0; i < t->dim; ++i) phase += term.frequency[static_cast<std::size_t>(i)] * x(i);
            phase *= 2.0 * std::numbers::pi;
            acc += term.cos_coef * std::cos(phase);
            if (term.sin_coef != 0.0) acc += term.sin_coef * std::sin(phase);
        }
        return acc;
    }
    if (const auto* p = std::get_if<PiecewisePolynomial>(&kind_)) {
        return poly_eval(p->pieces[piece_index(*p, x(0))], x(0));
    }
    const auto& c = std::get<LipschitzCallable>(kind_);
    return c.fn(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double Observable::eval1(double x) const {
    if (const auto* p = std::get_if<PiecewisePolynomial>(&kind_))
        return poly_eval(p->pieces[piece_index(*p, x)], x);
    return (*this)(scalar_point(x));
}

std::optional<double> Observable::sup_abs() const {
    if (const auto* t = std::get_if<TrigPolynomial>(&kind_)) {
        double s = 0.0;
        for (const auto& term : t->terms) s += std::hypot(term.cos_coef, term.sin_coef);
        return s;
    }
    if (const auto* p = std::get_if<PiecewisePolynomial>(&kind_)) {
        double s = 0.0;
        for (std::size_t i = 0; i < p->pieces.size(); ++i)
            s = std::max(s, poly_sup_abs(p->pieces[i], p->breakpoints[i], p->breakpoints[i + 1]));
        return s;
    }
    return std::get<LipschitzCallable>(kind_).sup_abs;
}

std::optional<double> Observable::lipschitz() const {
    if (const auto* t = std::get_if<TrigPolynomial>(&kind_)) {
        double s = 0.0;
        for (const auto& term : t->terms) {
            double knorm = 0.0;
            for (int k : term.frequency) knorm += static_cast<double>(k) * k;
            s += 2.0 * std::numbers::pi * std::sqrt(knorm) *
                 std::hypot(term.cos_coef, term.sin_coef);
        }
        return s;
    }
    if (const auto* p = std::get_if<PiecewisePolynomial>(&kind_)) {
        // Only Lipschitz when continuous across breakpoints.
        for (std::size_t i = 1; i + 1 < p->breakpoints.size(); ++i) {
            const double x = p->breakpoints[i];
            if (std::abs(poly_eval(p->pieces[i - 1], x) - poly_eval(p->pieces[i], x)) > 1e-12)
                return std::nullopt;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < p->pieces.size(); ++i)
            s = std::max(s, poly_sup_abs(poly_derivative(p->pieces[i]), p->breakpoints[i],
                                         p->breakpoints[i + 1]));
        return s;
    }
    return std::get<LipschitzCallable>(kind_).lipschitz;
}

}  // namespace sipkit
