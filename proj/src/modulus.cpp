#include "sipkit/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <numbers>

#include "sipkit/family.hpp"
#include "sipkit/quadrature.hpp"

namespace sipkit {

namespace {

constexpr int kProfilePoints = 1 << 12;

/// Terms with frequency k and -k merged; zero frequency dropped.
struct Harmonic {
    double knorm = 0.0;
    double amplitude = 0.0;
};

std::vector<Harmonic> harmonics(const TrigPolynomial& t) {
    std::map<std::vector<int>, std::pair<double, double>> merged;
    for (const auto& term : t.terms) {
        std::vector<int> k = term.frequency;
        double sgn = 1.0;
        const auto first = std::find_if(k.begin(), k.end(), [](int v) { return v != 0; });
        if (first == k.end()) continue;
        if (*first < 0) {
            for (int& v : k) v = -v;
            sgn = -1.0;
        }
        auto& acc = merged[k];
        acc.first += term.cos_coef;
        acc.second += sgn * term.sin_coef;
    }
    std::vector<Harmonic> out;
    for (const auto& [k, c] : merged) {
        double n2 = 0.0;
        for (int v : k) n2 += static_cast<double>(v) * v;
        const double amp = std::hypot(c.first, c.second);
        if (amp > 0.0) out.push_back({std::sqrt(n2), amp});
    }
    return out;
}

double half_sine(double knorm, double delta) {
    return std::sin(std::numbers::pi * std::min(knorm * delta, 0.5));
}

}  // namespace

double sine_lp_constant(double p) {
    return std::pow(std::tgamma((p + 1.0) / 2.0) / (std::sqrt(std::numbers::pi) * std::tgamma(p / 2.0 + 1.0)),
                    1.0 / p);
}

ModulusEvaluator::ModulusEvaluator(Observable h, double p, bool periodic, int grid)
    : h_(std::move(h)), p_(p), periodic_(periodic), grid_(grid), cache_(std::make_shared<Cache>()) {
    if (!(p >= 1.0)) throw SpecError("modulus: p must be >= 1");
    if (grid < 16) throw SpecError("modulus: grid too small");
}

double omega(const ModulusEvaluator& ev, double delta) { return ev(delta); }

ModulusValue ModulusEvaluator::evaluate(double delta) const {
    if (!(delta >= 0.0 && delta <= 1.0)) throw SpecError("modulus: delta must lie in [0,1]");
    if (delta == 0.0) return {0.0, true, "zero"};
    {
        std::shared_lock lock(cache_->mutex);
        const auto it = cache_->values.find(delta);
        if (it != cache_->values.end()) return it->second;
    }
    ModulusValue v = compute(delta);
    std::unique_lock lock(cache_->mutex);
    cache_->values.emplace(delta, v);
    return v;
}

ModulusValue ModulusEvaluator::compute(double delta) const {
    if (h_.is_trig()) return trig(delta);
    if (h_.dim() == 1) return std::isinf(p_) ? grid_sup(delta) : lp_quadrature(delta);
    // Multivariate callables: only the declared modulus or Lipschitz constant.
    const auto& c = h_.callable();
    if (c.modulus) return {(*c.modulus)(delta), true, "declared-modulus"};
    if (c.lipschitz) return {*c.lipschitz * delta, true, "lipschitz"};
    throw SpecError("modulus: multivariate callable without Lipschitz constant or modulus");
}

ModulusValue ModulusEvaluator::trig(double delta) const {
    const auto hs = harmonics(h_.trig());
    if (hs.empty()) return {0.0, true, "closed-form"};
    const double cp = std::isinf(p_) ? 1.0 : sine_lp_constant(p_);
    if (hs.size() == 1) {
        return {2.0 * hs[0].amplitude * half_sine(hs[0].knorm, delta) * cp, true, "closed-form"};
    }
    if (p_ == 2.0) {
        // Distinct frequencies are orthogonal: ||h(.+x)-h||_2^2 = sum 2 r_j^2 sin^2(pi <k_j,x>).
        double s = 0.0;
        for (const auto& hm : hs) {
            const double sn = half_sine(hm.knorm, delta);
            s += 2.0 * hm.amplitude * hm.amplitude * sn * sn;
        }
        return {std::sqrt(s), true, "per-frequency-bound"};
    }
    double s = 0.0;
    for (const auto& hm : hs) s += 2.0 * hm.amplitude * half_sine(hm.knorm, delta);
    return {s, true, "per-frequency-bound"};
}

ModulusValue ModulusEvaluator::grid_sup(double delta) const {
    const int n = grid_;
    const double step = 1.0 / n;
    {
        std::unique_lock lock(cache_->mutex);
        if (cache_->grid_values.empty()) {
            cache_->grid_values.resize(static_cast<std::size_t>(n) + 1);
            for (int i = 0; i <= n; ++i)
                cache_->grid_values[static_cast<std::size_t>(i)] = h_.eval1(i * step);
        }
    }
    const auto& f = cache_->grid_values;
    const int w = std::max(1, static_cast<int>(std::floor(delta / step)));
    // Sliding-window max and min over index windows [i, i + w].
    const int total = periodic_ ? n + w : n;
    auto at = [&](int i) { return periodic_ ? f[static_cast<std::size_t>(i % n)] : f[static_cast<std::size_t>(i)]; };
    std::deque<int> hi, lo;
    double best = 0.0;
    for (int i = 0; i <= total; ++i) {
        const double v = at(i);
        while (!hi.empty() && at(hi.back()) <= v) hi.pop_back();
        while (!lo.empty() && at(lo.back()) >= v) lo.pop_back();
        hi.push_back(i);
        lo.push_back(i);
        while (hi.front() < i - w) hi.pop_front();
        while (lo.front() < i - w) lo.pop_front();
        best = std::max(best, at(hi.front()) - at(lo.front()));
    }
    if (const auto lip = lipschitz()) {
        // Window lengths are within one step of delta and each endpoint within step/2 of the grid.
        return {best + 2.0 * *lip * step, true, "grid-supremum"};
    }
    return {best, false, "grid-supremum (lower estimate)"};
}

std::optional<double> ModulusEvaluator::lipschitz() const {
    // On the circle a piecewise observable must also match across 1 = 0.
    if (periodic_ && h_.dim() == 1 && !h_.is_trig() &&
        std::abs(h_.eval1(0.0) - h_.eval1(1.0)) > 1e-12)
        return std::nullopt;
    return h_.lipschitz();
}

double ModulusEvaluator::shift_norm(double x) const {
    std::vector<double> edges{0.0, 1.0};
    if (h_.is_piecewise()) {
        for (double b : h_.piecewise().breakpoints) {
            edges.push_back(b);
            const double s = periodic_ ? b - x + (b - x < 0.0 ? 1.0 : 0.0) : b - x;
            if (s > 0.0 && s < 1.0) edges.push_back(s);
        }
    }
    double upper = 1.0;
    if (!periodic_) upper = 1.0 - x;
    std::vector<double> cut;
    for (double e : edges)
        if (e >= 0.0 && e <= upper) cut.push_back(e);
    cut.push_back(upper);
    std::sort(cut.begin(), cut.end());
    cut.erase(std::unique(cut.begin(), cut.end()), cut.end());
    if (cut.size() < 2) return 0.0;
    const double p = p_;
    const auto r = integrate_pieces(
        [&](double y) {
            double z = y + x;
            if (periodic_ && z >= 1.0) z -= 1.0;
            return std::pow(std::abs(h_.eval1(z) - h_.eval1(y)), p);
        },
        cut, 1e-12);
    return std::pow(r.value, 1.0 / p);
}

ModulusValue ModulusEvaluator::lp_quadrature(double delta) const {
    const int n = kProfilePoints;
    const double reach = periodic_ ? 0.5 : 1.0;  // periodic profile is symmetric about 1/2
    const double step = reach / n;
    {
        std::unique_lock lock(cache_->mutex);
        if (cache_->profile.empty()) {
            cache_->profile.resize(static_cast<std::size_t>(n) + 1);
            for (int i = 0; i <= n; ++i)
                cache_->profile[static_cast<std::size_t>(i)] = shift_norm(i * step);
        }
    }
    const auto& prof = cache_->profile;
    const double d = std::min(delta, reach);
    double best = shift_norm(d);
    for (int i = 0; i <= n && i * step <= d; ++i) best = std::max(best, prof[static_cast<std::size_t>(i)]);
    if (const auto lip = lipschitz()) {
        // x -> ||h(.+x)-h||_p is L-Lipschitz.
        return {best + *lip * step, true, "quadrature"};
    }
    return {best, false, "quadrature (lower estimate)"};
}

double cube_diameter(const LinMap& m) {
    const auto dim = m.cols();
    if (dim > 20) throw SpecError("cube_diameter: dimension above 20");
    double best = 0.0;
    Point w(dim);
    for (std::int64_t code = 0; code < (std::int64_t{1} << dim); ++code) {
        for (Eigen::Index i = 0; i < dim; ++i) w(i) = ((code >> i) & 1) ? 1.0 : -1.0;
        best = std::max(best, (m * w).norm());
    }
    return best;
}

double cube_diameter(const IntMatrix& a, int n) {
    if (a.rows() != a.cols() || a.rows() < 1) throw SpecError("cube_diameter: A must be square");
    if (a.rows() > 20) throw SpecError("cube_diameter: dimension above 20");
    if (n < 0) throw SpecError("cube_diameter: n must be >= 0");
    if (integer_determinant(a) == 0) throw SpecError("cube_diameter: A is singular");
    const Eigen::MatrixXd inv = a.cast<double>().inverse();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (int i = 0; i < n; ++i) power = power * inv;
    const auto dim = power.cols();
    double best = 0.0;
    Eigen::VectorXd w(dim);
    for (std::int64_t code = 0; code < (std::int64_t{1} << dim); ++code) {
        for (Eigen::Index i = 0; i < dim; ++i) w(i) = ((code >> i) & 1) ? 1.0 : -1.0;
        best = std::max(best, (power * w).norm());
    }
    return best;
}

DecayTransfer decay_transfer(double gamma, double a, double c) {
    if (!(a > 0.0 && a < 1.0)) throw SpecError("decay_transfer: base a must lie in (0,1)");
    int ell = 1;
    double pw = a;
    while (pw > 0.5) {
        pw *= a;
        ++ell;
    }
    return {c * std::pow(2.0 * ell, gamma), ell};
}

}  // namespace sipkit
