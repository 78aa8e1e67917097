#include "sipkit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sipkit/quadrature.hpp"
#include "sipkit/types.hpp"

namespace sipkit {

NoiseSpec::NoiseSpec(FiniteAlphabet alphabet, std::uint64_t stream_id)
    : kind_(std::move(alphabet)), stream_id_(stream_id) {
    validate();
    build_cdf();
}

NoiseSpec::NoiseSpec(ScalarNoise law, std::uint64_t stream_id)
    : kind_(law), stream_id_(stream_id) {
    validate();
}

NoiseSpec NoiseSpec::uniform_over(std::vector<std::vector<double>> symbols) {
    const std::size_t n = symbols.size();
    if (n == 0) throw SpecError("noise: empty alphabet");
    FiniteAlphabet a{std::move(symbols), std::vector<double>(n, 1.0 / static_cast<double>(n))};
    return NoiseSpec(std::move(a));
}

NoiseSpec NoiseSpec::two_point(double scale) {
    return NoiseSpec(ScalarNoise{ScalarLaw::TwoPoint, -scale, scale});
}

NoiseSpec NoiseSpec::uniform(double lo, double hi) {
    return NoiseSpec(ScalarNoise{ScalarLaw::Uniform, lo, hi});
}

NoiseSpec NoiseSpec::gaussian(double mean, double sd) {
    return NoiseSpec(ScalarNoise{ScalarLaw::Gaussian, mean, sd});
}

void NoiseSpec::validate() const {
    if (const auto* a = std::get_if<FiniteAlphabet>(&kind_)) {
        if (a->symbols.empty()) throw SpecError("noise: empty alphabet");
        if (a->symbols.size() != a->probabilities.size())
            throw SpecError("noise: symbols and probabilities differ in length");
        double total = 0.0;
        for (double p : a->probabilities) {
            if (!(p > 0.0)) throw SpecError("noise: probabilities must be > 0");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw SpecError("noise: probabilities must sum to 1 within 1e-12");
        for (std::size_t i = 0; i < a->symbols.size(); ++i) {
            if (a->symbols[i].empty()) throw SpecError("noise: empty symbol");
            for (std::size_t j = 0; j < i; ++j) {
                if (a->symbols[i] == a->symbols[j])
                    throw SpecError("noise: finite-alphabet symbols must be distinct");
            }
        }
        return;
    }
    const auto& s = std::get<ScalarNoise>(kind_);
    switch (s.law) {
        case ScalarLaw::Uniform:
            if (!(s.hi > s.lo)) throw SpecError("noise: uniform needs lo < hi");
            break;
        case ScalarLaw::TwoPoint:
            if (!(s.hi > 0.0) || s.lo != -s.hi)
                throw SpecError("noise: two-point law must be symmetric +-scale");
            break;
        case ScalarLaw::Gaussian:
            if (!(s.hi > 0.0)) throw SpecError("noise: gaussian needs sd > 0");
            break;
    }
}

void NoiseSpec::build_cdf() {
    const auto& a = std::get<FiniteAlphabet>(kind_);
    cdf_.resize(a.probabilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
        acc += a.probabilities[i];
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
}

const FiniteAlphabet& NoiseSpec::alphabet() const {
    if (!is_finite()) throw SpecError("noise: not a finite alphabet");
    return std::get<FiniteAlphabet>(kind_);
}

std::size_t NoiseSpec::alphabet_size() const { return alphabet().symbols.size(); }

int NoiseSpec::draw_symbol(RngStream& rng) const {
    if (!is_finite()) throw SpecError("noise: draw_symbol on a continuous law");
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto idx = static_cast<int>(std::min<std::ptrdiff_t>(
        it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    return idx;
}

double NoiseSpec::symbol_value(int index) const {
    const auto& a = alphabet();
    if (index < 0 || static_cast<std::size_t>(index) >= a.symbols.size())
        throw SpecError("noise: symbol outside alphabet");
    return a.symbols[static_cast<std::size_t>(index)][0];
}

double NoiseSpec::draw_value(RngStream& rng) const {
    if (is_finite()) return symbol_value(draw_symbol(rng));
    const auto& s = std::get<ScalarNoise>(kind_);
    switch (s.law) {
        case ScalarLaw::Uniform:
            return s.lo + (s.hi - s.lo) * rng.uniform();
        case ScalarLaw::TwoPoint:
            return (rng.next_u64() >> 63) ? s.hi : -s.hi;
        case ScalarLaw::Gaussian:
            return s.lo + s.hi * rng.normal();
    }
    return 0.0;
}

double NoiseSpec::mean() const {
    if (const auto* a = std::get_if<FiniteAlphabet>(&kind_)) {
        double m = 0.0;
        for (std::size_t i = 0; i < a->symbols.size(); ++i)
            m += a->probabilities[i] * a->symbols[i][0];
        return m;
    }
    const auto& s = std::get<ScalarNoise>(kind_);
    switch (s.law) {
        case ScalarLaw::Uniform:
            return 0.5 * (s.lo + s.hi);
        case ScalarLaw::TwoPoint:
            return 0.0;
        case ScalarLaw::Gaussian:
            return s.lo;
    }
    return 0.0;
}

double NoiseSpec::abs_moment(double p) const {
    if (const auto* a = std::get_if<FiniteAlphabet>(&kind_)) {
        double m = 0.0;
        for (std::size_t i = 0; i < a->symbols.size(); ++i)
            m += a->probabilities[i] * std::pow(std::abs(a->symbols[i][0]), p);
        return m;
    }
    const auto& s = std::get<ScalarNoise>(kind_);
    switch (s.law) {
        case ScalarLaw::TwoPoint:
            return std::pow(s.hi, p);
        case ScalarLaw::Uniform: {
            // (1/(hi-lo)) * int_lo^hi |x|^p dx
            auto prim = [p](double x) {
                return std::copysign(std::pow(std::abs(x), p + 1.0) / (p + 1.0), x);
            };
            return (prim(s.hi) - prim(s.lo)) / (s.hi - s.lo);
        }
        case ScalarLaw::Gaussian: {
            if (s.lo == 0.0) {
                return std::pow(s.hi, p) * std::pow(2.0, p / 2.0) *
                       std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
            }
            const double mu = s.lo, sd = s.hi;
            const auto density = [mu, sd, p](double x) {
                const double z = (x - mu) / sd;
                return std::pow(std::abs(x), p) * std::exp(-0.5 * z * z) /
                       (sd * std::sqrt(2.0 * std::numbers::pi));
            };
            const double edges[] = {mu - 12.0 * sd, std::min(0.0, mu), std::max(0.0, mu),
                                    mu + 12.0 * sd};
            return integrate_pieces(density, edges, 1e-12).value;
        }
    }
    return 0.0;
}

double NoiseSpec::lp_norm(double p) const { return std::pow(abs_moment(p), 1.0 / p); }

double NoiseSpec::sup_abs() const {
    if (const auto* a = std::get_if<FiniteAlphabet>(&kind_)) {
        double m = 0.0;
        for (const auto& sym : a->symbols) {
            double norm2 = 0.0;
            for (double c : sym) norm2 += c * c;
            m = std::max(m, std::sqrt(norm2));
        }
        return m;
    }
    const auto& s = std::get<ScalarNoise>(kind_);
    if (s.law == ScalarLaw::Gaussian) return std::numeric_limits<double>::infinity();
    return std::max(std::abs(s.lo), std::abs(s.hi));
}

}  // namespace sipkit
