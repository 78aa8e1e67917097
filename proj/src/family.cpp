#include "sipkit/family.hpp"

#include <algorithm>
#include <cmath>

namespace sipkit {

// --- ScalarTransform ---------------------------------------------------------

ScalarTransform ScalarTransform::identity() { return {}; }

ScalarTransform ScalarTransform::absolute() {
    ScalarTransform t;
    t.kind = Kind::Abs;
    return t;
}

ScalarTransform ScalarTransform::signed_power(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw SpecError("signed_power: need 0 < beta <= 1");
    ScalarTransform t;
    t.kind = Kind::SignedPower;
    t.beta = beta;
    t.modulus = ConcaveModulus{std::pow(2.0, 1.0 - beta), beta};
    return t;
}

double ScalarTransform::operator()(double x) const {
    switch (kind) {
        case Kind::Identity:
            return x;
        case Kind::Abs:
            return std::abs(x);
        case Kind::SignedPower:
            return std::copysign(std::pow(std::abs(x), beta), x);
        case Kind::Callable:
            return fn(x);
    }
    return x;
}

// --- LinearProcess -----------------------------------------------------------

double LinearProcess::coefficient(int i) const {
    if (i < 0) return 0.0;
    if (power_law) {
        if (i == 0) return power_law->scale;
        return power_law->scale * std::pow(static_cast<double>(i), -power_law->exponent);
    }
    const auto idx = static_cast<std::size_t>(i);
    return idx < coefficients.size() ? coefficients[idx] : 0.0;
}

double LinearProcess::tail_l2(int n) const {
    n = std::max(n, 0);
    if (power_law) {
        const double c2 = power_law->scale * power_law->scale;
        const double two_a = 2.0 * power_law->exponent;
        double sum = 0.0;
        int start = n;
        if (start == 0) {
            sum += c2;
            start = 1;
        }
        // a_start^2 + int_start^inf C^2 x^{-2a} dx bounds the tail from above.
        const double s = static_cast<double>(start);
        sum += c2 * (std::pow(s, -two_a) + std::pow(s, 1.0 - two_a) / (two_a - 1.0));
        return std::sqrt(sum);
    }
    double sum = 0.0;
    for (std::size_t i = static_cast<std::size_t>(n); i < coefficients.size(); ++i)
        sum += coefficients[i] * coefficients[i];
    return std::sqrt(sum);
}

double LinearProcess::tail_l1(int n) const {
    n = std::max(n, 0);
    if (power_law) {
        const double c = std::abs(power_law->scale);
        const double a = power_law->exponent;
        double sum = 0.0;
        int start = n;
        if (start == 0) {
            sum += c;
            start = 1;
        }
        const double s = static_cast<double>(start);
        sum += c * (std::pow(s, -a) + std::pow(s, 1.0 - a) / (a - 1.0));
        return sum;
    }
    double sum = 0.0;
    for (std::size_t i = static_cast<std::size_t>(n); i < coefficients.size(); ++i)
        sum += std::abs(coefficients[i]);
    return sum;
}

void LinearProcess::validate() const {
    if (power_law) {
        if (!(power_law->exponent > 1.0))
            throw SpecError("linear process: power-law exponent must exceed 1 (summability)");
        if (!coefficients.empty())
            throw SpecError("linear process: give either a power law or a coefficient list");
    } else if (coefficients.empty()) {
        throw SpecError("linear process: no coefficients");
    }
    for (double a : coefficients)
        if (!std::isfinite(a)) throw SpecError("linear process: non-finite coefficient");
    if (depth < 0) throw SpecError("linear process: negative truncation depth");
    if (g.kind == ScalarTransform::Kind::Callable && !g.fn)
        throw SpecError("linear process: callable transform without evaluator");
    noise.validate();
}

// --- IteratedRandomFunction ----------------------------------------------------

StateMap StateMap::affine(double slope) {
    StateMap m;
    m.kind = Kind::Affine;
    m.slope = slope;
    return m;
}

StateMap StateMap::tanh_contraction(double slope) {
    StateMap m;
    m.kind = Kind::TanhContraction;
    m.slope = slope;
    return m;
}

StateMap StateMap::identity() {
    StateMap m;
    m.kind = Kind::Identity;
    m.slope = 1.0;
    return m;
}

double StateMap::operator()(double eps, double x) const {
    switch (kind) {
        case Kind::Affine:
            return slope * x + eps;
        case Kind::TanhContraction:
            return slope * std::tanh(x) + eps;
        case Kind::Identity:
            return x;
        case Kind::Callable:
            return fn(eps, x);
    }
    return x;
}

int IteratedRandomFunction::burn_in() const {
    const auto& c = contraction;
    if (!(c.rho > 0.0 && c.rho < 1.0)) return 0;
    const double target = 1e-6 / (std::max(c.constant, 1e-300) * std::max(diameter_proxy, 1e-300));
    if (target >= 1.0) return 0;
    return static_cast<int>(std::ceil(std::log(target) / std::log(c.rho))) + 1;
}

void IteratedRandomFunction::validate() const {
    if (map.kind == StateMap::Kind::Callable && !map.fn)
        throw SpecError("iterated random function: callable map without evaluator");
    if (!(contraction.alpha >= 1.0)) throw SpecError("contraction: alpha must be >= 1");
    if (!(contraction.constant > 0.0)) throw SpecError("contraction: C must be > 0");
    if (!(contraction.rho > 0.0 && contraction.rho < 1.0))
        throw SpecError("contraction: rho must lie in (0,1)");
    noise.validate();
}

// --- TorusEndomorphism -------------------------------------------------------

TorusEndomorphism::TorusEndomorphism(IntMatrix a, std::vector<IntVector> g)
    : matrix(std::move(a)), gamma(std::move(g)) {
    validate();
    const int m = dim();
    inverse_ = matrix.cast<double>().inverse();
    cube_preserving_ = true;
    for (const auto& gm : gamma) {
        for (int corner = 0; corner < (1 << m); ++corner) {
            Point v(m);
            for (int i = 0; i < m; ++i) v(i) = static_cast<double>(((corner >> i) & 1) + gm(i));
            const Point w = inverse_ * v;
            for (int i = 0; i < m; ++i)
                if (w(i) < -1e-12 || w(i) > 1.0 + 1e-12) cube_preserving_ = false;
        }
    }
}

NoiseSpec TorusEndomorphism::noise() const {
    std::vector<std::vector<double>> symbols;
    for (const auto& g : gamma) {
        std::vector<double> s(static_cast<std::size_t>(g.size()));
        for (Eigen::Index i = 0; i < g.size(); ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(g(i));
        symbols.push_back(std::move(s));
    }
    return NoiseSpec::uniform_over(std::move(symbols));
}

void TorusEndomorphism::validate() const {
    if (matrix.rows() < 1 || matrix.rows() != matrix.cols())
        throw SpecError("torus: A must be a non-empty square matrix");
    if (matrix.rows() > kMaxDim) throw SpecError("torus: dimension exceeds 8");
    const GammaVerdict v = validate_gamma(matrix, gamma);
    if (!v.ok) throw SpecError("torus: " + v.reason);
}

// --- PiecewiseAffine -----------------------------------------------------------

double PiecewiseAffine::alpha_bar() const {
    double m = 0.0;
    for (double a : slopes) m = std::max(m, std::abs(a));
    return m;
}

NoiseSpec PiecewiseAffine::noise() const {
    FiniteAlphabet a;
    for (std::size_t k = 0; k < slopes.size(); ++k) {
        a.symbols.push_back({static_cast<double>(k)});
        a.probabilities.push_back(std::abs(slopes[k]));
    }
    // Renormalise rounding so the alphabet passes its own 1e-12 check.
    double total = 0.0;
    for (double p : a.probabilities) total += p;
    for (double& p : a.probabilities) p /= total;
    return NoiseSpec(std::move(a));
}

void PiecewiseAffine::validate() const {
    if (slopes.size() < 2) throw SpecError("piecewise affine: need at least two branches");
    if (slopes.size() != intercepts.size())
        throw SpecError("piecewise affine: slopes and intercepts differ in length");
    double total = 0.0;
    for (double a : slopes) {
        if (!(std::abs(a) > 0.0 && std::abs(a) < 1.0))
            throw SpecError("piecewise affine: need 0 < |alpha_k| < 1");
        total += std::abs(a);
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw SpecError("piecewise affine: sum of |alpha_k| must equal 1 within 1e-12");
    std::vector<std::pair<double, double>> images;
    for (std::size_t k = 0; k < slopes.size(); ++k) {
        const double y0 = intercepts[k];
        const double y1 = slopes[k] + intercepts[k];
        const double lo = std::min(y0, y1), hi = std::max(y0, y1);
        if (lo < -1e-12 || hi > 1.0 + 1e-12)
            throw SpecError("piecewise affine: branch does not map [0,1] into [0,1]");
        images.emplace_back(lo, hi);
    }
    std::sort(images.begin(), images.end());
    for (std::size_t k = 1; k < images.size(); ++k)
        if (images[k].first < images[k - 1].second - 1e-12)
            throw SpecError("piecewise affine: branch images overlap");
}

// --- variant helpers -----------------------------------------------------------

std::string family_name(const ProcessFamily& f) {
    switch (f.index()) {
        case 0:
            return "linear";
        case 1:
            return "irf";
        case 2:
            return "torus";
        default:
            return "piecewise-affine";
    }
}

void validate_family(const ProcessFamily& f) {
    std::visit([](const auto& fam) { fam.validate(); }, f);
}

int state_dim(const ProcessFamily& f) {
    if (const auto* t = std::get_if<TorusEndomorphism>(&f)) return t->dim();
    return 1;
}

NoiseSpec family_noise(const ProcessFamily& f) {
    if (const auto* l = std::get_if<LinearProcess>(&f)) return l->noise;
    if (const auto* i = std::get_if<IteratedRandomFunction>(&f)) return i->noise;
    if (const auto* t = std::get_if<TorusEndomorphism>(&f)) return t->noise();
    return std::get<PiecewiseAffine>(f).noise();
}

bool has_affine_structure(const ProcessFamily& f) {
    if (const auto* t = std::get_if<TorusEndomorphism>(&f)) return t->cube_preserving();
    return std::holds_alternative<PiecewiseAffine>(f);
}

TorusEndomorphism doubling_map() {
    IntMatrix a(1, 1);
    a(0, 0) = 2;
    IntVector g0(1), g1(1);
    g0(0) = 0;
    g1(0) = 1;
    return TorusEndomorphism(a, {g0, g1});
}

TorusEndomorphism scaled_identity(int m, int s) {
    IntMatrix a = IntMatrix::Identity(m, m) * s;
    std::vector<IntVector> gamma;
    std::int64_t count = 1;
    for (int i = 0; i < m; ++i) count *= s;
    for (std::int64_t code = 0; code < count; ++code) {
        IntVector g(m);
        std::int64_t c = code;
        // Last coordinate varies fastest: (0,0), (0,1), (1,0), (1,1) for s = 2.
        for (int i = m - 1; i >= 0; --i) {
            g(i) = c % s;
            c /= s;
        }
        gamma.push_back(g);
    }
    return TorusEndomorphism(a, gamma);
}

PiecewiseAffine tent_branches() {
    PiecewiseAffine p{{0.5, -0.5}, {0.0, 1.0}};
    p.validate();
    return p;
}

// --- Gamma -----------------------------------------------------------------------

std::int64_t integer_determinant(const IntMatrix& a) {
    const Eigen::Index n = a.rows();
    if (n != a.cols()) throw SpecError("determinant of non-square matrix");
    if (n == 0) return 1;
    IntMatrix m = a;
    std::int64_t sign = 1;
    std::int64_t prev = 1;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (m(k, k) == 0) {
            Eigen::Index swap = -1;
            for (Eigen::Index r = k + 1; r < n; ++r)
                if (m(r, k) != 0) {
                    swap = r;
                    break;
                }
            if (swap < 0) return 0;
            m.row(k).swap(m.row(swap));
            sign = -sign;
        }
        for (Eigen::Index i = k + 1; i < n; ++i)
            for (Eigen::Index j = k + 1; j < n; ++j)
                m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
        prev = m(k, k);
    }
    return sign * m(n - 1, n - 1);
}

GammaVerdict validate_gamma(const IntMatrix& a, const std::vector<IntVector>& gamma) {
    GammaVerdict v;
    if (a.rows() < 1 || a.rows() != a.cols()) {
        v.reason = "A must be square";
        return v;
    }
    const Eigen::MatrixXd ad = a.cast<double>();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(ad, false);
    bool dilating = true;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        v.eigenvalues.push_back(solver.eigenvalues()(i));
        if (!(std::abs(solver.eigenvalues()(i)) > 1.0 + 1e-12)) dilating = false;
    }
    v.determinant = integer_determinant(a);
    if (!dilating) {
        v.reason = "A is not dilating; eigenvalue moduli:";
        for (const auto& ev : v.eigenvalues) v.reason += " " + std::to_string(std::abs(ev));
        return v;
    }
    const auto n = static_cast<std::size_t>(std::llabs(v.determinant));
    if (gamma.size() != n) {
        v.reason = "|Gamma| = " + std::to_string(gamma.size()) + " but |det A| = " +
                   std::to_string(n);
        return v;
    }
    const Eigen::MatrixXd inv = ad.inverse();
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (gamma[i].size() != a.rows()) {
            v.reason = "Gamma element has wrong dimension";
            return v;
        }
        for (std::size_t j = 0; j < i; ++j) {
            const Eigen::VectorXd diff = (gamma[i] - gamma[j]).cast<double>();
            const Eigen::VectorXd y = inv * diff;
            bool integral = true;
            for (Eigen::Index k = 0; k < y.size(); ++k)
                if (std::abs(y(k) - std::round(y(k))) > 1e-9) integral = false;
            if (integral) {
                v.reason = "Gamma elements " + std::to_string(j) + " and " + std::to_string(i) +
                           " coincide modulo A Z^m";
                return v;
            }
        }
    }
    v.ok = true;
    return v;
}

std::vector<IntVector> enumerate_gamma(const IntMatrix& a) {
    const auto m = a.rows();
    if (m < 1 || m > 2 || a.cols() != m)
        throw SpecError("enumerate_gamma: only square matrices with m <= 2");
    const Eigen::MatrixXd ad = a.cast<double>();
    const Eigen::MatrixXd inv = ad.inverse();
    // Bounding box of A[0,1]^m from its corners.
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, 1e300);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(m, -1e300);
    for (int corner = 0; corner < (1 << m); ++corner) {
        Eigen::VectorXd v(m);
        for (Eigen::Index i = 0; i < m; ++i) v(i) = static_cast<double>((corner >> i) & 1);
        const Eigen::VectorXd w = ad * v;
        lo = lo.cwiseMin(w);
        hi = hi.cwiseMax(w);
    }
    std::vector<IntVector> out;
    const auto in_half_open_cube = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd y = inv * z;
        for (Eigen::Index i = 0; i < m; ++i)
            if (y(i) < -1e-12 || y(i) >= 1.0 - 1e-12) return false;
        return true;
    };
    const auto x0 = static_cast<std::int64_t>(std::floor(lo(0)));
    const auto x1 = static_cast<std::int64_t>(std::ceil(hi(0)));
    if (m == 1) {
        for (std::int64_t x = x0; x <= x1; ++x) {
            Eigen::VectorXd z(1);
            z(0) = static_cast<double>(x);
            if (in_half_open_cube(z)) {
                IntVector g(1);
                g(0) = x;
                out.push_back(g);
            }
        }
        return out;
    }
    const auto y0 = static_cast<std::int64_t>(std::floor(lo(1)));
    const auto y1 = static_cast<std::int64_t>(std::ceil(hi(1)));
    for (std::int64_t x = x0; x <= x1; ++x)
        for (std::int64_t y = y0; y <= y1; ++y) {
            Eigen::VectorXd z(2);
            z << static_cast<double>(x), static_cast<double>(y);
            if (in_half_open_cube(z)) {
                IntVector g(2);
                g << x, y;
                out.push_back(g);
            }
        }
    return out;
}

}  // namespace sipkit
