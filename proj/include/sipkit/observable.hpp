// Observables h evaluated on chain states.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sipkit/types.hpp"

namespace sipkit {

/// a*cos(2 pi <k,x>) + b*sin(2 pi <k,x>). The zero frequency carries the
/// constant term in `cos_coef`.
struct TrigTerm {
    std::vector<int> frequency;
    double cos_coef = 0.0;
    double sin_coef = 0.0;
};

/// Real trigonometric polynomial on the m-torus. Storing cos/sin pairs keeps
/// the values real without a conjugate-symmetry bookkeeping step.
struct TrigPolynomial {
    int dim = 1;
    std::vector<TrigTerm> terms;
};

/// Polynomial pieces on [breakpoints[i], breakpoints[i+1]] in the monomial
/// basis of the global variable x. Breakpoints start at 0, end at 1 and are
/// strictly increasing. Outside [0,1] the end pieces are extended.
struct PiecewisePolynomial {
    std::vector<double> breakpoints;
    std::vector<std::vector<double>> pieces;
};

/// c(delta) = scale * delta^exponent with 0 < exponent <= 1: a concave
/// modulus of continuity.
struct ConcaveModulus {
    double scale = 1.0;
    double exponent = 1.0;
    double operator()(double delta) const;
};

/// Black-box observable with an optional Lipschitz constant / modulus and an
/// optional bound on |h|.
struct LipschitzCallable {
    std::function<double(std::span<const double>)> fn;
    int dim = 1;
    std::optional<double> lipschitz;
    std::optional<ConcaveModulus> modulus;
    std::optional<double> sup_abs;
};

class Observable {
public:
    using Kind = std::variant<TrigPolynomial, PiecewisePolynomial, LipschitzCallable>;

    Observable();
    Observable(TrigPolynomial t);
    Observable(PiecewisePolynomial p);
    Observable(LipschitzCallable c);

    /// cos(2 pi k x) on the circle.
    static Observable cosine(int k = 1, double amplitude = 1.0);
    static Observable constant(double c, int dim = 1);
    /// Piecewise-linear interpolant through (x_i, y_i) with x_0 = 0, x_n = 1.
    static Observable piecewise_linear(std::vector<double> xs, std::vector<double> ys);

    void validate() const;

    double operator()(const Point& x) const;
    double eval1(double x) const;

    int dim() const;
    const Kind& kind() const noexcept { return kind_; }
    bool is_trig() const noexcept { return std::holds_alternative<TrigPolynomial>(kind_); }
    bool is_piecewise() const noexcept {
        return std::holds_alternative<PiecewisePolynomial>(kind_);
    }
    bool is_callable() const noexcept {
        return std::holds_alternative<LipschitzCallable>(kind_);
    }
    const TrigPolynomial& trig() const { return std::get<TrigPolynomial>(kind_); }
    const PiecewisePolynomial& piecewise() const { return std::get<PiecewisePolynomial>(kind_); }
    const LipschitzCallable& callable() const { return std::get<LipschitzCallable>(kind_); }

    /// sup |h| over the state space when known.
    std::optional<double> sup_abs() const;
    /// Lipschitz constant w.r.t. the Euclidean metric when known.
    std::optional<double> lipschitz() const;

private:
    Kind kind_;
};

// --- polynomial helpers (monomial basis, c[0] + c[1] x + ...) --------------

double poly_eval(std::span<const double> c, double x);
std::vector<double> poly_antiderivative(std::span<const double> c);
std::vector<double> poly_derivative(std::span<const double> c);
/// Real roots of c in the open interval (lo, hi), sorted.
std::vector<double> poly_real_roots(std::span<const double> c, double lo, double hi);
/// max |c(x)| over [lo, hi].
double poly_sup_abs(std::span<const double> c, double lo, double hi);

/// int_a^b h(x) dx for a piecewise polynomial (a, b may lie anywhere).
double integrate_piecewise(const PiecewisePolynomial& h, double a, double b);

/// int_a^b clip(h(x) - shift, M) dx, exact: crossings of +-M are located per
/// piece with polynomial root finding.
double integrate_piecewise_clipped(const PiecewisePolynomial& h, double a, double b,
                                   double shift, double level);

/// int_a^b |clip-residual(h(x) - shift, M)| dx where the residual is
/// g_M(y) = y - clip(y, M).
double integrate_piecewise_clip_residual_abs(const PiecewisePolynomial& h, double a, double b,
                                             double shift, double level);

}  // namespace sipkit
