// Moduli of continuity omega_{p,h}, omega_{inf,h} and contracted-cube diameters.
#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "sipkit/observable.hpp"
#include "sipkit/types.hpp"

namespace sipkit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ModulusValue {
    double value = 0.0;
    /// false when the value is only a lower estimate of the supremum
    bool certified = true;
    std::string method;
};

/// omega_{p,h}(delta) = sup_{|x| <= delta} ||h(. + x) - h||_p and, for
/// p = inf, sup_{|x - y| <= delta} |h(x) - h(y)|. Translations wrap around
/// the torus when `periodic` is set. Values are cached; the cache is safe
/// to share between threads.
class ModulusEvaluator {
public:
    ModulusEvaluator(Observable h, double p, bool periodic = true, int grid = 1 << 14);

    ModulusValue evaluate(double delta) const;
    double operator()(double delta) const { return evaluate(delta).value; }

    double p() const noexcept { return p_; }
    const Observable& observable() const noexcept { return h_; }

private:
    ModulusValue compute(double delta) const;
    ModulusValue trig(double delta) const;
    ModulusValue grid_sup(double delta) const;
    ModulusValue lp_quadrature(double delta) const;
    double shift_norm(double x) const;
    std::optional<double> lipschitz() const;

    struct Cache {
        mutable std::shared_mutex mutex;
        std::map<double, ModulusValue> values;
        std::vector<double> grid_values;  // h on the sup grid, filled once
        std::vector<double> profile;      // ||h(.+x)-h||_p on the translation grid
    };

    Observable h_;
    double p_;
    bool periodic_;
    int grid_;
    std::shared_ptr<Cache> cache_;
};

/// omega(evaluator, delta) with delta checked to lie in [0, 1].
double omega(const ModulusEvaluator& ev, double delta);

/// (E|sin(2 pi U)|^p)^{1/p} for U uniform on [0,1].
double sine_lp_constant(double p);

/// Diameter of A^{-n}[0,1]^m: max over w in {-1,1}^m of |A^{-n} w|.
double cube_diameter(const IntMatrix& a, int n);

/// Same for a real inverse map already raised to the n-th power.
double cube_diameter(const LinMap& contraction);

struct DecayTransfer {
    double constant = 0.0;  ///< C (2 ell)^gamma
    int ell = 1;            ///< min{ell : a^ell <= 1/2}
};

/// beta(2^{-n}) <= C n^{-gamma} implies beta(a^n) <= C (2 ell / n)^gamma for n >= 2 ell.
DecayTransfer decay_transfer(double gamma, double a, double c = 1.0);

}  // namespace sipkit
