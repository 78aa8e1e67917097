// The four generative process families and their static validation.
#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sipkit/noise.hpp"
#include "sipkit/observable.hpp"
#include "sipkit/types.hpp"

namespace sipkit {

/// Scalar map g applied to the linear sum, with its concave modulus c.
struct ScalarTransform {
    enum class Kind { Identity, Abs, SignedPower, Callable };
    Kind kind = Kind::Identity;
    double beta = 1.0;  ///< exponent for SignedPower
    std::function<double(double)> fn;
    ConcaveModulus modulus{};

    static ScalarTransform identity();
    static ScalarTransform absolute();
    /// sign(x)|x|^beta, 0 < beta <= 1, modulus 2^{1-beta} d^beta.
    static ScalarTransform signed_power(double beta);

    double operator()(double x) const;
};

struct PowerLaw {
    double scale = 1.0;     ///< C
    double exponent = 2.0;  ///< a > 1; a_0 = C, a_i = C i^{-a}
};

/// X_n = g( sum_{i>=0} a_i eps_{n-i} ), truncated at depth D.
struct LinearProcess {
    std::vector<double> coefficients;  ///< explicit a_0..a_{L-1}; zero beyond
    std::optional<PowerLaw> power_law;
    ScalarTransform g = ScalarTransform::identity();
    int depth = 60;
    NoiseSpec noise = NoiseSpec::two_point(1.0);

    double coefficient(int i) const;
    /// sqrt(sum_{i>=n} a_i^2), closed-form tail bound for power laws.
    double tail_l2(int n) const;
    /// sum_{i>=n} |a_i|.
    double tail_l1(int n) const;
    void validate() const;
};

/// Contraction constants of E d(W_{n,x}, W_{n,y})^alpha <= C rho^n d(x,y)^alpha.
struct ContractionParams {
    double constant = 1.0;
    double rho = 0.5;
    double alpha = 1.0;
};

/// x -> F(eps, x) for scalar iterated random functions.
struct StateMap {
    enum class Kind { Affine, TanhContraction, Identity, Callable };
    Kind kind = Kind::Affine;
    double slope = 0.5;
    std::function<double(double, double)> fn;

    static StateMap affine(double slope);
    static StateMap tanh_contraction(double slope);
    static StateMap identity();

    double operator()(double eps, double x) const;
};

/// W_n = F(eps_n, W_{n-1}) on the real line with metric |x - y|; X_n = h(W_n).
struct IteratedRandomFunction {
    StateMap map = StateMap::affine(0.5);
    NoiseSpec noise = NoiseSpec::uniform(-1.0, 1.0);
    double base_point = 0.0;
    ContractionParams contraction{};
    double diameter_proxy = 1.0;

    /// Burn-in length with C rho^burn diameter_proxy < 1e-6.
    int burn_in() const;
    void validate() const;
};

/// W_n = A^{-1}(W_{n-1} + gamma_{eps_n}) reduced to [0,1)^m; eps uniform on Gamma.
struct TorusEndomorphism {
    IntMatrix matrix;
    std::vector<IntVector> gamma;

    TorusEndomorphism() = default;
    TorusEndomorphism(IntMatrix a, std::vector<IntVector> gamma);

    int dim() const { return static_cast<int>(matrix.rows()); }
    const LinMap& inverse() const { return inverse_; }
    /// True when A^{-1}([0,1]^m + gamma) stays inside [0,1]^m for every
    /// gamma, so no reduction ever happens and the state is affine in W_0.
    bool cube_preserving() const { return cube_preserving_; }
    NoiseSpec noise() const;
    void validate() const;

private:
    LinMap inverse_;
    bool cube_preserving_ = false;
};

/// Inverse branches s_k(x) = alpha_k x + beta_k of a piecewise affine map;
/// branch k is chosen with probability |alpha_k|.
struct PiecewiseAffine {
    std::vector<double> slopes;
    std::vector<double> intercepts;

    double alpha_bar() const;
    NoiseSpec noise() const;
    void validate() const;
};

using ProcessFamily =
    std::variant<LinearProcess, IteratedRandomFunction, TorusEndomorphism, PiecewiseAffine>;

std::string family_name(const ProcessFamily& f);
void validate_family(const ProcessFamily& f);
int state_dim(const ProcessFamily& f);
NoiseSpec family_noise(const ProcessFamily& f);
/// Torus and piecewise-affine families (with cube preservation for torus).
bool has_affine_structure(const ProcessFamily& f);

// --- convenience constructors used by tests, fixtures and bindings --------

/// Doubling chain: A = (2), Gamma = {0, 1}.
TorusEndomorphism doubling_map();
/// A = s I_m with Gamma = {0..s-1}^m.
TorusEndomorphism scaled_identity(int m, int s);
/// Tent-map inverse branches x/2 and 1 - x/2.
PiecewiseAffine tent_branches();

// --- Gamma validation ------------------------------------------------------

struct GammaVerdict {
    bool ok = false;
    std::string reason;
    std::vector<std::complex<double>> eigenvalues;
    std::int64_t determinant = 0;
};

/// OK iff A is dilating, |Gamma| = |det A| and Gamma is pairwise distinct
/// modulo A Z^m (checked by solving A y = gamma_i - gamma_j).
GammaVerdict validate_gamma(const IntMatrix& a, const std::vector<IntVector>& gamma);

/// Exact integer determinant (Bareiss).
std::int64_t integer_determinant(const IntMatrix& a);

/// A[0,1)^m intersected with Z^m, for m <= 2.
std::vector<IntVector> enumerate_gamma(const IntMatrix& a);

}  // namespace sipkit
