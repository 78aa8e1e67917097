// Innovation laws driving the process families.
#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sipkit/rng.hpp"

namespace sipkit {

/// Finitely many symbols (scalars or vectors) with positive probabilities.
/// Symbol-driven families (torus, piecewise affine) address symbols by index.
struct FiniteAlphabet {
    std::vector<std::vector<double>> symbols;
    std::vector<double> probabilities;
};

enum class ScalarLaw {
    Uniform,   ///< uniform on [lo, hi]
    TwoPoint,  ///< +-scale with probability 1/2 each
    Gaussian,  ///< N(lo, hi^2): lo = mean, hi = standard deviation
};

struct ScalarNoise {
    ScalarLaw law = ScalarLaw::Uniform;
    double lo = 0.0;
    double hi = 1.0;
};

class NoiseSpec {
public:
    NoiseSpec() = default;
    NoiseSpec(FiniteAlphabet alphabet, std::uint64_t stream_id = 0);
    NoiseSpec(ScalarNoise law, std::uint64_t stream_id = 0);

    static NoiseSpec uniform_over(std::vector<std::vector<double>> symbols);
    static NoiseSpec two_point(double scale = 1.0);
    static NoiseSpec uniform(double lo, double hi);
    static NoiseSpec gaussian(double mean, double sd);

    /// Throws SpecError when probabilities do not sum to 1 (1e-12), are not
    /// positive, or symbols repeat.
    void validate() const;

    bool is_finite() const noexcept {
        return std::holds_alternative<FiniteAlphabet>(kind_);
    }
    const FiniteAlphabet& alphabet() const;
    std::size_t alphabet_size() const;
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Index of a symbol drawn from a finite alphabet.
    int draw_symbol(RngStream& rng) const;
    /// Scalar draw; finite alphabets return the first coordinate of the symbol.
    double draw_value(RngStream& rng) const;
    /// Scalar value of a symbol index.
    double symbol_value(int index) const;

    double mean() const;
    /// E|eps|^p.
    double abs_moment(double p) const;
    /// ||eps||_p.
    double lp_norm(double p) const;
    /// Largest |eps| (infinite for Gaussian).
    double sup_abs() const;

private:
    void build_cdf();

    std::variant<FiniteAlphabet, ScalarNoise> kind_ = ScalarNoise{};
    std::uint64_t stream_id_ = 0;
    std::vector<double> cdf_;
};

}  // namespace sipkit
