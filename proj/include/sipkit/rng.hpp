// Counter-based random streams for reproducible parallel Monte Carlo.
//
// Every Monte Carlo task (one simulated path, one sampled pair, ...) owns a
// stream keyed by (master seed, task id). The stream is a pure function of
// that pair, so results never depend on which worker ran the task or in
// which order tasks were scheduled.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace sipkit {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) noexcept;
};

/// SplitMix64 finalizer; used as the keyed 64-bit mix.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Key derivation for (master seed, task id).
std::uint64_t stream_key(std::uint64_t master, std::uint64_t task) noexcept;

/// Derive a sub-master seed for a named component of an experiment so that
/// e.g. the decomposition ensemble and the coefficient ensemble of one run
/// never share streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) noexcept;

class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master, std::uint64_t task) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on (0, 1).
    double uniform_open() noexcept;
    /// Standard normal via Box-Muller (both variates are used).
    double normal() noexcept;
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

    std::uint64_t key() const noexcept { return key_; }

private:
    void refill() noexcept;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Name of the generator, printed in report headers.
inline constexpr std::string_view kGeneratorName =
    "philox4x32-10 keyed by splitmix64(master, task)";

}  // namespace sipkit
