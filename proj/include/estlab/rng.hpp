#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

namespace estlab {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 output finalizer (a bijection on 64-bit words).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent draw streams. Every Monte-Carlo trial owns one generator per
/// stream, keyed by (master seed, stream, trial index).
enum class Stream : std::uint64_t {
    Noise = 1,
    Theta = 2,
    GridPoint = 3,
    Scenario = 4,
    Batch = 5,
};

/// Counter-style key derivation: a pure function of its arguments, so trial i
/// can be regenerated without replaying trials 0..i-1.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept
{
    std::uint64_t h = mix64(master + kGolden);
    h = mix64(h ^ (static_cast<std::uint64_t>(stream) * kGolden));
    return mix64(h + (index + 1) * kGolden);
}

/// SplitMix64. Small state, cheap to construct per trial.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        state_ += kGolden;
        return mix64(state_);
    }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Circularly symmetric complex Gaussian, E|z|^2 = variance (each part variance/2).
/// Polar Box-Muller: |z|^2 is exponential with mean `variance`, the phase uniform.
inline std::complex<double> draw_complex_gaussian(SplitMix64& rng, double variance)
{
    const double u_radius = rng.uniform_open();
    const double u_phase = rng.uniform_open();
    if (variance == 0.0)
        return {};
    return std::polar(std::sqrt(-variance * std::log(u_radius)), 2.0 * std::numbers::pi * u_phase);
}

} // namespace estlab
