#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace clsna {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based generator: every draw is a pure function of the seed and a
/// tuple of integer coordinates, so draws do not depend on evaluation order.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

    constexpr std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                                 std::uint64_t d = 0) const noexcept {
        std::uint64_t h = mix64(key_ ^ a);
        h = mix64(h ^ b);
        h = mix64(h ^ c);
        return mix64(h ^ d);
    }

    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0, std::uint64_t d = 0) const noexcept {
        return (static_cast<double>(bits(a, b, c, d) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on two coordinate-keyed uniforms.
    double normal(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0, std::uint64_t d = 0) const noexcept {
        const double u1 = uniform(a, b, c, 2 * d);
        const double u2 = uniform(a, b, c, 2 * d + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Derived seed for an independent stream, e.g. one replicate.
    std::uint64_t derive(std::uint64_t stream) const noexcept { return bits(0xC1A5AULL, stream); }

private:
    std::uint64_t key_;
};

}  // namespace clsna
