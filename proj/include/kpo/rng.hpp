#pragma once

#include <cstdint>
#include <random>

namespace kpo {

// Seedable random source with stable cross-platform output.
//
// The engine is std::mt19937_64, whose sequence is fully specified by the
// standard. Floating-point draws avoid std::uniform_real_distribution (whose
// output is implementation-defined) and instead map the top 53 bits of each
// 64-bit draw onto [0,1). Every histogram in this project is reproducible
// from (seed, stream) alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent stream derived from (seed, stream), e.g. one per ensemble
    // run. std::seed_seq is standard-specified, so streams are portable too.
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        eng_.seed(seq);
    }

    std::uint64_t raw() { return eng_(); }

    // Uniform on [0,1) with 53-bit resolution.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on [-scale, scale).
    double symmetric(double scale) { return scale * (2.0 * unit() - 1.0); }

    // Fair coin from the top bit of one draw.
    bool coin() { return (eng_() >> 63) != 0; }

private:
    std::mt19937_64 eng_;
};

}  // namespace kpo
