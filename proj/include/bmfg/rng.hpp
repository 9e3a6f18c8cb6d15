#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace bmfg {

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds a sequence of words into a seed. Different sequences (including
/// different lengths) give unrelated results.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::span<const std::uint32_t> words) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (auto w : words) h = mix64(h ^ (static_cast<std::uint64_t>(w) + 0x100000000ULL));
    return mix64(h ^ static_cast<std::uint64_t>(words.size()));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint32_t> words) {
    return derive_seed(seed, std::span<const std::uint32_t>(words.begin(), words.size()));
}

/// SplitMix64 generator: 8 bytes of state, so one stream per particle is cheap.
/// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class StreamEngine {
public:
    using result_type = std::uint64_t;

    constexpr explicit StreamEngine(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

} // namespace bmfg
