#pragma once

#include <cstdint>

namespace ctrlsynth {

// SplitMix64: the i-th output is a fixed mix of seed + i*golden, so a stream
// is reproducible on every platform and substreams split off cheaply.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // a + (b - a) * u, the same affine map for either ordering of a and b.
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

private:
    std::uint64_t state_;
};

[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    return mix.next();
}

}  // namespace ctrlsynth
