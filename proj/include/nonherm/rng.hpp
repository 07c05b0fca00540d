// rng.hpp
// Seedable, splittable random stream (xoshiro256++ seeded via splitmix64).
// Every trajectory gets its own substream derived from (root seed, index),
// so results are bit-reproducible regardless of scheduling.

#pragma once

#include <array>
#include <cstdint>

namespace nonherm {

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {
        std::uint64_t z = seed;
        for (auto& word : state_) {
            word = splitmix64(z);
        }
    }

    // Independent child stream; derivation depends only on (seed, index),
    // never on how much of this stream has been consumed.
    RngStream substream(std::uint64_t index) const {
        std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (index + 1);
        return RngStream(mix(z));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits. Bit-stable across platforms.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t splitmix64(std::uint64_t& z) {
        z += 0x9E3779B97F4A7C15ULL;
        return mix(z);
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

} // namespace nonherm
