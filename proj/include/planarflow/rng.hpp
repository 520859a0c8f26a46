#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace planarflow {

// Philox4x32-10 counter-based generator. Chosen over <random> engines because
// the noise-transport contract keys fresh draws by (frame, pixel, channel):
// any evaluation order must yield bitwise-identical streams, which a stateful
// engine cannot guarantee and a counter-based one gives for free.
namespace philox {

struct Block {
    std::array<std::uint32_t, 4> x;
};

inline void round_once(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t mul_a = 0xD2511F53ull;
    constexpr std::uint64_t mul_b = 0xCD9E8D57ull;
    const std::uint64_t p0 = mul_a * ctr[0];
    const std::uint64_t p1 = mul_b * ctr[2];
    const std::array<std::uint32_t, 4> out = {
        static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
        static_cast<std::uint32_t>(p1),
        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
        static_cast<std::uint32_t>(p0),
    };
    ctr = out;
    key[0] += 0x9E3779B9u;  // golden-ratio Weyl increments
    key[1] += 0xBB67AE85u;
}

inline Block generate(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_lo),
        static_cast<std::uint32_t>(counter_lo >> 32),
        static_cast<std::uint32_t>(counter_hi),
        static_cast<std::uint32_t>(counter_hi >> 32),
    };
    std::array<std::uint32_t, 2> k = {
        static_cast<std::uint32_t>(key),
        static_cast<std::uint32_t>(key >> 32),
    };
    for (int i = 0; i < 10; ++i) round_once(ctr, k);
    return Block{ctr};
}

} // namespace philox

// splitmix64, used to mix stream identifiers into Philox keys.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (0x9E3779B97F4A7C15ull + b));
}

// Sequential random stream over a Philox key. derive() forks statistically
// independent child streams; normal() is an explicit Box-Muller so output is
// identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix64(seed)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed, stream)) {}

    Rng derive(std::uint64_t a) const { return Rng(key_, mix64(a)); }
    Rng derive(std::uint64_t a, std::uint64_t b) const { return Rng(key_, mix64(a, b)); }

    // Stream identity, usable as a key for the stateless keyed_normal draws.
    std::uint64_t stream_key() const { return key_; }

    std::uint64_t next_u64() {
        if (cache_valid_) {
            cache_valid_ = false;
            return cached_;
        }
        const auto blk = philox::generate(key_, 0, counter_++);
        cached_ = (static_cast<std::uint64_t>(blk.x[2]) << 32) | blk.x[3];
        cache_valid_ = true;
        return (static_cast<std::uint64_t>(blk.x[0]) << 32) | blk.x[1];
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection-free multiply-shift would bias for huge n; plain rejection
        // keeps exact uniformity for the small ranges used here.
        const std::uint64_t limit = n * ((~0ull) / n);
        std::uint64_t r = next_u64();
        while (r >= limit) r = next_u64();
        return r % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::uint64_t cached_ = 0;
    bool cache_valid_ = false;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stateless per-cell draw: one standard normal addressed by (key, cell).
// Cell index i consumes the i-th Box-Muller pair of the keyed stream.
inline double keyed_normal(std::uint64_t key, std::uint64_t cell) {
    const auto blk = philox::generate(key, 1, cell);
    const std::uint64_t bits1 =
        (static_cast<std::uint64_t>(blk.x[0]) << 32) | blk.x[1];
    const std::uint64_t bits2 =
        (static_cast<std::uint64_t>(blk.x[2]) << 32) | blk.x[3];
    double u1 = static_cast<double>(bits1 >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(bits2 >> 11) * 0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace planarflow
