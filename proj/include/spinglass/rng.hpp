#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by a 64-bit key (the master seed) and three 32-bit
// stream words; the fourth counter word enumerates 128-bit blocks inside the
// stream. Two streams with different addresses never share blocks, so results
// do not depend on the order in which streams are consumed.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace spinglass {

using Philox4x32Block = std::array<std::uint32_t, 4>;

inline Philox4x32Block philox4x32_10(Philox4x32Block ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Purpose tags keep streams used for different jobs disjoint.
enum class StreamTag : std::uint32_t {
    derive = 1,
    instance = 2,
    anneal = 3,
    tempering = 4,
    cluster = 5,
    gauge = 6,
    noise = 7,
    config = 8,
    test = 255,
};

class CounterRng {
public:
    using result_type = std::uint32_t;

    CounterRng(std::uint64_t seed, StreamTag tag, std::uint32_t a = 0, std::uint32_t b = 0,
               std::uint32_t c = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          words_{a, b, (static_cast<std::uint32_t>(tag) << 24) ^ c} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 4) refill();
        return block_[used_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() { return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52; }

    /// Unbiased integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    int spin() { return ((*this)() & 1u) ? 1 : -1; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    void refill() {
        block_ = philox4x32_10({counter_, words_[0], words_[1], words_[2]}, key_);
        ++counter_;
        used_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 3> words_;
    std::uint32_t counter_ = 0;
    Philox4x32Block block_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Deterministic child seed, e.g. one per instance index under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint32_t salt = 0) {
    CounterRng rng(master, StreamTag::derive, static_cast<std::uint32_t>(index),
                   static_cast<std::uint32_t>(index >> 32), salt);
    return rng.next_u64();
}

}  // namespace spinglass
