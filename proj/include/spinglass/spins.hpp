#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace spinglass {

/// Ising configuration over the dense vertices of a graph; entries are +1/-1.
class SpinConfig {
public:
    SpinConfig() = default;
    explicit SpinConfig(std::size_t n, std::int8_t value = 1) : spins_(n, value) {}
    explicit SpinConfig(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
        for (auto s : spins_)
            if (s != 1 && s != -1) throw std::invalid_argument("spin values must be +1 or -1");
    }

    static SpinConfig random(std::size_t n, CounterRng& rng) {
        SpinConfig c(n);
        for (auto& s : c.spins_) s = static_cast<std::int8_t>(rng.spin());
        return c;
    }

    std::size_t size() const { return spins_.size(); }
    std::int8_t operator[](std::size_t i) const { return spins_[i]; }
    void set(std::size_t i, std::int8_t s) { spins_[i] = s; }
    void flip(std::size_t i) { spins_[i] = static_cast<std::int8_t>(-spins_[i]); }
    std::span<const std::int8_t> values() const { return spins_; }
    std::int8_t* data() { return spins_.data(); }
    const std::int8_t* data() const { return spins_.data(); }

    SpinConfig flipped() const {
        SpinConfig c = *this;
        for (auto& s : c.spins_) s = static_cast<std::int8_t>(-s);
        return c;
    }

    /// Representative of {S, -S}: the member whose first spin is +1.
    SpinConfig canonical() const { return (!spins_.empty() && spins_[0] < 0) ? flipped() : *this; }

    friend auto operator<=>(const SpinConfig&, const SpinConfig&) = default;

private:
    std::vector<std::int8_t> spins_;
};

/// Bit-packed configuration used as a histogram key (+1 -> bit set).
using PackedConfig = std::vector<std::uint64_t>;

inline PackedConfig pack(std::span<const std::int8_t> spins) {
    PackedConfig out((spins.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < spins.size(); ++i)
        if (spins[i] > 0) out[i / 64] |= std::uint64_t{1} << (i % 64);
    return out;
}

inline PackedConfig pack(const SpinConfig& c) { return pack(c.values()); }

inline SpinConfig unpack(const PackedConfig& bits, std::size_t n) {
    std::vector<std::int8_t> spins(n);
    for (std::size_t i = 0; i < n; ++i) spins[i] = (bits[i / 64] >> (i % 64)) & 1u ? 1 : -1;
    return SpinConfig(std::move(spins));
}

/// Gauge t_i in {+1, -1} over the dense vertices.
class GaugeVector {
public:
    GaugeVector() = default;
    explicit GaugeVector(std::vector<std::int8_t> t) : t_(std::move(t)) {
        for (auto s : t_)
            if (s != 1 && s != -1) throw std::invalid_argument("gauge values must be +1 or -1");
    }

    static GaugeVector identity(std::size_t n) { return GaugeVector(std::vector<std::int8_t>(n, 1)); }

    static GaugeVector random(std::size_t n, std::uint64_t seed, std::uint32_t index) {
        CounterRng rng(seed, StreamTag::gauge, index);
        std::vector<std::int8_t> t(n);
        for (auto& s : t) s = static_cast<std::int8_t>(rng.spin());
        return GaugeVector(std::move(t));
    }

    std::size_t size() const { return t_.size(); }
    std::int8_t operator[](std::size_t i) const { return t_[i]; }

    /// S'_i = S_i t_i
    SpinConfig apply(const SpinConfig& s) const {
        if (s.size() != t_.size()) throw std::invalid_argument("gauge and configuration sizes differ");
        SpinConfig out = s;
        for (std::size_t i = 0; i < t_.size(); ++i)
            if (t_[i] < 0) out.flip(i);
        return out;
    }

    friend bool operator==(const GaugeVector&, const GaugeVector&) = default;

private:
    std::vector<std::int8_t> t_;
};

}  // namespace spinglass
