#pragma once

#include <compare>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "instance.hpp"
#include "spins.hpp"

namespace spinglass {

/// Energy as numerator over the instance denominator. For exact instances
/// comparisons are exact; for real instances the denominator is 1.
template <class T>
struct Energy {
    T num{};
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Energy& a, const Energy& b) {
        if (a.den == b.den) return a.num == b.num;
        return a.num * b.den == b.num * a.den;
    }
    friend auto operator<=>(const Energy& a, const Energy& b) {
        if (a.den == b.den) return a.num <=> b.num;
        return (a.num * b.den) <=> (b.num * a.den);
    }
    Energy operator+(const Energy& o) const {
        same_den(o);
        return {num + o.num, den};
    }
    Energy operator-(const Energy& o) const {
        same_den(o);
        return {num - o.num, den};
    }

private:
    void same_den(const Energy& o) const {
        if (den != o.den) throw std::invalid_argument("energies with different denominators");
    }
};

using EnergyValue = Energy<std::int64_t>;

inline std::string to_string(const EnergyValue& e) {
    return e.den == 1 ? std::to_string(e.num) : std::to_string(e.num) + "/" + std::to_string(e.den);
}

inline std::ostream& operator<<(std::ostream& os, const EnergyValue& e) { return os << to_string(e); }

namespace detail {

template <class T>
void require_match(const BasicInstance<T>& inst, const SpinConfig& s) {
    if (s.size() != inst.size())
        throw std::invalid_argument("configuration has " + std::to_string(s.size()) + " spins, instance has " +
                                    std::to_string(inst.size()));
}

}  // namespace detail

/// Numerator of H = -sum_{edges} J_ij S_i S_j - sum_i h_i S_i.
template <class T>
T energy_numerator(const BasicInstance<T>& inst, const SpinConfig& s) {
    detail::require_match(inst, s);
    const auto& edges = inst.graph().edges();
    const auto* sp = s.data();
    T e{};
    for (std::size_t k = 0; k < edges.size(); ++k) e -= inst.coupler(k) * T(sp[edges[k].u] * sp[edges[k].v]);
    for (std::size_t i = 0; i < s.size(); ++i) e -= inst.field(i) * T(sp[i]);
    return e;
}

template <class T>
Energy<T> energy(const BasicInstance<T>& inst, const SpinConfig& s) {
    return {energy_numerator(inst, s), inst.denominator()};
}

/// sum_j J_ij S_j + h_i, i.e. minus the local field F_i.
template <class T>
T coupling_sum(const BasicInstance<T>& inst, const SpinConfig& s, std::uint32_t v) {
    T sum = inst.field(v);
    for (const auto& nb : inst.graph().neighbors(v)) sum += inst.coupler(nb.edge) * T(s[nb.vertex]);
    return sum;
}

/// F_i = -sum_{j != i} J_ij S_j - h_i for every vertex.
template <class T>
std::vector<Energy<T>> local_fields(const BasicInstance<T>& inst, const SpinConfig& s) {
    detail::require_match(inst, s);
    std::vector<Energy<T>> out(s.size());
    for (std::uint32_t v = 0; v < s.size(); ++v) out[v] = {-coupling_sum(inst, s, v), inst.denominator()};
    return out;
}

/// energy(after flipping v) - energy(before), from v's incident terms only.
template <class T>
Energy<T> flip_delta(const BasicInstance<T>& inst, const SpinConfig& s, std::uint32_t v) {
    detail::require_match(inst, s);
    if (v >= inst.size()) throw std::out_of_range("vertex " + std::to_string(v) + " is not active");
    return {T(2 * s[v]) * coupling_sum(inst, s, v), inst.denominator()};
}

/// q = (1/N) sum_i S_i^a S_i^b held exactly as sum / N.
struct Overlap {
    std::int64_t sum = 0;
    std::int64_t n = 1;

    double value() const { return static_cast<double>(sum) / static_cast<double>(n); }
    friend bool operator==(const Overlap& a, const Overlap& b) { return a.sum * b.n == b.sum * a.n; }
};

inline Overlap overlap(const SpinConfig& a, const SpinConfig& b) {
    if (a.size() != b.size()) throw std::invalid_argument("overlap of configurations with different sizes");
    if (a.size() == 0) throw std::invalid_argument("overlap of empty configurations");
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return {sum, static_cast<std::int64_t>(a.size())};
}

}  // namespace spinglass
