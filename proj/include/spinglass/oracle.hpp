#pragma once

// Exact ground states for small instances.
//
// exhaustive_gs enumerates configurations in Gray-code order (any graph, up to
// 28 active spins). column_dp_gs is a transfer-matrix dynamic program over the
// cell columns (or rows, whichever is narrower) of a Chimera instance: the state
// is the set of spins that couple to the next column, so the cost grows as
// 2^(lanes * shore) rather than 2^N.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "energetics.hpp"
#include "instance.hpp"
#include "spins.hpp"

namespace spinglass {

class SizeCapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t exhaustive_max_spins = 28;
inline constexpr std::size_t column_dp_max_interface = 20;

template <class T>
struct OracleResult {
    Energy<T> e0;
    std::vector<SpinConfig> ground_configs;  // canonical (first spin +1), sorted, unique
    std::uint64_t raw_count = 0;             // minimizers before folding S ~ -S
    bool truncated = false;                  // more minimizers than were stored
};

namespace detail {

template <class T>
bool energy_less(T a, T b) {
    if constexpr (std::is_floating_point_v<T>) {
        return a < b - 1e-9 * (1.0 + std::abs(b));
    } else {
        return a < b;
    }
}

template <class T>
bool energy_equal(T a, T b) {
    return !energy_less(a, b) && !energy_less(b, a);
}

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t s = a + b;
    return s < a ? std::numeric_limits<std::uint64_t>::max() : s;
}

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

}  // namespace detail

/// All minimizers by enumeration. With h = 0 and `use_symmetry`, spin 0 is
/// pinned to +1 and only 2^(N-1) configurations are visited.
template <class T>
OracleResult<T> exhaustive_gs(const BasicInstance<T>& inst, bool use_symmetry = true,
                              std::size_t max_stored = std::size_t{1} << 16) {
    const std::size_t n = inst.size();
    if (n > exhaustive_max_spins)
        throw SizeCapError("exhaustive enumeration is capped at " + std::to_string(exhaustive_max_spins) +
                           " spins, instance has " + std::to_string(n));
    OracleResult<T> out;
    out.e0.den = inst.denominator();
    if (n == 0) {
        out.ground_configs.emplace_back();
        out.raw_count = 1;
        return out;
    }
    const bool symmetric = use_symmetry && !inst.has_fields();
    const std::size_t first_free = symmetric ? 1 : 0;
    const std::size_t free_bits = n - first_free;

    SpinConfig s(n, 1);
    T e = energy_numerator(inst, s);
    T best = e;
    std::vector<SpinConfig> minimizers{s};
    std::uint64_t hits = 1;
    const std::uint64_t steps = std::uint64_t{1} << free_bits;
    for (std::uint64_t t = 1; t < steps; ++t) {
        const auto v = static_cast<std::uint32_t>(first_free + std::countr_zero(t));
        e += T(2 * s[v]) * coupling_sum(inst, s, v);
        s.flip(v);
        if (detail::energy_less(e, best)) {
            best = e;
            minimizers.clear();
            minimizers.push_back(s);
            hits = 1;
        } else if (detail::energy_equal(e, best)) {
            if (minimizers.size() < max_stored) minimizers.push_back(s);
            ++hits;
        }
    }

    std::set<SpinConfig> canonical;
    for (const auto& m : minimizers) canonical.insert(m.canonical());
    out.e0.num = best;
    out.ground_configs.assign(canonical.begin(), canonical.end());
    out.raw_count = symmetric ? 2 * hits : hits;
    out.truncated = hits > minimizers.size();
    return out;
}

template <class T>
struct DpResult {
    Energy<T> e0;
    SpinConfig witness;
    std::uint64_t raw_count = 0;  // saturates at 2^64 - 1
};

namespace detail {

template <class T>
struct DpCell {
    T cost;
    std::uint64_t count;
};

template <class T>
void relax(DpCell<T>& into, T cost, std::uint64_t count) {
    if (energy_less(cost, into.cost)) {
        into = {cost, count};
    } else if (energy_equal(cost, into.cost)) {
        into.count = sat_add(into.count, count);
    }
}

inline int spin_of(std::uint64_t bits, unsigned pos) { return (bits >> pos) & 1u ? 1 : -1; }

/// Chimera instance viewed as `steps` slices of `lanes` cells each. Carrier
/// spins couple a cell to the same lane in the next slice; rung spins couple a
/// cell to the neighbouring lanes in its own slice.
template <class T>
class ColumnTransfer {
public:
    explicit ColumnTransfer(const BasicInstance<T>& inst) : inst_(inst) {
        const auto* g = inst.chimera();
        if (!g) throw std::invalid_argument("column DP requires a chimera instance");
        chimera_ = g;
        k_ = g->shore();
        transposed_ = g->rows() > g->cols();
        lanes_ = transposed_ ? g->cols() : g->rows();
        steps_ = transposed_ ? g->rows() : g->cols();
        bits_ = lanes_ * k_;
        if (bits_ > column_dp_max_interface || k_ > 10)
            throw SizeCapError("column DP interface of " + std::to_string(bits_) + " spins exceeds the cap of " +
                               std::to_string(column_dp_max_interface));
    }

    DpResult<T> solve() {
        const std::size_t states = std::size_t{1} << bits_;
        std::vector<std::vector<T>> history;
        std::vector<DpCell<T>> dp;
        for (std::uint32_t b = 0; b < steps_; ++b) {
            build_tables(b);
            std::vector<DpCell<T>> vcost(states);
            slice_costs(vcost);
            if (b == 0) {
                dp = std::move(vcost);
            } else {
                carry(dp, b);
                for (std::size_t x = 0; x < states; ++x)
                    dp[x] = {dp[x].cost + vcost[x].cost, sat_mul(dp[x].count, vcost[x].count)};
            }
            std::vector<T> costs(states);
            for (std::size_t x = 0; x < states; ++x) costs[x] = dp[x].cost;
            history.push_back(std::move(costs));
        }

        DpResult<T> out;
        out.e0.den = inst_.denominator();
        DpCell<T> best{dp[0].cost, 0};
        for (const auto& c : dp) relax(best, c.cost, c.count);
        out.e0.num = best.cost;
        const auto broken = chimera_->total_sites() - inst_.size();
        out.raw_count = broken >= 64 ? 0 : best.count >> broken;
        out.witness = backtrack(history);
        return out;
    }

private:
    ChimeraCoord cell_coord(std::uint32_t lane, std::uint32_t step, bool carrier, std::uint32_t i) const {
        // Untransposed: slices are columns, carriers are side 1 (horizontal).
        const std::uint32_t row = transposed_ ? step : lane;
        const std::uint32_t col = transposed_ ? lane : step;
        const std::uint32_t side = (carrier != transposed_) ? 1u : 0u;
        return {row, col, side, i};
    }

    std::optional<std::uint32_t> dense(std::uint32_t lane, std::uint32_t step, bool carrier, std::uint32_t i) const {
        return chimera_->dense_index(chimera_->id_of(cell_coord(lane, step, carrier, i)));
    }

    T coupling(std::optional<std::uint32_t> a, std::optional<std::uint32_t> b) const {
        if (!a || !b) return T{};
        const auto e = inst_.graph().edge_index(*a, *b);
        return e ? inst_.coupler(*e) : T{};
    }

    T field(std::optional<std::uint32_t> a) const { return a ? inst_.field(*a) : T{}; }

    void build_tables(std::uint32_t b) {
        const std::size_t w = std::size_t{1} << k_;
        cell_.assign(lanes_, std::vector<T>(w * w));
        rung_.assign(lanes_ > 0 ? lanes_ - 1 : 0, std::vector<T>(w * w));
        for (std::uint32_t a = 0; a < lanes_; ++a) {
            std::vector<T> intra(k_ * k_);
            for (std::uint32_t i = 0; i < k_; ++i)
                for (std::uint32_t j = 0; j < k_; ++j)
                    intra[i * k_ + j] = coupling(dense(a, b, false, i), dense(a, b, true, j));
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t y = 0; y < w; ++y) {
                    T c{};
                    for (std::uint32_t i = 0; i < k_; ++i) {
                        c -= field(dense(a, b, true, i)) * T(spin_of(x, i));
                        c -= field(dense(a, b, false, i)) * T(spin_of(y, i));
                        for (std::uint32_t j = 0; j < k_; ++j)
                            c -= intra[i * k_ + j] * T(spin_of(y, i) * spin_of(x, j));
                    }
                    cell_[a][x * w + y] = c;
                }
            if (a + 1 < lanes_) {
                std::vector<T> jr(k_);
                for (std::uint32_t i = 0; i < k_; ++i) jr[i] = coupling(dense(a, b, false, i), dense(a + 1, b, false, i));
                for (std::size_t y0 = 0; y0 < w; ++y0)
                    for (std::size_t y1 = 0; y1 < w; ++y1) {
                        T c{};
                        for (std::uint32_t i = 0; i < k_; ++i) c -= jr[i] * T(spin_of(y0, i) * spin_of(y1, i));
                        rung_[a][y0 * w + y1] = c;
                    }
            }
        }
        carrier_w_.assign(bits_, T{});
        if (b > 0)
            for (std::uint32_t a = 0; a < lanes_; ++a)
                for (std::uint32_t i = 0; i < k_; ++i)
                    carrier_w_[a * k_ + i] = -coupling(dense(a, b - 1, true, i), dense(a, b, true, i));
    }

    /// Minimum over rung spins of one slice for every carrier pattern.
    void slice_costs(std::vector<DpCell<T>>& out) const {
        const std::size_t w = std::size_t{1} << k_;
        std::vector<DpCell<T>> incoming(w, DpCell<T>{T{}, 1});
        descend(0, 0, incoming, out);
    }

    // `incoming[y]`: best cost of lanes < a with rung pattern y in lane a, already
    // including the rung coupling into lane a (identity for a = 0).
    void descend(std::uint32_t a, std::size_t prefix, const std::vector<DpCell<T>>& incoming,
                 std::vector<DpCell<T>>& out) const {
        const std::size_t w = std::size_t{1} << k_;
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t index = prefix | (x << (a * k_));
            std::vector<DpCell<T>> here(w);
            for (std::size_t y = 0; y < w; ++y) here[y] = {incoming[y].cost + cell_[a][x * w + y], incoming[y].count};
            if (a + 1 == lanes_) {
                DpCell<T> best{here[0].cost, 0};
                for (const auto& c : here) relax(best, c.cost, c.count);
                out[index] = best;
                continue;
            }
            std::vector<DpCell<T>> next(w);
            for (std::size_t y1 = 0; y1 < w; ++y1) {
                DpCell<T> best{here[0].cost + rung_[a][y1], 0};
                for (std::size_t y0 = 0; y0 < w; ++y0)
                    relax(best, here[y0].cost + rung_[a][y0 * w + y1], here[y0].count);
                next[y1] = best;
            }
            descend(a + 1, index, next, out);
        }
    }

    /// dp[x] <- min over previous x' of dp[x'] + sum_p w_p s(x'_p) s(x_p), one bit at a time.
    void carry(std::vector<DpCell<T>>& dp, std::uint32_t) const {
        for (unsigned p = 0; p < bits_; ++p) {
            const T wp = carrier_w_[p];
            const std::size_t stride = std::size_t{1} << p;
            for (std::size_t base = 0; base < dp.size(); base += 2 * stride)
                for (std::size_t o = base; o < base + stride; ++o) {
                    const auto lo = dp[o], hi = dp[o + stride];
                    DpCell<T> new_lo{lo.cost + wp, lo.count};
                    relax(new_lo, hi.cost - wp, hi.count);
                    DpCell<T> new_hi{lo.cost - wp, lo.count};
                    relax(new_hi, hi.cost + wp, hi.count);
                    dp[o] = new_lo;
                    dp[o + stride] = new_hi;
                }
        }
    }

    T carrier_cost(std::size_t prev, std::size_t cur) const {
        T c{};
        for (unsigned p = 0; p < bits_; ++p) c += carrier_w_[p] * T(spin_of(prev, p) * spin_of(cur, p));
        return c;
    }

    /// Rung patterns of one slice minimizing its cost for a fixed carrier pattern.
    std::vector<std::size_t> best_rungs(std::size_t xs) const {
        const std::size_t w = std::size_t{1} << k_;
        const std::size_t mask = w - 1;
        std::vector<std::vector<T>> g(lanes_, std::vector<T>(w));
        for (std::uint32_t a = 0; a < lanes_; ++a) {
            const std::size_t x = (xs >> (a * k_)) & mask;
            for (std::size_t y = 0; y < w; ++y) {
                T c = cell_[a][x * w + y];
                if (a > 0) {
                    T m = g[a - 1][0] + rung_[a - 1][y];
                    for (std::size_t y0 = 1; y0 < w; ++y0) m = std::min(m, g[a - 1][y0] + rung_[a - 1][y0 * w + y]);
                    c += m;
                }
                g[a][y] = c;
            }
        }
        std::vector<std::size_t> ys(lanes_);
        ys[lanes_ - 1] = static_cast<std::size_t>(std::min_element(g[lanes_ - 1].begin(), g[lanes_ - 1].end()) -
                                                  g[lanes_ - 1].begin());
        for (std::uint32_t a = lanes_ - 1; a > 0; --a) {
            std::size_t arg = 0;
            T m = g[a - 1][0] + rung_[a - 1][ys[a]];
            for (std::size_t y0 = 1; y0 < w; ++y0) {
                const T c = g[a - 1][y0] + rung_[a - 1][y0 * w + ys[a]];
                if (energy_less(c, m)) {
                    m = c;
                    arg = y0;
                }
            }
            ys[a - 1] = arg;
        }
        return ys;
    }

    SpinConfig backtrack(const std::vector<std::vector<T>>& history) {
        SpinConfig s(inst_.size(), 1);
        const auto& last = history.back();
        std::size_t x = static_cast<std::size_t>(std::min_element(last.begin(), last.end(), [](T a, T b) {
                                                     return energy_less(a, b);
                                                 }) -
                                                 last.begin());
        for (std::uint32_t b = steps_; b-- > 0;) {
            build_tables(b);
            const auto ys = best_rungs(x);
            const std::size_t mask = (std::size_t{1} << k_) - 1;
            for (std::uint32_t a = 0; a < lanes_; ++a)
                for (std::uint32_t i = 0; i < k_; ++i) {
                    if (auto v = dense(a, b, true, i)) s.set(*v, static_cast<std::int8_t>(spin_of(x, a * k_ + i)));
                    if (auto v = dense(a, b, false, i))
                        s.set(*v, static_cast<std::int8_t>(spin_of(ys[a] & mask, i)));
                }
            if (b == 0) break;
            const auto& prev = history[b - 1];
            std::size_t arg = 0;
            T m = prev[0] + carrier_cost(0, x);
            for (std::size_t xp = 1; xp < prev.size(); ++xp) {
                const T c = prev[xp] + carrier_cost(xp, x);
                if (energy_less(c, m)) {
                    m = c;
                    arg = xp;
                }
            }
            x = arg;
        }
        return s;
    }

    const BasicInstance<T>& inst_;
    const ChimeraGraph* chimera_ = nullptr;
    std::uint32_t k_ = 0, lanes_ = 0, steps_ = 0, bits_ = 0;
    bool transposed_ = false;
    std::vector<std::vector<T>> cell_;  // [lane][carrier * 2^k + rung]
    std::vector<std::vector<T>> rung_;  // [lane][rung_a * 2^k + rung_a+1]
    std::vector<T> carrier_w_;          // [lane * k + i], coupling to previous slice
};

}  // namespace detail

/// Exact ground-state energy, one witness, and the number of minimizing
/// configurations, for Chimera instances whose narrower dimension times the
/// shore size is at most 20.
template <class T>
DpResult<T> column_dp_gs(const BasicInstance<T>& inst) {
    return detail::ColumnTransfer<T>(inst).solve();
}

template <class T>
bool column_dp_applicable(const BasicInstance<T>& inst) {
    const auto* g = inst.chimera();
    return g && std::min(g->rows(), g->cols()) * g->shore() <= column_dp_max_interface && g->shore() <= 10;
}

/// Ground-state energy by whichever exact method fits; throws SizeCapError otherwise.
template <class T>
DpResult<T> exact_ground_state(const BasicInstance<T>& inst) {
    if (column_dp_applicable(inst)) return column_dp_gs(inst);
    if (inst.size() <= exhaustive_max_spins) {
        auto r = exhaustive_gs(inst);
        DpResult<T> out{r.e0, r.ground_configs.front(), r.raw_count};
        if (inst.has_fields()) {
            // canonical form may not be the minimizer itself when h != 0
            if (!(energy(inst, out.witness) == r.e0)) out.witness = out.witness.flipped();
        }
        return out;
    }
    throw SizeCapError("no exact oracle applies to an instance with " + std::to_string(inst.size()) + " spins");
}

}  // namespace spinglass
