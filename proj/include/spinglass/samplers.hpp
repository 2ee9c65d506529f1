#pragma once

// Simulated annealing, parallel tempering and isoenergetic cluster moves.
//
// Inverse temperatures passed to a chain are in the instance's native energy
// unit: numerator units for exact instances, physical units for real ones.
// Annealing schedules are quoted in those units directly; tempering ladders
// are physical temperatures and get divided by the denominator internally.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "energetics.hpp"
#include "instance.hpp"
#include "oracle.hpp"
#include "rng.hpp"
#include "spins.hpp"

namespace spinglass {

/// x_initial * r^i for i = 0..count-1 with x_{count-1} = x_final.
inline std::vector<double> geometric_ladder(double x_initial, double x_final, std::size_t count) {
    if (!(x_initial > 0.0) || !(x_final > 0.0)) throw InputError("geometric ladder needs positive endpoints");
    if (count == 0) throw InputError("geometric ladder needs at least one entry");
    if (count == 1) {
        if (x_initial != x_final) throw InputError("a one-entry ladder needs equal endpoints");
        return {x_initial};
    }
    std::vector<double> out(count);
    const double log_ratio = std::log(x_final / x_initial) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = x_initial * std::exp(log_ratio * static_cast<double>(i));
    out.front() = x_initial;
    out.back() = x_final;
    return out;
}

struct AnnealSchedule {
    double beta_initial = 0.1;
    double beta_final = 3.0;
    std::uint32_t sweeps = 900;

    void validate() const {
        if (!(beta_initial > 0.0) || !(beta_final > 0.0)) throw InputError("annealing betas must be positive");
        if (beta_final < beta_initial) throw InputError("beta_final must be >= beta_initial");
        if (sweeps < 1) throw InputError("annealing needs at least one sweep");
    }

    /// One beta per sweep.
    std::vector<double> betas() const {
        validate();
        if (sweeps == 1) return {beta_final};
        return geometric_ladder(beta_initial, beta_final, sweeps);
    }
};

/// Per-class beta range in numerator units. U1, U4 and S28 are the published
/// values; the other classes reuse beta * max|J| = 0.1 .. 30, the common
/// pattern of the published three.
inline AnnealSchedule default_schedule(DisorderClass cls, std::uint32_t sweeps = 900) {
    switch (cls) {
        case DisorderClass::U1: return {0.1, 3.0, sweeps};
        case DisorderClass::U4: return {0.25, 7.5, sweeps};
        case DisorderClass::S28: return {0.0357, 1.071, sweeps};
        case DisorderClass::custom: throw InputError("class 'custom' needs an explicit beta range");
        default: break;
    }
    const auto& mags = class_spec(cls).magnitudes;
    const double top = static_cast<double>(*std::max_element(mags.begin(), mags.end()));
    return {1.0 / top, 30.0 / top, sweeps};
}

namespace detail {

/// Flattened adjacency with coupler values, shared by all chains on an instance.
template <class T>
struct Couplings {
    explicit Couplings(const BasicInstance<T>& inst) : order(inst.graph().sweep_order()) {
        const auto& g = inst.graph();
        const auto n = g.num_vertices();
        offsets.assign(n + 1, 0);
        fields.assign(inst.fields().begin(), inst.fields().end());
        for (std::uint32_t v = 0; v < n; ++v) {
            T reach = fields[v] < T{} ? -fields[v] : fields[v];
            for (const auto& nb : g.neighbors(v)) {
                neighbor.push_back(nb.vertex);
                coupler.push_back(inst.coupler(nb.edge));
                reach += coupler.back() < T{} ? -coupler.back() : coupler.back();
            }
            offsets[v + 1] = neighbor.size();
            max_delta = std::max(max_delta, T(2) * reach);
        }
    }

    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> neighbor;
    std::vector<T> coupler;
    std::vector<T> fields;
    std::vector<std::uint32_t> order;  // side A then side B
    T max_delta{};
};

/// Metropolis acceptance for one beta. Integer energy changes use a table of
/// 32-bit thresholds; real ones call exp.
template <class T>
class Acceptance {
public:
    static constexpr std::int64_t table_limit = 1 << 16;

    Acceptance() = default;
    Acceptance(double beta, T max_delta) : beta_(beta) {
        if constexpr (std::is_integral_v<T>) {
            if (max_delta <= table_limit) {
                thresholds_.resize(static_cast<std::size_t>(max_delta) + 1);
                for (std::size_t d = 0; d < thresholds_.size(); ++d) {
                    const double p = std::exp(-beta * static_cast<double>(d));
                    thresholds_[d] = p >= 1.0 ? std::numeric_limits<std::uint64_t>::max() >> 31
                                              : static_cast<std::uint64_t>(std::ldexp(p, 32));
                }
            }
        }
    }

    double beta() const { return beta_; }

    bool operator()(T delta, CounterRng& rng) const {
        if (delta <= T{}) return true;
        if constexpr (std::is_integral_v<T>) {
            if (!thresholds_.empty()) return std::uint64_t{rng()} < thresholds_[static_cast<std::size_t>(delta)];
        }
        return rng.uniform() < std::exp(-beta_ * static_cast<double>(delta));
    }

private:
    double beta_ = 0.0;
    std::vector<std::uint64_t> thresholds_;  // p * 2^32, so p = 1 always accepts
};

}  // namespace detail

/// A spin configuration with cached coupling sums and exact running energy.
template <class T>
class MetropolisChain {
public:
    MetropolisChain(const detail::Couplings<T>& c, SpinConfig s) : c_(&c), spins_(std::move(s)) {
        const auto n = spins_.size();
        sums_.resize(n);
        T twice_pair{}, field{};
        for (std::uint32_t v = 0; v < n; ++v) {
            T sum = c.fields[v];
            T pair{};
            for (auto k = c.offsets[v]; k < c.offsets[v + 1]; ++k) pair += c.coupler[k] * T(spins_[c.neighbor[k]]);
            sums_[v] = sum + pair;
            twice_pair += pair * T(spins_[v]);
            field += c.fields[v] * T(spins_[v]);
        }
        energy_ = -twice_pair / T(2) - field;
    }

    const SpinConfig& spins() const { return spins_; }
    T energy() const { return energy_; }

    T flip_delta(std::uint32_t v) const { return T(2 * spins_[v]) * sums_[v]; }

    void flip(std::uint32_t v) {
        energy_ += flip_delta(v);
        spins_.flip(v);
        const T s2 = T(2 * spins_[v]);
        const auto& c = *c_;
        for (auto k = c.offsets[v]; k < c.offsets[v + 1]; ++k) sums_[c.neighbor[k]] += s2 * c.coupler[k];
    }

    /// One Metropolis attempt per spin, side A then side B.
    void sweep(const detail::Acceptance<T>& accept, CounterRng& rng) {
        for (auto v : c_->order)
            if (accept(flip_delta(v), rng)) flip(v);
    }

private:
    const detail::Couplings<T>* c_;
    SpinConfig spins_;
    std::vector<T> sums_;
    T energy_{};
};

template <class T>
struct SaResult {
    SpinConfig config;
    Energy<T> energy;
};

/// Anneal from a random start; `stream` selects the repetition substream.
template <class T>
SaResult<T> sa_run(const BasicInstance<T>& inst, const AnnealSchedule& schedule, std::uint64_t seed,
                   std::uint64_t stream = 0) {
    const auto betas = schedule.betas();
    const detail::Couplings<T> c(inst);
    CounterRng rng(seed, StreamTag::anneal, static_cast<std::uint32_t>(stream),
                   static_cast<std::uint32_t>(stream >> 32));
    MetropolisChain<T> chain(c, SpinConfig::random(inst.size(), rng));
    for (double beta : betas) chain.sweep(detail::Acceptance<T>(beta, c.max_delta), rng);
    return {chain.spins(), {chain.energy(), inst.denominator()}};
}

/// Final energies of `repetitions` independent anneals, in repetition order.
template <class T>
std::vector<Energy<T>> sa_batch(const BasicInstance<T>& inst, const AnnealSchedule& schedule,
                                std::uint64_t repetitions, std::uint64_t seed) {
    const auto betas = schedule.betas();
    const detail::Couplings<T> c(inst);
    std::vector<detail::Acceptance<T>> tables;
    tables.reserve(betas.size());
    for (double beta : betas) tables.emplace_back(beta, c.max_delta);
    std::vector<Energy<T>> out;
    out.reserve(repetitions);
    for (std::uint64_t r = 0; r < repetitions; ++r) {
        CounterRng rng(seed, StreamTag::anneal, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32));
        MetropolisChain<T> chain(c, SpinConfig::random(inst.size(), rng));
        for (const auto& t : tables) chain.sweep(t, rng);
        out.push_back({chain.energy(), inst.denominator()});
    }
    return out;
}

/// min(1, exp((beta_a - beta_b) (E_a - E_b))) for swapping the states at two betas.
inline double exchange_probability(double beta_a, double beta_b, double e_a, double e_b) {
    const double x = (beta_a - beta_b) * (e_a - e_b);
    return x >= 0.0 ? 1.0 : std::exp(x);
}

/// Connected cluster of sites where the replicas disagree, grown from a random
/// such site. Empty when the replicas are identical.
inline std::vector<std::uint32_t> icm_cluster(const SpinConfig& a, const SpinConfig& b, const Graph& g,
                                              CounterRng& rng) {
    std::vector<std::uint32_t> disagree;
    for (std::uint32_t v = 0; v < a.size(); ++v)
        if (a[v] != b[v]) disagree.push_back(v);
    if (disagree.empty()) return {};
    const auto seed_site = disagree[rng.below(disagree.size())];
    std::vector<char> seen(a.size(), 0);
    std::vector<std::uint32_t> cluster{seed_site};
    seen[seed_site] = 1;
    for (std::size_t head = 0; head < cluster.size(); ++head)
        for (const auto& nb : g.neighbors(cluster[head]))
            if (!seen[nb.vertex] && a[nb.vertex] != b[nb.vertex]) {
                seen[nb.vertex] = 1;
                cluster.push_back(nb.vertex);
            }
    return cluster;
}

/// Houdayer move: flip one disagreement cluster in both replicas.
inline std::pair<SpinConfig, SpinConfig> icm_move(const SpinConfig& a, const SpinConfig& b, const Graph& g,
                                                  std::uint64_t seed, std::uint64_t stream = 0) {
    if (a.size() != b.size() || a.size() != g.num_vertices())
        throw std::invalid_argument("replicas and graph sizes differ");
    CounterRng rng(seed, StreamTag::cluster, static_cast<std::uint32_t>(stream),
                   static_cast<std::uint32_t>(stream >> 32));
    auto out = std::make_pair(a, b);
    for (auto v : icm_cluster(a, b, g, rng)) {
        out.first.flip(v);
        out.second.flip(v);
    }
    return out;
}

struct PtParams {
    std::vector<double> temperatures;  // physical units, strictly monotone
    std::uint64_t sweeps_thermalize = 1 << 12;
    std::uint64_t sweeps_measure = 1 << 12;
    std::uint32_t exchange_interval = 1;
    std::uint32_t measure_interval = 1;
    bool icm_enabled = true;
    double icm_fraction = 0.5;  // coldest share of the ladder that gets ICM

    void validate() const {
        if (temperatures.size() < 2) throw InputError("tempering needs at least two temperatures");
        const bool up = temperatures[1] > temperatures[0];
        for (std::size_t i = 0; i < temperatures.size(); ++i) {
            if (!(temperatures[i] > 0.0)) throw InputError("temperatures must be positive");
            if (i > 0 && (up ? temperatures[i] <= temperatures[i - 1] : temperatures[i] >= temperatures[i - 1]))
                throw InputError("temperatures must be distinct and sorted");
        }
        if (exchange_interval < 1 || measure_interval < 1) throw InputError("intervals must be >= 1");
        if (!(icm_fraction >= 0.0 && icm_fraction <= 1.0)) throw InputError("icm_fraction must lie in [0, 1]");
    }
};

/// Geometric ladder from t_min to t_max with the given sweep counts.
inline PtParams make_pt_params(std::size_t count = 30, double t_min = 0.212, double t_max = 2.0,
                               std::uint64_t sweeps_thermalize = 1 << 12, std::uint64_t sweeps_measure = 1 << 12) {
    PtParams p;
    p.temperatures = geometric_ladder(t_min, t_max, count);
    p.sweeps_thermalize = sweeps_thermalize;
    p.sweeps_measure = sweeps_measure;
    p.validate();
    return p;
}

/// Full-length run: 2^23 thermalization and 2^23 measurement sweeps.
inline PtParams full_scale_pt_params() { return make_pt_params(30, 0.212, 2.0, 1 << 23, 1 << 23); }

template <class T>
struct PtOutput {
    Energy<T> min_energy;
    std::vector<SpinConfig> min_configs;               // canonical, sorted
    std::vector<Overlap> overlap_samples;              // two sets at the coldest rung
    std::map<SpinConfig, std::uint64_t> hit_histogram;  // coldest-rung visits at min_energy
    std::uint64_t sweeps = 0;
};

/// Two replica sets over one temperature ladder. Sweeps can be added in blocks,
/// so callers may keep measuring until a stopping rule is met.
template <class T>
class ParallelTempering {
public:
    ParallelTempering(const BasicInstance<T>& inst, PtParams params, std::uint64_t seed)
        : inst_(inst), params_(std::move(params)), seed_(seed), couplings_(inst) {
        params_.validate();
        auto temps = params_.temperatures;
        std::sort(temps.begin(), temps.end());
        rungs_ = temps.size();
        const double den = static_cast<double>(inst.denominator());
        for (double t : temps) accept_.emplace_back(1.0 / (t * den), couplings_.max_delta);
        icm_rungs_ = params_.icm_enabled ? static_cast<std::size_t>(std::ceil(params_.icm_fraction * rungs_)) : 0;
        for (std::uint32_t set = 0; set < 2; ++set)
            for (std::uint32_t r = 0; r < rungs_; ++r) {
                CounterRng rng(seed_, StreamTag::config, set, r);
                chains_[set].emplace_back(couplings_, SpinConfig::random(inst.size(), rng));
            }
        min_energy_ = chains_[0][0].energy();
        track_minimum();
    }

    void thermalize() { run(params_.sweeps_thermalize, false); }
    void measure() { run(params_.sweeps_measure, true); }
    void measure(std::uint64_t sweeps) { run(sweeps, true); }

    void run(std::uint64_t sweeps, bool measuring) {
        for (std::uint64_t i = 0; i < sweeps; ++i) step(measuring);
    }

    std::uint64_t sweeps() const { return sweep_; }
    T min_energy() const { return min_energy_; }
    std::size_t distinct_minimizers() const { return hits_.size(); }

    /// Fewest coldest-rung hits over every minimizer seen so far.
    std::uint64_t min_hits() const {
        if (hits_.empty()) return 0;
        std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
        for (const auto& [k, h] : hits_) m = std::min(m, h);
        return m;
    }

    PtOutput<T> output() const {
        PtOutput<T> out;
        out.min_energy = {min_energy_, inst_.denominator()};
        for (const auto& [k, h] : hits_) {
            auto s = unpack(k, inst_.size());
            out.min_configs.push_back(s);
            out.hit_histogram.emplace(std::move(s), h);
        }
        std::sort(out.min_configs.begin(), out.min_configs.end());
        out.overlap_samples = overlaps_;
        out.sweeps = sweep_;
        return out;
    }

    const MetropolisChain<T>& chain(std::uint32_t set, std::uint32_t rung) const { return chains_[set][rung]; }

private:
    void step(bool measuring) {
        const auto lo = static_cast<std::uint32_t>(sweep_), hi = static_cast<std::uint32_t>(sweep_ >> 32);
        for (std::uint32_t set = 0; set < 2; ++set)
            for (std::uint32_t r = 0; r < rungs_; ++r) {
                CounterRng rng(seed_, StreamTag::tempering, lo, hi, set * static_cast<std::uint32_t>(rungs_) + r);
                chains_[set][r].sweep(accept_[r], rng);
            }
        if (sweep_ % params_.exchange_interval == 0)
            for (std::uint32_t set = 0; set < 2; ++set) {
                CounterRng rng(seed_, StreamTag::tempering, lo, hi, 0x00800000u | set);
                for (std::size_t r = 0; r + 1 < rungs_; ++r) {
                    auto& a = chains_[set][r];
                    auto& b = chains_[set][r + 1];
                    const double p = exchange_probability(accept_[r].beta(), accept_[r + 1].beta(),
                                                          static_cast<double>(a.energy()),
                                                          static_cast<double>(b.energy()));
                    if (p >= 1.0 || rng.uniform() < p) std::swap(a, b);
                }
            }
        if (icm_rungs_ > 0) {
            CounterRng rng(seed_, StreamTag::cluster, lo, hi);
            for (std::size_t r = 0; r < icm_rungs_; ++r) {
                auto& a = chains_[0][r];
                auto& b = chains_[1][r];
                for (auto v : icm_cluster(a.spins(), b.spins(), inst_.graph(), rng)) {
                    a.flip(v);
                    b.flip(v);
                }
            }
        }
        track_minimum();
        if (measuring) {
            if (measured_ % params_.measure_interval == 0)
                overlaps_.push_back(overlap(chains_[0][0].spins(), chains_[1][0].spins()));
            for (std::uint32_t set = 0; set < 2; ++set) {
                const auto& c = chains_[set][0];
                if (detail::energy_equal(c.energy(), min_energy_)) ++hits_[pack(c.spins().canonical())];
            }
            ++measured_;
        }
        ++sweep_;
    }

    void track_minimum() {
        for (std::uint32_t set = 0; set < 2; ++set)
            for (const auto& c : chains_[set]) {
                if (detail::energy_less(c.energy(), min_energy_)) {
                    min_energy_ = c.energy();
                    hits_.clear();
                }
                if (detail::energy_equal(c.energy(), min_energy_)) hits_.try_emplace(pack(c.spins().canonical()), 0);
            }
    }

    const BasicInstance<T>& inst_;
    PtParams params_;
    std::uint64_t seed_;
    detail::Couplings<T> couplings_;
    std::size_t rungs_ = 0, icm_rungs_ = 0;
    std::vector<detail::Acceptance<T>> accept_;  // ascending temperature
    std::vector<MetropolisChain<T>> chains_[2];
    T min_energy_{};
    std::map<PackedConfig, std::uint64_t> hits_;
    std::vector<Overlap> overlaps_;
    std::uint64_t sweep_ = 0, measured_ = 0;
};

/// Thermalize, then measure, with the configured sweep counts.
template <class T>
PtOutput<T> pt_run(const BasicInstance<T>& inst, const PtParams& params, std::uint64_t seed) {
    ParallelTempering<T> pt(inst, params, seed);
    pt.thermalize();
    pt.measure();
    return pt.output();
}

}  // namespace spinglass
