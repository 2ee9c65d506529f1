#pragma once

// Overlap histograms, barrier classification, degeneracy estimation and the
// success statistics used by benchmarks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "energetics.hpp"
#include "instance.hpp"
#include "oracle.hpp"
#include "samplers.hpp"

namespace spinglass {

struct HistogramBin {
    double center;
    double density;
};

/// Bins of width w centred on j*w for j = -M..M with M*w = 1, so q = 0 and
/// q = +-1 are bin centres. Densities integrate to one.
struct OverlapHistogram {
    double bin_width = 0.025;
    std::vector<HistogramBin> bins;
    std::uint64_t sample_count = 0;
    bool symmetrized = false;

    double integral() const {
        double s = 0.0;
        for (const auto& b : bins) s += b.density * bin_width;
        return s;
    }

    /// Density of the bin whose centre is closest to q.
    double density_at(double q) const {
        const auto m = static_cast<long long>(bins.size() / 2);
        const auto j = std::clamp(std::llround(q / bin_width), -m, m);
        return bins[static_cast<std::size_t>(j + m)].density;
    }
};

namespace detail {

inline long long half_bins(double bin_width) {
    if (!(bin_width > 0.0) || bin_width > 1.0) throw InputError("bin width must lie in (0, 1]");
    const auto m = std::llround(1.0 / bin_width);
    if (std::abs(static_cast<double>(m) * bin_width - 1.0) > 1e-9)
        throw InputError("bin width must divide 1 evenly");
    return m;
}

}  // namespace detail

inline OverlapHistogram build_overlap_histogram(std::span<const double> q, double bin_width = 0.025,
                                                bool symmetrize = false) {
    if (q.empty()) throw InputError("overlap histogram needs at least one sample");
    const auto m = detail::half_bins(bin_width);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(2 * m + 1), 0);
    for (double x : q) {
        if (!(x >= -1.0 - 1e-12 && x <= 1.0 + 1e-12)) throw InputError("overlap sample outside [-1, 1]");
        const auto j = std::clamp(std::llround(x / bin_width), -m, m);
        ++counts[static_cast<std::size_t>(j + m)];
        if (symmetrize) ++counts[static_cast<std::size_t>(m - j)];
    }
    const auto total = static_cast<double>(q.size()) * (symmetrize ? 2.0 : 1.0);
    OverlapHistogram h;
    h.bin_width = bin_width;
    h.sample_count = q.size();
    h.symmetrized = symmetrize;
    for (long long j = -m; j <= m; ++j)
        h.bins.push_back({static_cast<double>(j) * bin_width,
                          static_cast<double>(counts[static_cast<std::size_t>(j + m)]) / (total * bin_width)});
    return h;
}

inline OverlapHistogram build_overlap_histogram(std::span<const Overlap> q, double bin_width = 0.025,
                                                bool symmetrize = false) {
    std::vector<double> values;
    values.reserve(q.size());
    for (const auto& o : q) values.push_back(o.value());
    return build_overlap_histogram(values, bin_width, symmetrize);
}

/// Mean of per-instance densities; all inputs must share one layout.
inline OverlapHistogram disorder_average(std::span<const OverlapHistogram> hs) {
    if (hs.empty()) throw InputError("disorder average of no histograms");
    OverlapHistogram out = hs[0];
    out.sample_count = 0;
    for (auto& b : out.bins) b.density = 0.0;
    for (const auto& h : hs) {
        if (h.bins.size() != out.bins.size() || h.bin_width != out.bin_width)
            throw InputError("histograms with different binning");
        for (std::size_t i = 0; i < h.bins.size(); ++i) out.bins[i].density += h.bins[i].density;
        out.sample_count += h.sample_count;
        out.symmetrized = out.symmetrized && h.symmetrized;
    }
    for (auto& b : out.bins) b.density /= static_cast<double>(hs.size());
    return out;
}

enum class BarrierClass { ThickBarriers, ThinBarriers, SmallBarriers, Unclassified };

inline std::string_view to_string(BarrierClass c) {
    switch (c) {
        case BarrierClass::ThickBarriers: return "thick";
        case BarrierClass::ThinBarriers: return "thin";
        case BarrierClass::SmallBarriers: return "small";
        case BarrierClass::Unclassified: return "unclassified";
    }
    return "unclassified";
}

inline BarrierClass parse_barrier_class(std::string_view s) {
    for (auto c : {BarrierClass::ThickBarriers, BarrierClass::ThinBarriers, BarrierClass::SmallBarriers,
                   BarrierClass::Unclassified})
        if (to_string(c) == s) return c;
    throw InputError("unknown barrier class '" + std::string(s) + "'");
}

struct ClassifyThresholds {
    double thick_window = 0.75;  // any density above thick_density for |q| <= window
    double thick_density = 5.0;
    double thin_window = 0.5;  // "P(q) ~ 0" means below thin_epsilon here
    double thin_epsilon = 0.05;
    double thin_peak_low = 0.5;  // peaks counted for thin_peak_low <= |q| <= 1
    double thin_peak_density = 2.5;
    std::size_t thin_min_peaks = 2;
    double peak_prominence = 0.5;  // on the 3-bin smoothed curve
    bool folded_peaks = true;      // false: count peaks on both signs of q separately
    double small_window = 0.75;
    double small_density = 0.1;
    std::array<BarrierClass, 3> precedence{BarrierClass::ThickBarriers, BarrierClass::ThinBarriers,
                                           BarrierClass::SmallBarriers};
};

struct Peak {
    double center;
    double height;      // largest raw density within one bin of the centre
    double prominence;  // on the smoothed curve
};

/// Local maxima of the 3-bin moving average of `density` (one value per
/// centre) with at least `min_prominence`.
inline std::vector<Peak> find_peaks(const std::vector<double>& centers, const std::vector<double>& density,
                                    double min_prominence) {
    const std::size_t n = density.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = density[i];
        int cnt = 1;
        if (i > 0) sum += density[i - 1], ++cnt;
        if (i + 1 < n) sum += density[i + 1], ++cnt;
        s[i] = sum / cnt;
    }
    std::vector<Peak> out;
    for (std::size_t i = 0; i < n; ++i) {
        // strict rise on the left, plateau allowed on the right
        const bool left = i == 0 || s[i] > s[i - 1];
        const bool right = i + 1 == n || s[i] >= s[i + 1];
        if (!left || !right || s[i] <= 0.0) continue;
        double left_min = s[i], right_min = s[i];
        for (std::size_t j = i; j-- > 0 && s[j] <= s[i];) left_min = std::min(left_min, s[j]);
        for (std::size_t j = i + 1; j < n && s[j] <= s[i]; ++j) right_min = std::min(right_min, s[j]);
        // a side that runs off the axis without meeting a higher point counts
        // with its own minimum, same as a bounded side
        const double prominence = s[i] - std::max(left_min, right_min);
        if (prominence < min_prominence) continue;
        double height = density[i];
        if (i > 0) height = std::max(height, density[i - 1]);
        if (i + 1 < n) height = std::max(height, density[i + 1]);
        out.push_back({centers[i], height, prominence});
    }
    return out;
}

/// Peaks on the folded axis q >= 0, using (P(q) + P(-q)) / 2.
inline std::vector<Peak> folded_peaks(const OverlapHistogram& h, double min_prominence) {
    const std::size_t m = h.bins.size() / 2;
    std::vector<double> centers, density;
    for (std::size_t j = 0; j <= m; ++j) {
        centers.push_back(h.bins[m + j].center);
        density.push_back(j == 0 ? h.bins[m].density : 0.5 * (h.bins[m + j].density + h.bins[m - j].density));
    }
    return find_peaks(centers, density, min_prominence);
}

inline std::vector<Peak> unfolded_peaks(const OverlapHistogram& h, double min_prominence) {
    std::vector<double> centers, density;
    for (const auto& b : h.bins) {
        centers.push_back(b.center);
        density.push_back(b.density);
    }
    return find_peaks(centers, density, min_prominence);
}

inline BarrierClass classify(const OverlapHistogram& h, const ClassifyThresholds& t = {}) {
    if (h.bins.empty() || std::abs(h.integral() - 1.0) > 1e-6) throw InputError("histogram is not normalized");
    constexpr double slack = 1e-9;  // bin centres are multiples of the width
    auto thick = [&] {
        for (const auto& b : h.bins)
            if (std::abs(b.center) <= t.thick_window + slack && b.density > t.thick_density) return true;
        return false;
    };
    auto thin = [&] {
        for (const auto& b : h.bins)
            if (std::abs(b.center) <= t.thin_window + slack && b.density >= t.thin_epsilon) return false;
        const auto peaks = t.folded_peaks ? folded_peaks(h, t.peak_prominence) : unfolded_peaks(h, t.peak_prominence);
        std::size_t count = 0;
        for (const auto& p : peaks)
            if (std::abs(p.center) >= t.thin_peak_low - slack && std::abs(p.center) <= 1.0 + slack &&
                p.height > t.thin_peak_density)
                ++count;
        return count >= t.thin_min_peaks;
    };
    auto small = [&] {
        for (const auto& b : h.bins)
            if (std::abs(b.center) <= t.small_window + slack && b.density >= t.small_density) return false;
        return true;
    };
    for (auto c : t.precedence) {
        if (c == BarrierClass::ThickBarriers && thick()) return c;
        if (c == BarrierClass::ThinBarriers && thin()) return c;
        if (c == BarrierClass::SmallBarriers && small()) return c;
    }
    return BarrierClass::Unclassified;
}

enum class DegeneracyStatus { converged, undetermined };

template <class T>
struct DegeneracyResult {
    DegeneracyStatus status = DegeneracyStatus::undetermined;
    Energy<T> e0;
    std::size_t count = 0;  // canonical classes (S and -S counted once)
    std::map<SpinConfig, std::uint64_t> hits;
    std::uint64_t sweeps = 0;
};

/// Extend tempering in blocks of `params.sweeps_measure` sweeps until every
/// minimizer seen has at least `min_hits` coldest-rung hits and the last block
/// found nothing new; after `max_blocks` blocks the status is undetermined.
template <class T>
DegeneracyResult<T> estimate_degeneracy(const BasicInstance<T>& inst, const PtParams& params, std::uint64_t seed,
                                        std::uint64_t min_hits = 50, std::size_t max_blocks = 64) {
    if (min_hits < 1) throw InputError("min_hits must be >= 1");
    if (params.sweeps_measure < 1) throw InputError("degeneracy estimation needs measurement sweeps");
    ParallelTempering<T> pt(inst, params, seed);
    pt.thermalize();
    DegeneracyResult<T> out;
    for (std::size_t block = 0; block < max_blocks; ++block) {
        const auto e_before = pt.min_energy();
        const auto n_before = pt.distinct_minimizers();
        pt.measure();
        const bool nothing_new = pt.min_energy() == e_before && pt.distinct_minimizers() == n_before;
        if (nothing_new && pt.min_hits() >= min_hits) {
            out.status = DegeneracyStatus::converged;
            break;
        }
    }
    auto o = pt.output();
    out.e0 = o.min_energy;
    out.count = o.min_configs.size();
    out.hits = std::move(o.hit_histogram);
    out.sweeps = o.sweeps;
    return out;
}

/// p = 1 - prod_g (1 - p_g)^(1/N_G).
inline double aggregate_gauge_success(std::span<const double> p) {
    if (p.empty()) throw InputError("no gauge probabilities");
    double log_fail = 0.0;
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) throw InputError("probability outside [0, 1]");
        if (x == 1.0) return 1.0;
        log_fail += std::log1p(-x);
    }
    return -std::expm1(log_fail / static_cast<double>(p.size()));
}

/// Fraction of samples with E <= e0 + k * delta_e, compared exactly.
inline double relaxed_success(std::span<const EnergyValue> samples, const EnergyValue& e0, std::int64_t k,
                              const EnergyValue& delta_e) {
    if (!(delta_e.num > 0)) throw InputError("energy unit must be positive");
    if (k < 0) throw InputError("k must be >= 0");
    if (samples.empty()) return 0.0;
    const EnergyValue limit{e0.num * delta_e.den + k * delta_e.num * e0.den, e0.den * delta_e.den};
    std::size_t hits = 0;
    for (const auto& e : samples) hits += e <= limit;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

struct JackknifeEstimate {
    double mean;
    double error;
};

/// Leave-one-out estimate of the mean and its standard error.
inline JackknifeEstimate jackknife(std::span<const double> values) {
    const auto n = values.size();
    if (n < 2) throw InputError("jackknife needs at least two values");
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    const double dn = static_cast<double>(n);
    double theta_bar = 0.0;
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) {
        theta[i] = (sum - values[i]) / (dn - 1.0);
        theta_bar += theta[i];
    }
    theta_bar /= dn;
    double ss = 0.0;
    for (double t : theta) ss += (t - theta_bar) * (t - theta_bar);
    // for the mean, dn * sum/n - (n-1) * theta_bar is sum/n again
    return {dn * (sum / dn) - (dn - 1.0) * theta_bar, std::sqrt((dn - 1.0) / dn * ss)};
}

/// Jackknife estimate of mean(a) / mean(b) from paired per-instance values.
inline JackknifeEstimate jackknife_ratio(std::span<const double> a, std::span<const double> b) {
    const auto n = a.size();
    if (n != b.size()) throw InputError("ratio needs paired values");
    if (n < 2) throw InputError("jackknife needs at least two values");
    const double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
    const double dn = static_cast<double>(n);
    const double full = sa / sb;
    std::vector<double> theta(n);
    double theta_bar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        theta[i] = (sa - a[i]) / (sb - b[i]);
        theta_bar += theta[i];
    }
    theta_bar /= dn;
    double ss = 0.0;
    for (double t : theta) ss += (t - theta_bar) * (t - theta_bar);
    return {full, std::sqrt((dn - 1.0) / dn * ss)};
}

struct SuccessRecord {
    std::string instance_id;
    std::vector<double> gauge_probabilities;  // strict success per gauge
    double aggregated = 0.0;
    std::vector<double> relaxed_curve;  // k = 0..K, each gauge-aggregated
    std::uint64_t repetitions = 0;      // per gauge
    EnergyValue energy_unit{2, 1};
};

/// Statistics for one instance from per-gauge final energies (already mapped
/// back to the original instance's energy scale, which gauges preserve).
inline SuccessRecord make_success_record(std::string id, const std::vector<std::vector<EnergyValue>>& per_gauge,
                                         const EnergyValue& e0, const EnergyValue& delta_e, std::int64_t k_max = 10) {
    if (per_gauge.empty()) throw InputError("no gauges");
    SuccessRecord r;
    r.instance_id = std::move(id);
    r.energy_unit = delta_e;
    r.repetitions = per_gauge.front().size();
    for (std::int64_t k = 0; k <= k_max; ++k) {
        std::vector<double> p;
        for (const auto& g : per_gauge) p.push_back(relaxed_success(g, e0, k, delta_e));
        if (k == 0) r.gauge_probabilities = p;
        r.relaxed_curve.push_back(aggregate_gauge_success(p));
    }
    r.aggregated = r.relaxed_curve.front();
    return r;
}

/// (n / N, p) with p sorted descending; ties keep instance-id order.
inline std::vector<std::pair<double, double>> sorted_success_curve(std::span<const SuccessRecord> records) {
    if (records.empty()) throw InputError("no success records");
    std::vector<const SuccessRecord*> order;
    for (const auto& r : records) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const SuccessRecord* a, const SuccessRecord* b) {
        if (a->aggregated != b->aggregated) return a->aggregated > b->aggregated;
        return a->instance_id < b->instance_id;
    });
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        out.push_back({static_cast<double>(i + 1) / n, order[i]->aggregated});
    return out;
}

/// Fraction of noise realizations under which one of the unperturbed ground
/// configurations (or its global flip) is still a ground configuration of the
/// perturbed instance. Both couplers and fields get Gaussian noise of width
/// noise_frac * max|J|.
inline double noise_resilience(const Instance& inst, std::span<const SpinConfig> ground, double noise_frac,
                               std::uint32_t realizations, std::uint64_t seed) {
    if (ground.empty()) throw InputError("noise resilience needs the unperturbed ground state");
    if (realizations < 1) throw InputError("need at least one noise realization");
    std::uint32_t stable = 0;
    for (std::uint32_t g = 0; g < realizations; ++g) {
        const auto noisy = perturb_instance(inst, noise_frac, noise_frac, derive_seed(seed, g, 0x6e6f));
        const double e0 = exact_ground_state(noisy).e0.value();
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : ground) {
            best = std::min(best, energy(noisy, s).value());
            best = std::min(best, energy(noisy, s.flipped()).value());
        }
        stable += best <= e0 + 1e-9 * (1.0 + std::abs(e0));
    }
    return static_cast<double>(stable) / static_cast<double>(realizations);
}

/// Same, with the unperturbed ground state taken from the exact oracle.
inline double noise_resilience(const Instance& inst, double noise_frac, std::uint32_t realizations,
                               std::uint64_t seed) {
    std::vector<SpinConfig> ground;
    if (inst.size() <= exhaustive_max_spins) {
        ground = exhaustive_gs(inst).ground_configs;
    } else {
        ground.push_back(exact_ground_state(inst).witness);
    }
    return noise_resilience(inst, ground, noise_frac, realizations, seed);
}

}  // namespace spinglass
