#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "spinglass/analysis.hpp"
#include "support/brute_force.hpp"

using namespace spinglass;

namespace {

// Histogram with the default layout from a density function, renormalized.
OverlapHistogram synthetic(const std::function<double(double)>& f, double w = 0.025) {
    OverlapHistogram h;
    h.bin_width = w;
    const auto m = std::llround(1.0 / w);
    double total = 0;
    for (long long j = -m; j <= m; ++j) {
        const double c = static_cast<double>(j) * w;
        h.bins.push_back({c, f(c)});
        total += f(c) * w;
    }
    for (auto& b : h.bins) b.density /= total;
    return h;
}

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

// Spikes pinned to exact densities, remaining mass spread evenly on `rest`.
OverlapHistogram pinned(const std::vector<std::pair<double, double>>& spikes,
                        const std::function<bool(double)>& rest) {
    const double w = 0.025;
    double spike_mass = 0;
    for (const auto& s : spikes) spike_mass += s.second * w;
    int rest_bins = 0;
    for (long long j = -40; j <= 40; ++j) {
        const double c = static_cast<double>(j) * w;
        bool is_spike = false;
        for (const auto& s : spikes) is_spike = is_spike || near(c, s.first);
        rest_bins += !is_spike && rest(c);
    }
    const double fill = rest_bins ? (1.0 - spike_mass) / (rest_bins * w) : 0.0;
    OverlapHistogram h;
    h.bin_width = w;
    for (long long j = -40; j <= 40; ++j) {
        const double c = static_cast<double>(j) * w;
        double d = rest(c) ? fill : 0.0;
        for (const auto& s : spikes)
            if (near(c, s.first)) d = s.second;
        h.bins.push_back({c, d});
    }
    return h;
}

}  // namespace

TEST(Histogram, SingleValue) {
    std::vector<double> q(100, 1.0);
    auto h = build_overlap_histogram(q);
    EXPECT_EQ(h.bins.size(), 81u);
    EXPECT_EQ(h.bins.back().center, 1.0);
    EXPECT_NEAR(h.bins.back().density, 40.0, 1e-12);
    EXPECT_NEAR(h.integral(), 1.0, 1e-12);
    for (std::size_t i = 0; i + 1 < h.bins.size(); ++i) EXPECT_EQ(h.bins[i].density, 0.0);
    EXPECT_EQ(h.bins[40].center, 0.0);
}

TEST(Histogram, SymmetricPairs) {
    CounterRng rng(1, StreamTag::test);
    std::vector<double> q;
    for (int i = 0; i < 500; ++i) {
        const double x = std::round((rng.uniform() * 2 - 1) * 128) / 128;
        q.push_back(x);
        q.push_back(-x);
    }
    auto h = build_overlap_histogram(q);
    for (std::size_t i = 0; i < h.bins.size(); ++i) EXPECT_EQ(h.bins[i].density, h.bins[h.bins.size() - 1 - i].density);
    // folding a one-sided sample set gives the same thing
    std::vector<double> half;
    for (std::size_t i = 0; i < q.size(); i += 2) half.push_back(q[i]);
    auto folded = build_overlap_histogram(half, 0.025, true);
    EXPECT_TRUE(folded.symmetrized);
    for (std::size_t i = 0; i < h.bins.size(); ++i) EXPECT_NEAR(folded.bins[i].density, h.bins[i].density, 1e-12);
}

TEST(Histogram, UniformSamples) {
    CounterRng rng(2, StreamTag::test);
    const int n = 100000;
    std::vector<double> q(n);
    for (auto& x : q) x = rng.uniform() * 2 - 1;
    auto h = build_overlap_histogram(q);
    EXPECT_NEAR(h.integral(), 1.0, 1e-9);
    const double w = h.bin_width;
    const double p = w / 2;  // interior bins
    const double sigma = std::sqrt(n * p * (1 - p)) / (n * w);
    for (std::size_t i = 1; i + 1 < h.bins.size(); ++i) EXPECT_NEAR(h.bins[i].density, 0.5, 3 * sigma);
}

TEST(Histogram, OverlapsAndErrors) {
    std::vector<Overlap> q{{128, 128}, {-64, 128}, {0, 128}};
    auto h = build_overlap_histogram(q);
    EXPECT_NEAR(h.density_at(-0.5), 1.0 / (3 * 0.025), 1e-9);
    EXPECT_THROW(build_overlap_histogram(std::vector<double>{}), InputError);
    EXPECT_THROW(build_overlap_histogram(std::vector<double>{0.1}, 0.03), InputError);
    EXPECT_THROW(build_overlap_histogram(std::vector<double>{1.5}), InputError);
    auto coarse = build_overlap_histogram(std::vector<double>{0.3, -0.3}, 0.5);
    EXPECT_EQ(coarse.bins.size(), 5u);
    EXPECT_NEAR(coarse.integral(), 1.0, 1e-12);
}

TEST(Histogram, DisorderAverage) {
    auto a = build_overlap_histogram(std::vector<double>{1.0});
    auto b = build_overlap_histogram(std::vector<double>{-1.0});
    std::vector<OverlapHistogram> both{a, b};
    auto avg = disorder_average(both);
    EXPECT_NEAR(avg.integral(), 1.0, 1e-12);
    EXPECT_NEAR(avg.bins.front().density, 20.0, 1e-12);
    EXPECT_NEAR(avg.bins.back().density, 20.0, 1e-12);
    std::vector<OverlapHistogram> mixed{a, build_overlap_histogram(std::vector<double>{1.0}, 0.5)};
    EXPECT_THROW(disorder_average(mixed), InputError);
}

TEST(Classify, Thick) {
    auto h = pinned({{0.0, 6.0}}, [](double) { return true; });
    EXPECT_NEAR(h.integral(), 1.0, 1e-9);
    EXPECT_EQ(classify(h), BarrierClass::ThickBarriers);
}

TEST(Classify, Thin) {
    auto h = pinned({{0.6, 3.0}, {-0.6, 3.0}, {0.85, 3.0}, {-0.85, 3.0}},
                    [](double c) { return std::abs(c) > 0.5 + 1e-9; });
    EXPECT_NEAR(h.integral(), 1.0, 1e-9);
    EXPECT_EQ(classify(h), BarrierClass::ThinBarriers);
    auto peaks = folded_peaks(h, 0.5);
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_NEAR(peaks[0].center, 0.6, 0.03);
    EXPECT_NEAR(peaks[1].center, 0.85, 0.03);
    EXPECT_EQ(peaks[0].height, 3.0);
}

TEST(Classify, Small) {
    auto h = synthetic([](double c) { return std::abs(std::abs(c) - 0.9) < 0.06 ? 1.0 : 0.0; });
    EXPECT_NEAR(h.integral(), 1.0, 1e-9);
    EXPECT_EQ(classify(h), BarrierClass::SmallBarriers);
    // the two signs of one peak count twice when the axis is not folded
    ClassifyThresholds unfolded;
    unfolded.folded_peaks = false;
    EXPECT_EQ(classify(h, unfolded), BarrierClass::ThinBarriers);
}

TEST(Classify, UnclassifiedAndPrecedence) {
    EXPECT_EQ(classify(synthetic([](double) { return 1.0; })), BarrierClass::Unclassified);
    // thick and thin at once
    auto both = pinned({{0.7, 6.0}, {-0.7, 6.0}, {0.9, 3.0}, {-0.9, 3.0}},
                       [](double c) { return std::abs(c) > 0.5 + 1e-9; });
    EXPECT_EQ(classify(both), BarrierClass::ThickBarriers);
    ClassifyThresholds t;
    t.precedence = {BarrierClass::ThinBarriers, BarrierClass::ThickBarriers, BarrierClass::SmallBarriers};
    EXPECT_EQ(classify(both, t), BarrierClass::ThinBarriers);
    OverlapHistogram bad = both;
    bad.bins[3].density += 10;
    EXPECT_THROW(classify(bad), InputError);
    EXPECT_EQ(parse_barrier_class(to_string(BarrierClass::ThinBarriers)), BarrierClass::ThinBarriers);
}

TEST(Classify, TotalOnRandomHistograms) {
    CounterRng rng(5, StreamTag::test);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> q(200);
        const double centre = rng.uniform();
        for (auto& x : q) x = std::clamp(centre + 0.2 * rng.normal(), -1.0, 1.0) * (rng.spin());
        auto h = build_overlap_histogram(q);
        EXPECT_NEAR(h.integral(), 1.0, 1e-9);
        EXPECT_EQ(classify(h), classify(h));
    }
}

TEST(Degeneracy, MatchesOracle) {
    auto g = build_chimera(2, 2, 4);
    auto params = make_pt_params(30, 0.212, 2.0, 1 << 9, 1 << 9);
    for (auto cls : {DisorderClass::S28, DisorderClass::U4, DisorderClass::U1}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            auto inst = sample_instance(g, cls, seed);
            auto dp = column_dp_gs(inst);
            auto r = estimate_degeneracy(inst, params, seed, 50);
            ASSERT_EQ(r.status, DegeneracyStatus::converged) << to_string(cls) << " " << seed;
            EXPECT_EQ(r.e0, dp.e0);
            EXPECT_EQ(r.count, dp.raw_count / 2) << to_string(cls) << " " << seed;
            for (const auto& [s, h] : r.hits) EXPECT_GE(h, 50u);
        }
    }
}

TEST(Degeneracy, FreeSpinDoubles) {
    auto base = reference::toy_instance(4, {{0, 1}, {1, 2}, {2, 3}}, {1, -1, 1});
    auto extended = reference::toy_instance(5, {{0, 1}, {1, 2}, {2, 3}}, {1, -1, 1});
    auto params = make_pt_params(4, 0.212, 2.0, 64, 256);
    auto a = estimate_degeneracy(base, params, 1, 50);
    auto b = estimate_degeneracy(extended, params, 1, 50);
    ASSERT_EQ(a.status, DegeneracyStatus::converged);
    ASSERT_EQ(b.status, DegeneracyStatus::converged);
    EXPECT_EQ(a.count, 1u);
    EXPECT_EQ(b.count, 2u);
    EXPECT_EQ(exhaustive_gs(extended).raw_count, 2 * exhaustive_gs(base).raw_count);
}

TEST(Degeneracy, CapGivesUndetermined) {
    auto inst = sample_instance(build_chimera(2, 2, 4), DisorderClass::U1, 3);
    auto r = estimate_degeneracy(inst, make_pt_params(30, 0.212, 2.0, 16, 16), 1, 1000000, 2);
    EXPECT_EQ(r.status, DegeneracyStatus::undetermined);
    EXPECT_THROW(estimate_degeneracy(inst, make_pt_params(), 1, 0), InputError);
}

TEST(Aggregate, ClosedForms) {
    for (double p : {0.0, 0.1, 0.5, 0.93}) {
        std::vector<double> v(10, p);
        EXPECT_NEAR(aggregate_gauge_success(v), p, 1e-12);
    }
    EXPECT_EQ(aggregate_gauge_success(std::vector<double>{0.2, 1.0, 0.0}), 1.0);
    EXPECT_NEAR(aggregate_gauge_success(std::vector<double>{0.0, 0.75}), 0.5, 1e-12);
    EXPECT_THROW(aggregate_gauge_success(std::vector<double>{}), InputError);
    EXPECT_THROW(aggregate_gauge_success(std::vector<double>{1.2}), InputError);
    EXPECT_THROW(aggregate_gauge_success(std::vector<double>{-0.1}), InputError);
    // monotone in each argument
    std::vector<double> v{0.1, 0.4, 0.7};
    const double base = aggregate_gauge_success(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto w = v;
        w[i] += 0.05;
        EXPECT_GT(aggregate_gauge_success(w), base);
    }
}

TEST(Relaxed, CurveAndExactness) {
    const EnergyValue e0{-100, 28}, unit{2, 28};
    std::vector<EnergyValue> samples{{-100, 28}, {-98, 28}, {-96, 28}, {-80, 28}, {-100, 28}};
    EXPECT_NEAR(relaxed_success(samples, e0, 0, unit), 0.4, 1e-15);
    EXPECT_NEAR(relaxed_success(samples, e0, 1, unit), 0.6, 1e-15);
    EXPECT_NEAR(relaxed_success(samples, e0, 2, unit), 0.8, 1e-15);
    double last = 0;
    for (int k = 0; k <= 10; ++k) {
        const double p = relaxed_success(samples, e0, k, unit);
        EXPECT_GE(p, last);
        last = p;
    }
    EXPECT_EQ(relaxed_success(samples, e0, 10, unit), 1.0);
    // energy unit with a different denominator is compared exactly
    EXPECT_NEAR(relaxed_success(samples, e0, 1, EnergyValue{1, 14}), 0.6, 1e-15);
    EXPECT_THROW(relaxed_success(samples, e0, 1, EnergyValue{0, 1}), InputError);
    // ten S28 quanta are below 1% of a ground-state energy of about 551
    EXPECT_LT(10.0 * 2.0 / 28.0, 0.01 * 551);
}

TEST(Jackknife, Identities) {
    auto c = jackknife(std::vector<double>{3.0, 3.0, 3.0});
    EXPECT_EQ(c.mean, 3.0);
    EXPECT_EQ(c.error, 0.0);
    auto h = jackknife(std::vector<double>{0.0, 1.0});
    EXPECT_NEAR(h.mean, 0.5, 1e-15);
    EXPECT_NEAR(h.error, 0.5, 1e-15);
    CounterRng rng(3, StreamTag::test);
    for (int n : {2, 5, 37, 400}) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform();
        double mean = 0;
        for (double x : v) mean += x;
        mean /= n;
        double ss = 0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double se = std::sqrt(ss / (n - 1)) / std::sqrt(n);
        auto j = jackknife(v);
        EXPECT_NEAR(j.mean, mean, 1e-12);
        EXPECT_NEAR(j.error, se, 1e-12);
    }
    EXPECT_THROW(jackknife(std::vector<double>{1.0}), InputError);
    std::vector<double> v{0.2, 0.4, 0.1};
    auto r = jackknife_ratio(v, v);
    EXPECT_EQ(r.mean, 1.0);
    EXPECT_NEAR(r.error, 0.0, 1e-15);
}

TEST(SuccessCurve, Sorted) {
    std::vector<SuccessRecord> one(1);
    one[0].aggregated = 0.3;
    auto c = sorted_success_curve(one);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0], std::make_pair(1.0, 0.3));
    std::vector<SuccessRecord> many(7);
    CounterRng rng(4, StreamTag::test);
    for (std::size_t i = 0; i < many.size(); ++i) {
        many[i].instance_id = std::to_string(i);
        many[i].aggregated = rng.uniform();
    }
    auto curve = sorted_success_curve(many);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        EXPECT_LE(curve[i].second, curve[i - 1].second);
        EXPECT_GT(curve[i].first, curve[i - 1].first);
    }
    EXPECT_EQ(curve.back().first, 1.0);
    std::vector<SuccessRecord> zeros(4);
    for (const auto& [x, p] : sorted_success_curve(zeros)) EXPECT_EQ(p, 0.0);
    EXPECT_THROW(sorted_success_curve(std::vector<SuccessRecord>{}), InputError);
}

TEST(SuccessRecord, FromSamples) {
    const EnergyValue e0{-10, 1}, unit{2, 1};
    std::vector<std::vector<EnergyValue>> per_gauge{{{-10, 1}, {-8, 1}, {-6, 1}, {-10, 1}},
                                                    {{-8, 1}, {-8, 1}, {-4, 1}, {-10, 1}}};
    auto r = make_success_record("7", per_gauge, e0, unit, 10);
    EXPECT_EQ(r.gauge_probabilities, (std::vector<double>{0.5, 0.25}));
    EXPECT_NEAR(r.aggregated, 1 - std::sqrt(0.5 * 0.75), 1e-12);
    EXPECT_EQ(r.relaxed_curve.size(), 11u);
    EXPECT_EQ(r.relaxed_curve[0], r.aggregated);
    for (std::size_t k = 1; k < r.relaxed_curve.size(); ++k) EXPECT_GE(r.relaxed_curve[k], r.relaxed_curve[k - 1]);
    EXPECT_EQ(r.relaxed_curve.back(), 1.0);
    EXPECT_EQ(r.repetitions, 4u);
}

TEST(NoiseResilience, Limits) {
    auto g = build_chimera(2, 2, 4);
    auto inst = sample_instance(g, DisorderClass::S28, 2);
    EXPECT_EQ(noise_resilience(inst, 0.0, 10, 1), 1.0);
    Instance ferro(g, std::vector<std::int64_t>(g->graph().num_edges(), 1),
                   std::vector<std::int64_t>(g->graph().num_vertices(), 0), 1, DisorderClass::custom, 0);
    EXPECT_EQ(noise_resilience(ferro, 0.02, 10, 1), 1.0);
    EXPECT_THROW(noise_resilience(inst, std::span<const SpinConfig>{}, 0.1, 10, 1), InputError);
}

TEST(NoiseResilience, DecreasesWithNoise) {
    auto g = build_chimera(2, 2, 4);
    const std::vector<double> fracs{0.0, 0.05, 0.2, 0.5};
    std::vector<double> mean(fracs.size()), var(fracs.size());
    const int instances = 100;
    for (int i = 0; i < instances; ++i) {
        auto inst = sample_instance(g, DisorderClass::U4, 1000 + i);
        for (std::size_t f = 0; f < fracs.size(); ++f) {
            const double r = noise_resilience(inst, fracs[f], 10, i);
            mean[f] += r / instances;
            var[f] += r * r / instances;
        }
    }
    for (std::size_t f = 0; f < fracs.size(); ++f) var[f] = (var[f] - mean[f] * mean[f]) / instances;
    EXPECT_NEAR(mean[0], 1.0, 1e-12);
    for (std::size_t f = 1; f < fracs.size(); ++f)
        EXPECT_LE(mean[f], mean[f - 1] + 3 * std::sqrt(var[f] + var[f - 1]));
    EXPECT_LT(mean.back(), mean.front());
}
