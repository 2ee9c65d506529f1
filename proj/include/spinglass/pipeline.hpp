#pragma once

// Mining, benchmarking and reporting on instance sets.
//
// Every output row is produced by a pure function of (config, instance index),
// workers only decide when it is computed; rows are written in id order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "energetics.hpp"
#include "instance.hpp"
#include "oracle.hpp"
#include "samplers.hpp"
#include "topology.hpp"

namespace spinglass {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// small helpers

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline EnergyValue parse_energy(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return {detail::parse_number<std::int64_t>(s, "energy"), 1};
    return {detail::parse_number<std::int64_t>(s.substr(0, slash), "energy numerator"),
            detail::parse_number<std::int64_t>(s.substr(slash + 1), "energy denominator")};
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string zero_pad(std::uint64_t i, int width = 6) {
    std::string s = std::to_string(i);
    return s.size() >= static_cast<std::size_t>(width) ? s : std::string(width - s.size(), '0') + s;
}

/// Count from `requested`, else SPINGLASS_WORKERS, else the hardware.
inline unsigned worker_count(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPINGLASS_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// fn(i) for i in [0, n) on a bounded pool; rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// `key = value` lines, '#' comments.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = detail::strip_comment(line);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
            c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return c;
    }

    static KeyValueConfig load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot read config " + path.string());
        return parse(in);
    }

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::string& get(const std::string& key) const { return entries_.at(key); }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    template <class T>
    void read(const std::string& key, T& into) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        if constexpr (std::is_same_v<T, std::string>) {
            into = it->second;
        } else if constexpr (std::is_same_v<T, bool>) {
            const auto& v = it->second;
            if (v == "1" || v == "true" || v == "on" || v == "yes") into = true;
            else if (v == "0" || v == "false" || v == "off" || v == "no") into = false;
            else throw InputError("config key '" + key + "' expects a boolean");
        } else {
            into = detail::parse_number<T>(it->second, key.c_str());
        }
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> entries_;
};

// ---------------------------------------------------------------------------
// mining

/// Largest canonical ground-state count kept by default. J4 and S137 rarely
/// have a unique ground state, so they allow fewer than 32.
inline std::size_t default_degeneracy_cap(DisorderClass cls) {
    return (cls == DisorderClass::J4 || cls == DisorderClass::S137) ? 31 : 1;
}

struct MiningConfig {
    std::uint32_t rows = 4, cols = 4, shore = 4;
    std::string broken;      // space-separated vertex ids
    std::string graph_file;  // overrides rows/cols/shore/broken
    DisorderClass cls = DisorderClass::S28;
    std::uint64_t instances = 1000;
    std::uint64_t seed = 1;
    PtParams pt = make_pt_params(30, 0.212, 2.0, 1 << 13, 1 << 13);
    double bin_width = 0.025;
    bool symmetrize = true;
    ClassifyThresholds thresholds;
    std::uint64_t min_hits = 50;
    std::size_t max_blocks = 32;
    std::optional<std::size_t> degeneracy_cap;
    bool filter_first = false;  // degeneracy filter before classification
    fs::path out = "mine_out";
    unsigned workers = 0;

    /// desk: C(4,4,4), 10^3 instances, 2^13 + 2^13 sweeps.
    /// paper (alias full): C(8,8,4), 10^5 instances, 2^23 + 2^23 sweeps, days of compute.
    static MiningConfig profile(const std::string& name) {
        MiningConfig c;
        if (name == "desk") return c;
        if (name == "paper" || name == "full") {
            c.rows = c.cols = 8;
            c.instances = 100000;
            c.pt = full_scale_pt_params();
            return c;
        }
        throw InputError("unknown profile '" + name + "' (desk or paper)");
    }

    std::size_t cap() const { return degeneracy_cap ? *degeneracy_cap : default_degeneracy_cap(cls); }

    std::shared_ptr<const ChimeraGraph> graph() const {
        if (!graph_file.empty()) {
            std::ifstream in(graph_file);
            if (!in) throw InputError("cannot read graph file " + graph_file);
            return parse_graph_spec(in);
        }
        std::set<VertexId> b;
        std::istringstream in(broken);
        std::string tok;
        while (in >> tok) b.insert(detail::parse_number<VertexId>(tok, "broken vertex"));
        return build_chimera(rows, cols, shore, b);
    }

    void apply(const KeyValueConfig& kv) {
        if (kv.has("profile")) *this = profile(kv.get("profile"));  // other keys override it
        kv.read("rows", rows);
        kv.read("cols", cols);
        kv.read("shore", shore);
        kv.read("broken", broken);
        kv.read("graph_file", graph_file);
        if (kv.has("class")) cls = parse_disorder_class(kv.get("class"));
        kv.read("instances", instances);
        kv.read("seed", seed);
        std::size_t temps = pt.temperatures.size();
        double tmin = *std::min_element(pt.temperatures.begin(), pt.temperatures.end());
        double tmax = *std::max_element(pt.temperatures.begin(), pt.temperatures.end());
        kv.read("pt_temps", temps);
        kv.read("pt_tmin", tmin);
        kv.read("pt_tmax", tmax);
        pt.temperatures = geometric_ladder(tmin, tmax, temps);
        kv.read("pt_sweeps_thermalize", pt.sweeps_thermalize);
        kv.read("pt_sweeps_measure", pt.sweeps_measure);
        kv.read("exchange_interval", pt.exchange_interval);
        kv.read("measure_interval", pt.measure_interval);
        kv.read("icm", pt.icm_enabled);
        kv.read("icm_fraction", pt.icm_fraction);
        kv.read("bin_width", bin_width);
        kv.read("symmetrize", symmetrize);
        kv.read("thick_density", thresholds.thick_density);
        kv.read("thin_epsilon", thresholds.thin_epsilon);
        kv.read("thin_peak_density", thresholds.thin_peak_density);
        kv.read("small_density", thresholds.small_density);
        kv.read("peak_prominence", thresholds.peak_prominence);
        kv.read("folded_peaks", thresholds.folded_peaks);
        if (kv.has("precedence")) {
            std::istringstream in(kv.get("precedence"));
            std::string tok;
            std::size_t i = 0;
            while (std::getline(in, tok, ',') && i < 3) thresholds.precedence[i++] = parse_barrier_class(tok);
            if (i != 3) throw InputError("precedence needs three classes, e.g. thick,thin,small");
        }
        kv.read("min_hits", min_hits);
        kv.read("max_blocks", max_blocks);
        if (kv.has("degeneracy_cap")) {
            std::size_t c = 0;
            kv.read("degeneracy_cap", c);
            degeneracy_cap = c;
        }
        kv.read("filter_first", filter_first);
        if (kv.has("out")) out = kv.get("out");
        kv.read("workers", workers);
        validate();
    }

    void validate() const {
        if (instances < 1) throw InputError("instances must be positive");
        if (cls == DisorderClass::custom) throw InputError("mining needs a generated disorder class");
        pt.validate();
        if (min_hits < 1) throw InputError("min_hits must be positive");
    }

    /// Everything that changes results, one `key = value` per line.
    std::string describe() const {
        std::ostringstream o;
        o << "rows = " << rows << "\ncols = " << cols << "\nshore = " << shore << "\nbroken = " << broken
          << "\ngraph_file = " << graph_file << "\nclass = " << to_string(cls) << "\nseed = " << seed
          << "\npt_temps = " << pt.temperatures.size()
          << "\npt_tmin = " << format_double(*std::min_element(pt.temperatures.begin(), pt.temperatures.end()))
          << "\npt_tmax = " << format_double(*std::max_element(pt.temperatures.begin(), pt.temperatures.end()))
          << "\npt_sweeps_thermalize = " << pt.sweeps_thermalize << "\npt_sweeps_measure = " << pt.sweeps_measure
          << "\nexchange_interval = " << pt.exchange_interval << "\nmeasure_interval = " << pt.measure_interval
          << "\nicm = " << (pt.icm_enabled ? "on" : "off") << "\nicm_fraction = " << format_double(pt.icm_fraction)
          << "\nbin_width = " << format_double(bin_width) << "\nsymmetrize = " << symmetrize
          << "\nthick_density = " << format_double(thresholds.thick_density)
          << "\nthin_epsilon = " << format_double(thresholds.thin_epsilon)
          << "\nthin_peak_density = " << format_double(thresholds.thin_peak_density)
          << "\nsmall_density = " << format_double(thresholds.small_density)
          << "\npeak_prominence = " << format_double(thresholds.peak_prominence)
          << "\nfolded_peaks = " << thresholds.folded_peaks << "\nprecedence = " << to_string(thresholds.precedence[0])
          << "," << to_string(thresholds.precedence[1]) << "," << to_string(thresholds.precedence[2])
          << "\nmin_hits = " << min_hits << "\nmax_blocks = " << max_blocks << "\ndegeneracy_cap = " << cap()
          << "\nfilter_first = " << filter_first << "\n";
        return o.str();
    }
};

struct ManifestRow {
    std::string id;
    std::uint64_t seed = 0;
    DisorderClass cls = DisorderClass::custom;
    std::string barrier = "-";  // to_string(BarrierClass) or "-"
    std::string status;         // ok, unclassified, degenerate, undetermined, oracle_mismatch
    std::int64_t degeneracy = -1;
    EnergyValue e0;
    std::optional<EnergyValue> oracle_e0;
    std::optional<std::uint64_t> oracle_count;
    bool kept = false;

    /// Oracle value when available, else the tempering minimum.
    EnergyValue best_e0() const { return oracle_e0 ? *oracle_e0 : e0; }
};

inline const char* manifest_header = "id,seed,disorder_class,barrier,status,degeneracy,e0,oracle_e0,oracle_count,kept";

inline std::string to_csv(const ManifestRow& r) {
    std::ostringstream o;
    o << r.id << ',' << r.seed << ',' << to_string(r.cls) << ',' << r.barrier << ',' << r.status << ','
      << r.degeneracy << ',' << to_string(r.e0) << ',' << (r.oracle_e0 ? to_string(*r.oracle_e0) : "-") << ','
      << (r.oracle_count ? std::to_string(*r.oracle_count) : "-") << ',' << (r.kept ? 1 : 0);
    return o.str();
}

inline ManifestRow parse_manifest_row(const std::string& line) {
    const auto f = split_csv(line);
    if (f.size() != 10) throw InputError("malformed manifest row: " + line);
    ManifestRow r;
    r.id = f[0];
    r.seed = detail::parse_number<std::uint64_t>(f[1], "seed");
    r.cls = parse_disorder_class(f[2]);
    r.barrier = f[3];
    r.status = f[4];
    r.degeneracy = detail::parse_number<std::int64_t>(f[5], "degeneracy");
    r.e0 = parse_energy(f[6]);
    if (f[7] != "-") r.oracle_e0 = parse_energy(f[7]);
    if (f[8] != "-") r.oracle_count = detail::parse_number<std::uint64_t>(f[8], "oracle count");
    r.kept = f[9] == "1";
    return r;
}

inline std::vector<ManifestRow> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read manifest " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != manifest_header) throw InputError("bad manifest header in " + path.string());
    std::vector<ManifestRow> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(parse_manifest_row(line));
    return rows;
}

namespace detail {

template <class T>
bool block_converged(const ParallelTempering<T>& pt, T e_before, std::size_t n_before, std::uint64_t min_hits) {
    return pt.min_energy() == e_before && pt.distinct_minimizers() == n_before && pt.min_hits() >= min_hits;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed for " + path.string());
}

inline void write_histogram(const fs::path& path, const OverlapHistogram& h) {
    std::ostringstream o;
    o << "center,density\n";
    for (const auto& b : h.bins) o << format_double(b.center) << ',' << format_double(b.density) << '\n';
    write_text(path, o.str());
}

}  // namespace detail

inline fs::path instance_path(const fs::path& dir, const std::string& id) { return dir / "instances" / (id + ".txt"); }

/// Generate, temper, classify and filter instance `index`; writes its instance
/// file and pq_<id>.csv and returns the manifest row.
inline ManifestRow mine_one(const MiningConfig& cfg, const std::shared_ptr<const ChimeraGraph>& graph,
                            std::uint64_t index) {
    ManifestRow row;
    row.id = zero_pad(index);
    row.seed = derive_seed(cfg.seed, index);
    row.cls = cfg.cls;
    const auto inst = sample_instance(graph, cfg.cls, row.seed);
    {
        std::ostringstream o;
        write_instance(o, inst);
        detail::write_text(instance_path(cfg.out, row.id), o.str());
    }

    ParallelTempering<std::int64_t> pt(inst, cfg.pt, derive_seed(cfg.seed, index, 1));
    pt.thermalize();
    auto e_before = pt.min_energy();
    auto n_before = pt.distinct_minimizers();
    pt.measure();
    const auto overlaps = pt.output().overlap_samples;
    const auto hist = build_overlap_histogram(std::span<const Overlap>(overlaps), cfg.bin_width, cfg.symmetrize);
    detail::write_histogram(cfg.out / "pq" / ("pq_" + row.id + ".csv"), hist);

    // The first measurement block also counts towards the degeneracy estimate.
    bool converged = detail::block_converged(pt, e_before, n_before, cfg.min_hits);
    auto degeneracy = [&] {
        for (std::size_t block = 1; !converged && block < cfg.max_blocks; ++block) {
            e_before = pt.min_energy();
            n_before = pt.distinct_minimizers();
            pt.measure();
            converged = detail::block_converged(pt, e_before, n_before, cfg.min_hits);
        }
        row.degeneracy = static_cast<std::int64_t>(pt.distinct_minimizers());
        row.e0 = {pt.min_energy(), inst.denominator()};
        if (!converged) return row.status = "undetermined", false;
        if (static_cast<std::size_t>(row.degeneracy) > cfg.cap()) return row.status = "degenerate", false;
        return true;
    };
    auto classify_step = [&] {
        const auto b = classify(hist, cfg.thresholds);
        row.barrier = std::string(to_string(b));
        if (b == BarrierClass::Unclassified) return row.status = "unclassified", false;
        return true;
    };

    row.e0 = {pt.min_energy(), inst.denominator()};
    const bool survived = cfg.filter_first ? (degeneracy() && classify_step()) : (classify_step() && degeneracy());
    if (!survived) return row;

    row.status = "ok";
    row.kept = true;
    if (column_dp_applicable(inst) || inst.size() <= exhaustive_max_spins) {
        const auto exact = exact_ground_state(inst);
        row.oracle_e0 = exact.e0;
        row.oracle_count = inst.has_fields() ? exact.raw_count : exact.raw_count / 2;
        if (!(exact.e0 == row.e0) || *row.oracle_count != static_cast<std::uint64_t>(row.degeneracy)) {
            row.status = "oracle_mismatch";
            row.kept = false;
        }
    }
    return row;
}

struct MiningSummary {
    std::size_t generated = 0;
    std::size_t resumed = 0;  // rows already present before this run
    std::map<std::string, std::size_t> by_barrier;
    std::map<std::string, std::size_t> kept_by_barrier;
    std::map<std::string, std::size_t> by_status;
};

inline MiningSummary summarize(const std::vector<ManifestRow>& rows) {
    MiningSummary s;
    s.generated = rows.size();
    for (const auto& r : rows) {
        ++s.by_barrier[r.barrier];
        ++s.by_status[r.status];
        if (r.kept) ++s.kept_by_barrier[r.barrier];
    }
    return s;
}

/// Mines cfg.instances instances into cfg.out: config.txt, manifest.csv,
/// counts.csv, instances/<id>.txt, pq/pq_<id>.csv. Reruns resume from the
/// manifest.
inline MiningSummary cmd_mine(const MiningConfig& cfg) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(cfg.out / "instances", ec);
    fs::create_directories(cfg.out / "pq", ec);
    if (ec || !fs::is_directory(cfg.out)) throw InputError("cannot create output directory " + cfg.out.string());

    const auto config_path = cfg.out / "config.txt";
    const auto manifest_path = cfg.out / "manifest.csv";
    const auto described = cfg.describe();
    std::vector<ManifestRow> rows;
    if (fs::exists(manifest_path)) {
        std::ifstream in(config_path);
        std::stringstream previous;
        previous << in.rdbuf();
        if (previous.str() != described)
            throw InputError("output directory holds a run with a different configuration: " + cfg.out.string());
        rows = read_manifest(manifest_path);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].id != zero_pad(i)) throw InputError("manifest rows out of order in " + manifest_path.string());
    } else {
        detail::write_text(config_path, described);
        detail::write_text(manifest_path, std::string(manifest_header) + "\n");
    }
    const std::size_t resumed = rows.size();

    const auto graph = cfg.graph();
    const unsigned workers = worker_count(cfg.workers);
    const std::size_t chunk = std::max<std::size_t>(1, 4 * workers);
    std::ofstream manifest(manifest_path, std::ios::app | std::ios::binary);
    for (std::size_t start = rows.size(); start < cfg.instances; start += chunk) {
        const std::size_t n = std::min<std::size_t>(chunk, cfg.instances - start);
        std::vector<ManifestRow> batch(n);
        parallel_for(n, workers, [&](std::size_t i) { batch[i] = mine_one(cfg, graph, start + i); });
        for (auto& r : batch) {
            manifest << to_csv(r) << '\n';
            rows.push_back(std::move(r));
        }
        manifest.flush();
        if (!manifest) throw InputError("cannot append to " + manifest_path.string());
    }

    auto s = summarize(std::vector<ManifestRow>(rows.begin(), rows.begin() + std::min<std::size_t>(rows.size(), cfg.instances)));
    s.resumed = resumed;
    std::ostringstream counts;
    counts << "barrier,classified,kept\n";
    for (const auto* b : {"thick", "thin", "small", "unclassified", "-"}) {
        auto get = [&](const std::map<std::string, std::size_t>& m) {
            auto it = m.find(b);
            return it == m.end() ? std::size_t{0} : it->second;
        };
        counts << b << ',' << get(s.by_barrier) << ',' << get(s.kept_by_barrier) << '\n';
    }
    detail::write_text(cfg.out / "counts.csv", counts.str());
    return s;
}

// ---------------------------------------------------------------------------
// benchmarking

struct BenchmarkConfig {
    fs::path mine_dir = "mine_out";  // holds manifest.csv and instances/
    std::string solver = "sa";       // sa or external
    fs::path samples;                // external: directory of sample files
    std::string label;               // solver column; defaults to `solver` or the file tag
    std::uint64_t reps = 1000;
    std::uint32_t gauges = 10;
    std::int64_t k_max = 10;
    std::uint32_t sweeps = 900;
    std::optional<double> beta_i, beta_f;
    std::uint64_t seed = 1;
    bool all_instances = false;  // default: kept rows only
    fs::path out;                // default: mine_dir / "success_<label>.csv"
    unsigned workers = 0;

    void apply(const KeyValueConfig& kv) {
        if (kv.has("mine_dir")) mine_dir = kv.get("mine_dir");
        kv.read("solver", solver);
        if (kv.has("samples")) samples = kv.get("samples");
        kv.read("label", label);
        kv.read("reps", reps);
        kv.read("gauges", gauges);
        kv.read("k_max", k_max);
        kv.read("sweeps", sweeps);
        if (kv.has("beta_i")) beta_i = detail::parse_number<double>(kv.get("beta_i"), "beta_i");
        if (kv.has("beta_f")) beta_f = detail::parse_number<double>(kv.get("beta_f"), "beta_f");
        kv.read("seed", seed);
        kv.read("all_instances", all_instances);
        if (kv.has("out")) out = kv.get("out");
        kv.read("workers", workers);
        validate();
    }

    void validate() const {
        if (solver != "sa" && solver != "external") throw InputError("solver must be sa or external");
        if (reps < 1 || gauges < 1) throw InputError("reps and gauges must be >= 1");
        if (k_max < 0) throw InputError("k_max must be >= 0");
        if (beta_i.has_value() != beta_f.has_value()) throw InputError("give both beta_i and beta_f");
    }

    AnnealSchedule schedule(DisorderClass cls) const {
        if (beta_i) return {*beta_i, *beta_f, sweeps};
        return default_schedule(cls, sweeps);
    }
};

struct SuccessRow {
    std::string id;
    DisorderClass cls = DisorderClass::custom;
    std::string barrier;
    std::string solver;
    SuccessRecord record;
};

inline std::string success_header(std::int64_t k_max) {
    std::string h = "instance_id,disorder_class,barrier,solver,gauges,repetitions,energy_unit,p_gauges,p_bar";
    for (std::int64_t k = 0; k <= k_max; ++k) h += ",p_k" + std::to_string(k);
    return h;
}

inline std::string to_csv(const SuccessRow& r) {
    std::ostringstream o;
    o << r.id << ',' << to_string(r.cls) << ',' << r.barrier << ',' << r.solver << ','
      << r.record.gauge_probabilities.size() << ',' << r.record.repetitions << ',' << to_string(r.record.energy_unit)
      << ',';
    for (std::size_t g = 0; g < r.record.gauge_probabilities.size(); ++g)
        o << (g ? ";" : "") << format_double(r.record.gauge_probabilities[g]);
    o << ',' << format_double(r.record.aggregated);
    for (double p : r.record.relaxed_curve) o << ',' << format_double(p);
    return o.str();
}

inline std::vector<SuccessRow> read_success(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read success file " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("instance_id,disorder_class,barrier,solver,", 0) != 0)
        throw InputError("bad success header in " + path.string());
    const auto columns = split_csv(line).size();
    std::vector<SuccessRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != columns || columns < 10) throw InputError("malformed success row: " + line);
        SuccessRow r;
        r.id = f[0];
        r.cls = parse_disorder_class(f[1]);
        r.barrier = f[2];
        r.solver = f[3];
        r.record.instance_id = r.id;
        r.record.repetitions = detail::parse_number<std::uint64_t>(f[5], "repetitions");
        r.record.energy_unit = parse_energy(f[6]);
        std::istringstream gs(f[7]);
        std::string tok;
        while (std::getline(gs, tok, ';')) r.record.gauge_probabilities.push_back(detail::parse_number<double>(tok, "p"));
        r.record.aggregated = detail::parse_number<double>(f[8], "p_bar");
        for (std::size_t c = 9; c < f.size(); ++c) r.record.relaxed_curve.push_back(detail::parse_number<double>(f[c], "p_k"));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Instance load_instance(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read instance " + path.string());
    return parse_instance(in);
}

/// Per-gauge SA energies on gauge-transformed copies. Gauges preserve the
/// spectrum, so the energies compare directly with the original e0.
inline std::vector<std::vector<EnergyValue>> sa_gauge_samples(const Instance& inst, const BenchmarkConfig& cfg,
                                                              std::uint64_t instance_seed) {
    std::vector<std::vector<EnergyValue>> out;
    const auto schedule = cfg.schedule(inst.disorder_class());
    for (std::uint32_t g = 0; g < cfg.gauges; ++g) {
        const auto gauged = gauge_transform(inst, GaugeVector::random(inst.size(), instance_seed, g));
        out.push_back(sa_batch(gauged, schedule, cfg.reps, derive_seed(instance_seed, g, 0x5a)));
    }
    return out;
}

/// External sample files: header `samples <instance_id> <solver> <gauge>`, then
/// one energy numerator (over the instance denominator) per line.
struct ExternalSamples {
    std::string solver;
    std::map<std::string, std::map<std::uint32_t, std::vector<std::int64_t>>> energies;  // id -> gauge -> list
};

inline ExternalSamples read_external_samples(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("sample directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    ExternalSamples out;
    for (const auto& p : files) {
        std::ifstream in(p);
        std::string line;
        if (!std::getline(in, line)) throw InputError("empty sample file " + p.string());
        const auto t = split_tokens(line);
        if (t.size() != 4 || t[0] != "samples") throw InputError(p.string() + ": expected 'samples instance_id solver gauge'");
        if (!out.solver.empty() && out.solver != t[2]) throw InputError(p.string() + ": mixed solver tags");
        out.solver = t[2];
        auto& list = out.energies[t[1]][detail::parse_number<std::uint32_t>(t[3], "gauge")];
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            const auto tok = split_tokens(detail::strip_comment(line));
            if (tok.empty()) continue;
            if (tok.size() != 1) throw InputError(p.string() + ":" + std::to_string(lineno) + ": expected one energy");
            list.push_back(detail::parse_number<std::int64_t>(tok[0], "energy"));
        }
    }
    return out;
}

/// Writes the success file and returns its rows in manifest order.
inline std::vector<SuccessRow> cmd_benchmark(const BenchmarkConfig& cfg) {
    cfg.validate();
    const auto manifest = read_manifest(cfg.mine_dir / "manifest.csv");
    std::vector<ManifestRow> chosen;
    for (const auto& r : manifest)
        if (cfg.all_instances || r.kept) chosen.push_back(r);

    std::optional<ExternalSamples> external;
    std::string label = cfg.label;
    if (cfg.solver == "external") {
        external = read_external_samples(cfg.samples);
        std::set<std::string> known;
        for (const auto& r : manifest) known.insert(r.id);
        for (const auto& [id, g] : external->energies)
            if (!known.count(id)) throw InputError("sample file names unknown instance " + id);
        if (label.empty()) label = external->solver;
    }
    if (label.empty()) label = cfg.solver;

    std::vector<std::optional<SuccessRow>> rows(chosen.size());
    parallel_for(chosen.size(), worker_count(cfg.workers), [&](std::size_t i) {
        const auto& m = chosen[i];
        const auto inst = load_instance(instance_path(cfg.mine_dir, m.id));
        const EnergyValue e0 = m.best_e0();
        if (e0.den != inst.denominator()) throw InputError("instance " + m.id + ": e0 denominator mismatch");
        std::vector<std::vector<EnergyValue>> per_gauge;
        if (external) {
            auto it = external->energies.find(m.id);
            if (it == external->energies.end()) return;  // not benchmarked by this solver
            for (const auto& [g, list] : it->second) {
                if (list.empty()) throw InputError("instance " + m.id + " gauge " + std::to_string(g) + ": no samples");
                auto& v = per_gauge.emplace_back();
                for (auto num : list) v.push_back({num, inst.denominator()});
            }
        } else {
            per_gauge = sa_gauge_samples(inst, cfg, derive_seed(cfg.seed, detail::parse_number<std::uint64_t>(m.id, "id")));
        }
        const EnergyValue unit{inst.energy_quantum(), inst.denominator()};
        rows[i] = SuccessRow{m.id, m.cls, m.barrier, label, make_success_record(m.id, per_gauge, e0, unit, cfg.k_max)};
    });

    std::vector<SuccessRow> out;
    std::ostringstream o;
    o << success_header(cfg.k_max) << '\n';
    for (auto& r : rows)
        if (r) {
            o << to_csv(*r) << '\n';
            out.push_back(std::move(*r));
        }
    const auto path = cfg.out.empty() ? cfg.mine_dir / ("success_" + label + ".csv") : cfg.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    detail::write_text(path, o.str());
    return out;
}

// ---------------------------------------------------------------------------
// reporting

struct ReportConfig {
    fs::path mine_dir = "mine_out";
    std::vector<fs::path> success;
    fs::path out = "report";
};

struct ReportSummary {
    std::vector<std::string> solvers;
    std::vector<std::string> files;  // written, relative to out
};

namespace detail {

inline std::string percent_cell(const std::vector<double>& p) {
    if (p.empty()) return "n/a,n/a";
    double mean = 0;
    for (double x : p) mean += x;
    mean /= static_cast<double>(p.size());
    if (p.size() < 2) return format_double(100 * mean) + ",n/a";
    const auto j = jackknife(p);
    return format_double(100 * j.mean) + "," + format_double(100 * j.error);
}

}  // namespace detail

/// Tables and curves from a manifest and one or more success files:
/// pav.csv, solver_ratios.csv, barrier_ratios.csv, sorted_curve_<s>.csv, relaxed_<s>.csv.
inline ReportSummary cmd_report(const ReportConfig& cfg) {
    if (cfg.success.empty()) throw InputError("report needs at least one success file");
    const auto manifest = read_manifest(cfg.mine_dir / "manifest.csv");
    std::map<std::string, const ManifestRow*> by_id;
    for (const auto& r : manifest) by_id[r.id] = &r;

    // solver label -> id -> row
    std::vector<std::pair<std::string, std::map<std::string, SuccessRow>>> solvers;
    for (const auto& path : cfg.success) {
        auto rows = read_success(path);
        std::string label = rows.empty() ? path.stem().string() : rows.front().solver;
        for (const auto& [l, m] : solvers)
            if (l == label) label += "_" + std::to_string(solvers.size() + 1);
        std::map<std::string, SuccessRow> m;
        for (auto& r : rows) {
            auto it = by_id.find(r.id);
            if (it == by_id.end()) throw InputError("success id " + r.id + " is not in the manifest");
            if (it->second->cls != r.cls || it->second->barrier != r.barrier)
                throw InputError("success id " + r.id + " disagrees with the manifest");
            m.emplace(r.id, std::move(r));
        }
        solvers.emplace_back(label, std::move(m));
    }

    std::set<DisorderClass> classes;
    for (const auto& r : manifest) classes.insert(r.cls);
    const std::vector<std::string> groups{"thick", "thin", "small", "unclassified", "all"};
    auto in_group = [](const SuccessRow& r, const std::string& g) { return g == "all" || r.barrier == g; };

    fs::create_directories(cfg.out);
    ReportSummary summary;

    std::ostringstream pav;
    pav << "solver,disorder_class,barrier,N_sa,p_av_percent,err_percent\n";
    for (const auto& [label, rows] : solvers)
        for (auto cls : classes)
            for (const auto& g : groups) {
                std::vector<double> p;
                for (const auto& [id, r] : rows)
                    if (r.cls == cls && in_group(r, g)) p.push_back(r.record.aggregated);
                pav << label << ',' << to_string(cls) << ',' << g << ',' << p.size() << ','
                    << detail::percent_cell(p) << '\n';
            }
    detail::write_text(cfg.out / "pav.csv", pav.str());
    summary.files.push_back("pav.csv");

    std::ostringstream sr;
    sr << "solver_a,solver_b,disorder_class,barrier,N,ratio,err\n";
    for (std::size_t a = 0; a < solvers.size(); ++a)
        for (std::size_t b = a + 1; b < solvers.size(); ++b)
            for (auto cls : classes)
                for (const auto& g : groups) {
                    std::vector<double> pa, pb;
                    for (const auto& [id, r] : solvers[a].second) {
                        auto it = solvers[b].second.find(id);
                        if (it == solvers[b].second.end() || r.cls != cls || !in_group(r, g)) continue;
                        pa.push_back(r.record.aggregated);
                        pb.push_back(it->second.record.aggregated);
                    }
                    sr << solvers[a].first << ',' << solvers[b].first << ',' << to_string(cls) << ',' << g << ','
                       << pa.size() << ',';
                    const double sb = std::accumulate(pb.begin(), pb.end(), 0.0);
                    if (pa.size() < 2 || sb == 0.0) {
                        sr << "n/a,n/a\n";
                    } else {
                        const auto j = jackknife_ratio(pa, pb);
                        sr << format_double(j.mean) << ',' << format_double(j.error) << '\n';
                    }
                }
    detail::write_text(cfg.out / "solver_ratios.csv", sr.str());
    summary.files.push_back("solver_ratios.csv");

    // Unpaired groups: ratio of jackknife means, errors added in quadrature.
    std::ostringstream br;
    br << "solver,disorder_class,ratio,value,err\n";
    for (const auto& [label, rows] : solvers)
        for (auto cls : classes) {
            auto collect = [&](const std::string& g) {
                std::vector<double> p;
                for (const auto& [id, r] : rows)
                    if (r.cls == cls && in_group(r, g)) p.push_back(r.record.aggregated);
                return p;
            };
            const auto thick = collect("thick");
            for (const auto* other : {"thin", "small"}) {
                const auto p = collect(other);
                br << label << ',' << to_string(cls) << ',' << other << "/thick,";
                if (p.size() < 2 || thick.size() < 2) {
                    br << "n/a,n/a\n";
                    continue;
                }
                const auto num = jackknife(p), den = jackknife(thick);
                if (den.mean == 0.0) {
                    br << "n/a,n/a\n";
                    continue;
                }
                const double r = num.mean / den.mean;
                const double rel_num = num.mean == 0.0 ? 0.0 : num.error / num.mean;
                const double err = std::abs(r) * std::sqrt(rel_num * rel_num + (den.error / den.mean) * (den.error / den.mean));
                br << format_double(r) << ',' << format_double(num.mean == 0.0 ? num.error / den.mean : err) << '\n';
            }
        }
    detail::write_text(cfg.out / "barrier_ratios.csv", br.str());
    summary.files.push_back("barrier_ratios.csv");

    for (const auto& [label, rows] : solvers) {
        summary.solvers.push_back(label);
        std::vector<SuccessRecord> recs;
        for (const auto& [id, r] : rows) recs.push_back(r.record);
        std::ostringstream sc;
        sc << "fraction,p\n";
        if (!recs.empty())
            for (const auto& [x, p] : sorted_success_curve(recs)) sc << format_double(x) << ',' << format_double(p) << '\n';
        detail::write_text(cfg.out / ("sorted_curve_" + label + ".csv"), sc.str());
        summary.files.push_back("sorted_curve_" + label + ".csv");

        std::ostringstream rc;
        rc << "disorder_class,barrier,k,N,p_av,err\n";
        std::size_t kmax = 0;
        for (const auto& r : recs) kmax = std::max(kmax, r.relaxed_curve.size());
        for (auto cls : classes)
            for (const auto& g : groups)
                for (std::size_t k = 0; k < kmax; ++k) {
                    std::vector<double> p;
                    for (const auto& [id, r] : rows)
                        if (r.cls == cls && in_group(r, g) && k < r.record.relaxed_curve.size())
                            p.push_back(r.record.relaxed_curve[k]);
                    rc << to_string(cls) << ',' << g << ',' << k << ',' << p.size() << ',';
                    if (p.empty()) {
                        rc << "n/a,n/a\n";
                    } else if (p.size() < 2) {
                        rc << format_double(p[0]) << ",n/a\n";
                    } else {
                        const auto j = jackknife(p);
                        rc << format_double(j.mean) << ',' << format_double(j.error) << '\n';
                    }
                }
        detail::write_text(cfg.out / ("relaxed_" + label + ".csv"), rc.str());
        summary.files.push_back("relaxed_" + label + ".csv");
    }
    return summary;
}

}  // namespace spinglass
