// spinglass: generate, solve, mine, benchmark and report on Chimera spin glasses.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "spinglass/pipeline.hpp"

using namespace spinglass;

namespace {

struct Overrides {
    KeyValueConfig kv;
    template <class T>
    void add(const std::string& key, const std::optional<T>& v) {
        if (!v) return;
        if constexpr (std::is_same_v<T, std::string>) kv.set(key, *v);
        else if constexpr (std::is_floating_point_v<T>) kv.set(key, format_double(*v));
        else kv.set(key, std::to_string(*v));
    }
};

KeyValueConfig with_file(const std::string& path) {
    return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

void merge(KeyValueConfig& into, const KeyValueConfig& from) {
    for (const auto& [k, v] : from.entries()) into.set(k, v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chimera spin-glass instance mining and solver benchmarking"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "sample instances");
    std::string gen_class = "S28", gen_graph, gen_out;
    std::uint32_t gen_rows = 4, gen_cols = 4, gen_shore = 4;
    std::uint64_t gen_seed = 1, gen_count = 1;
    gen->add_option("--class", gen_class, "U1, U4, S28, S137, S567 or J4");
    gen->add_option("--rows", gen_rows);
    gen->add_option("--cols", gen_cols);
    gen->add_option("--shore", gen_shore);
    gen->add_option("--graph", gen_graph, "graph spec file");
    gen->add_option("--seed", gen_seed);
    gen->add_option("--count", gen_count);
    gen->add_option("--out", gen_out, "directory; stdout when omitted and count is 1");

    // oracle
    auto* orc = app.add_subcommand("oracle", "exact ground state of an instance");
    std::string orc_in;
    orc->add_option("--in", orc_in)->required();

    // sa
    auto* sa = app.add_subcommand("sa", "simulated annealing on one instance");
    std::string sa_in;
    std::uint32_t sa_sweeps = 900;
    std::uint64_t sa_reps = 100, sa_seed = 1;
    std::optional<double> sa_bi, sa_bf;
    sa->add_option("--in", sa_in)->required();
    sa->add_option("--sweeps", sa_sweeps);
    sa->add_option("--reps", sa_reps);
    sa->add_option("--beta-i", sa_bi);
    sa->add_option("--beta-f", sa_bf);
    sa->add_option("--seed", sa_seed);

    // mine
    auto* mine = app.add_subcommand("mine", "temper, classify and filter instances");
    std::string mine_config;
    std::optional<std::string> m_profile, m_class, m_out, m_icm, m_graph;
    std::optional<std::uint64_t> m_instances, m_seed, m_therm, m_meas, m_min_hits, m_cap;
    std::optional<std::uint32_t> m_rows, m_cols, m_shore, m_workers;
    std::optional<std::size_t> m_temps;
    std::optional<double> m_tmin, m_tmax;
    bool m_filter_first = false;
    mine->add_option("--config", mine_config, "key = value file");
    mine->add_option("--profile", m_profile, "desk or paper");
    mine->add_option("--class", m_class);
    mine->add_option("--rows", m_rows);
    mine->add_option("--cols", m_cols);
    mine->add_option("--shore", m_shore);
    mine->add_option("--graph", m_graph);
    mine->add_option("--instances", m_instances);
    mine->add_option("--seed", m_seed);
    mine->add_option("--out", m_out);
    mine->add_option("--pt-temps", m_temps);
    mine->add_option("--pt-tmin", m_tmin);
    mine->add_option("--pt-tmax", m_tmax);
    mine->add_option("--sweeps", m_meas, "measurement sweeps");
    mine->add_option("--therm", m_therm, "thermalization sweeps");
    mine->add_option("--icm", m_icm)->check(CLI::IsMember({"on", "off"}));
    mine->add_option("--min-hits", m_min_hits);
    mine->add_option("--cap", m_cap, "largest kept ground-state degeneracy");
    mine->add_flag("--filter-first", m_filter_first, "degeneracy filter before classification");
    mine->add_option("--workers", m_workers);

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "success probabilities on mined instances");
    std::string bench_config;
    std::optional<std::string> b_in, b_solver, b_samples, b_label, b_out;
    std::optional<std::uint64_t> b_reps, b_seed;
    std::optional<std::uint32_t> b_gauges, b_sweeps, b_workers;
    std::optional<double> b_bi, b_bf;
    bool b_all = false;
    bench->add_option("--config", bench_config);
    bench->add_option("--in", b_in, "mining output directory");
    bench->add_option("--solver", b_solver)->check(CLI::IsMember({"sa", "external"}));
    bench->add_option("--samples", b_samples, "directory of external sample files");
    bench->add_option("--label", b_label);
    bench->add_option("--reps", b_reps);
    bench->add_option("--gauges", b_gauges);
    bench->add_option("--sweeps", b_sweeps);
    bench->add_option("--beta-i", b_bi);
    bench->add_option("--beta-f", b_bf);
    bench->add_option("--seed", b_seed);
    bench->add_option("--out", b_out, "success CSV path");
    bench->add_flag("--all", b_all, "include instances that were not kept");
    bench->add_option("--workers", b_workers);

    // report
    auto* rep = app.add_subcommand("report", "tables and curves from success files");
    ReportConfig rcfg;
    std::string rep_in = "mine_out", rep_out = "report";
    std::vector<std::string> rep_success;
    rep->add_option("--in", rep_in, "mining output directory");
    rep->add_option("--success", rep_success, "success CSV files")->required();
    rep->add_option("--out", rep_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto graph = gen_graph.empty() ? build_chimera(gen_rows, gen_cols, gen_shore) : [&] {
                std::ifstream in(gen_graph);
                if (!in) throw InputError("cannot read graph file " + gen_graph);
                return parse_graph_spec(in);
            }();
            const auto cls = parse_disorder_class(gen_class);
            if (gen_out.empty()) {
                if (gen_count != 1) throw InputError("--out is required when --count > 1");
                write_instance(std::cout, sample_instance(graph, cls, gen_seed));
                return 0;
            }
            fs::create_directories(gen_out);
            for (std::uint64_t i = 0; i < gen_count; ++i) {
                std::ofstream out(fs::path(gen_out) / (zero_pad(i) + ".txt"));
                write_instance(out, sample_instance(graph, cls, derive_seed(gen_seed, i)));
            }
        } else if (*orc) {
            const auto inst = load_instance(orc_in);
            const auto r = exact_ground_state(inst);
            std::cout << "e0 " << r.e0 << "\n";
            std::cout << "degeneracy " << (inst.has_fields() ? r.raw_count : r.raw_count / 2) << "\n";
            std::cout << "witness";
            for (auto s : r.witness.values()) std::cout << ' ' << int(s);
            std::cout << "\n";
        } else if (*sa) {
            if (sa_bi.has_value() != sa_bf.has_value()) throw InputError("give both --beta-i and --beta-f");
            const auto inst = load_instance(sa_in);
            const auto schedule =
                sa_bi ? AnnealSchedule{*sa_bi, *sa_bf, sa_sweeps} : default_schedule(inst.disorder_class(), sa_sweeps);
            for (const auto& e : sa_batch(inst, schedule, sa_reps, sa_seed)) std::cout << e << "\n";
        } else if (*mine) {
            auto kv = with_file(mine_config);
            Overrides o;
            o.add("profile", m_profile);
            o.add("class", m_class);
            o.add("rows", m_rows);
            o.add("cols", m_cols);
            o.add("shore", m_shore);
            o.add("graph_file", m_graph);
            o.add("instances", m_instances);
            o.add("seed", m_seed);
            o.add("out", m_out);
            o.add("pt_temps", m_temps);
            o.add("pt_tmin", m_tmin);
            o.add("pt_tmax", m_tmax);
            o.add("pt_sweeps_thermalize", m_therm);
            o.add("pt_sweeps_measure", m_meas);
            o.add("icm", m_icm);
            o.add("min_hits", m_min_hits);
            o.add("degeneracy_cap", m_cap);
            o.add("workers", m_workers);
            if (m_filter_first) o.kv.set("filter_first", "1");
            merge(kv, o.kv);
            MiningConfig cfg;
            cfg.apply(kv);
            const auto s = cmd_mine(cfg);
            std::cout << "instances " << s.generated << " (resumed " << s.resumed << ")\n";
            for (const auto& [b, n] : s.by_barrier) std::cout << "barrier " << b << " " << n << "\n";
            for (const auto& [st, n] : s.by_status) std::cout << "status " << st << " " << n << "\n";
        } else if (*bench) {
            auto kv = with_file(bench_config);
            Overrides o;
            o.add("mine_dir", b_in);
            o.add("solver", b_solver);
            o.add("samples", b_samples);
            o.add("label", b_label);
            o.add("reps", b_reps);
            o.add("gauges", b_gauges);
            o.add("sweeps", b_sweeps);
            o.add("beta_i", b_bi);
            o.add("beta_f", b_bf);
            o.add("seed", b_seed);
            o.add("out", b_out);
            o.add("workers", b_workers);
            if (b_all) o.kv.set("all_instances", "1");
            merge(kv, o.kv);
            BenchmarkConfig cfg;
            cfg.apply(kv);
            const auto rows = cmd_benchmark(cfg);
            std::cout << "instances " << rows.size() << "\n";
        } else if (*rep) {
            rcfg.mine_dir = rep_in;
            rcfg.out = rep_out;
            for (const auto& s : rep_success) rcfg.success.emplace_back(s);
            const auto s = cmd_report(rcfg);
            for (const auto& f : s.files) std::cout << (fs::path(rep_out) / f).string() << "\n";
        }
    } catch (const SizeCapError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
