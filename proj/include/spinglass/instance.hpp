#pragma once

// Disorder instances: couplers J_ij on edges and fields h_i on vertices.
//
// Exact instances store integer numerators over a class-wide denominator so
// that energies, gaps and degeneracies are compared without rounding; the
// physical coupler is numerator / denominator. Perturbed (noisy) copies use
// the same template with double values and denominator 1.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"
#include "spins.hpp"
#include "topology.hpp"

namespace spinglass {

enum class DisorderClass { U1, U4, S28, S137, S567, J4, custom };

inline std::string_view to_string(DisorderClass c) {
    switch (c) {
        case DisorderClass::U1: return "U1";
        case DisorderClass::U4: return "U4";
        case DisorderClass::S28: return "S28";
        case DisorderClass::S137: return "S137";
        case DisorderClass::S567: return "S567";
        case DisorderClass::J4: return "J4";
        case DisorderClass::custom: return "custom";
    }
    return "custom";
}

/// Case-insensitive; accepts both file tags (S28) and CLI spellings (s28).
inline DisorderClass parse_disorder_class(std::string_view tag) {
    std::string lower(tag);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    for (auto c : {DisorderClass::U1, DisorderClass::U4, DisorderClass::S28, DisorderClass::S137, DisorderClass::S567,
                   DisorderClass::J4, DisorderClass::custom}) {
        std::string name(to_string(c));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (name == lower) return c;
    }
    throw InputError("unknown disorder class '" + std::string(tag) + "'");
}

struct ClassSpec {
    std::int64_t denominator;
    std::vector<std::int64_t> magnitudes;        // allowed |numerator| values
    std::vector<std::int64_t> intra_magnitudes;  // J4 only: K(k,k) cell bonds
};

// S137 stands for the value set {1, 3, 7}; the label is all that identifies it.
inline ClassSpec class_spec(DisorderClass c) {
    switch (c) {
        case DisorderClass::U1: return {1, {1}, {}};
        case DisorderClass::U4: return {4, {1, 2, 3, 4}, {}};
        case DisorderClass::S28: return {28, {8, 13, 19, 28}, {}};
        case DisorderClass::S137: return {7, {1, 3, 7}, {}};
        case DisorderClass::S567: return {7, {5, 6, 7}, {}};
        case DisorderClass::J4: return {4, {4}, {1}};
        case DisorderClass::custom: break;
    }
    throw InputError("class 'custom' has no generator");
}

/// No sum of two distinct members is itself a member. With `include_doubles`
/// the sums a + a are checked as well ({2, 5, 10} passes only without it).
inline bool validate_sidon(std::span<const std::int64_t> values, bool include_doubles = false) {
    const std::set<std::int64_t> members(values.begin(), values.end());
    for (auto a = members.begin(); a != members.end(); ++a)
        for (auto b = a; b != members.end(); ++b) {
            if (a == b && !include_doubles) continue;
            if (members.count(*a + *b)) return false;
        }
    return true;
}

template <class T>
class BasicInstance {
public:
    using value_type = T;

    BasicInstance(std::shared_ptr<const ChimeraGraph> chimera, std::vector<T> couplers, std::vector<T> fields,
                  std::int64_t denominator, DisorderClass cls, std::uint64_t seed)
        : graph_(chimera, &chimera->graph()), chimera_(std::move(chimera)), couplers_(std::move(couplers)),
          fields_(std::move(fields)), denominator_(denominator), class_(cls), seed_(seed) {
        check();
    }

    BasicInstance(std::shared_ptr<const Graph> graph, std::vector<T> couplers, std::vector<T> fields,
                  std::int64_t denominator, DisorderClass cls = DisorderClass::custom, std::uint64_t seed = 0)
        : graph_(std::move(graph)), couplers_(std::move(couplers)), fields_(std::move(fields)),
          denominator_(denominator), class_(cls), seed_(seed) {
        check();
    }

    const Graph& graph() const { return *graph_; }
    const std::shared_ptr<const Graph>& graph_ptr() const { return graph_; }
    const ChimeraGraph* chimera() const { return chimera_.get(); }
    const std::shared_ptr<const ChimeraGraph>& chimera_ptr() const { return chimera_; }

    std::size_t size() const { return graph_->num_vertices(); }
    std::span<const T> couplers() const { return couplers_; }
    std::span<const T> fields() const { return fields_; }
    T coupler(std::size_t edge) const { return couplers_[edge]; }
    T field(std::size_t v) const { return fields_[v]; }
    std::int64_t denominator() const { return denominator_; }
    DisorderClass disorder_class() const { return class_; }
    std::uint64_t seed() const { return seed_; }

    bool has_fields() const {
        return std::any_of(fields_.begin(), fields_.end(), [](T h) { return h != T{}; });
    }

    T max_abs_coupler() const {
        T m{};
        for (auto j : couplers_) m = std::max<T>(m, j < T{} ? -j : j);
        return m;
    }

    /// Physical coupler value numerator / denominator.
    double physical_coupler(std::size_t edge) const {
        return static_cast<double>(couplers_[edge]) / static_cast<double>(denominator_);
    }

    /// Smallest possible nonzero energy change: 2 * gcd(|numerators|) / denominator,
    /// returned as a numerator over this instance's denominator.
    T energy_quantum() const
        requires std::is_integral_v<T>
    {
        T g = 0;
        for (auto j : couplers_) g = std::gcd(g, j);
        for (auto h : fields_) g = std::gcd(g, h);
        return 2 * (g == 0 ? 1 : g);
    }

    friend bool operator==(const BasicInstance& x, const BasicInstance& y) {
        const bool same_chimera = (x.chimera_ && y.chimera_) ? *x.chimera_ == *y.chimera_ : x.chimera_ == y.chimera_;
        return same_chimera && *x.graph_ == *y.graph_ && x.couplers_ == y.couplers_ && x.fields_ == y.fields_ &&
               x.denominator_ == y.denominator_ && x.class_ == y.class_ && x.seed_ == y.seed_;
    }

private:
    void check() const {
        if (couplers_.size() != graph_->num_edges()) throw InputError("coupler count does not match graph edges");
        if (fields_.size() != graph_->num_vertices()) throw InputError("field count does not match graph vertices");
        if (denominator_ < 1) throw InputError("denominator must be positive");
    }

    std::shared_ptr<const Graph> graph_;
    std::shared_ptr<const ChimeraGraph> chimera_;
    std::vector<T> couplers_;
    std::vector<T> fields_;
    std::int64_t denominator_;
    DisorderClass class_;
    std::uint64_t seed_;
};

using Instance = BasicInstance<std::int64_t>;
using RealInstance = BasicInstance<double>;

/// Same structure and class tag, new values.
template <class T, class U>
BasicInstance<T> with_values(const BasicInstance<U>& base, std::vector<T> couplers, std::vector<T> fields,
                             std::int64_t denominator) {
    if (base.chimera_ptr())
        return BasicInstance<T>(base.chimera_ptr(), std::move(couplers), std::move(fields), denominator,
                                base.disorder_class(), base.seed());
    return BasicInstance<T>(base.graph_ptr(), std::move(couplers), std::move(fields), denominator,
                            base.disorder_class(), base.seed());
}

inline bool is_intra_cell(const ChimeraGraph& g, const Edge& e) {
    const auto a = g.coord(g.graph().label(e.u));
    const auto b = g.coord(g.graph().label(e.v));
    return a.row == b.row && a.col == b.col;
}

/// Couplers drawn i.i.d. uniformly from the class's signed value set; h = 0.
inline Instance sample_instance(std::shared_ptr<const ChimeraGraph> graph, DisorderClass cls, std::uint64_t seed) {
    const auto spec = class_spec(cls);
    const auto& g = graph->graph();
    CounterRng rng(seed, StreamTag::instance);
    std::vector<std::int64_t> couplers(g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const auto& set =
            (cls == DisorderClass::J4 && is_intra_cell(*graph, g.edges()[e])) ? spec.intra_magnitudes : spec.magnitudes;
        const auto magnitude = set[rng.below(set.size())];
        couplers[e] = rng.spin() * magnitude;
    }
    return Instance(std::move(graph), std::move(couplers), std::vector<std::int64_t>(g.num_vertices(), 0),
                    spec.denominator, cls, seed);
}

/// Every coupler/field magnitude belongs to the class's allowed set and h = 0
/// (custom instances are only checked for |J| <= denominator).
inline bool conforms_to_class(const Instance& inst) {
    if (inst.disorder_class() == DisorderClass::custom) return true;
    const auto spec = class_spec(inst.disorder_class());
    if (spec.denominator != inst.denominator() || inst.has_fields()) return false;
    const auto& g = inst.graph();
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const auto& set = (inst.disorder_class() == DisorderClass::J4 && inst.chimera() &&
                           is_intra_cell(*inst.chimera(), g.edges()[e]))
                              ? spec.intra_magnitudes
                              : spec.magnitudes;
        if (std::find(set.begin(), set.end(), std::abs(inst.coupler(e))) == set.end()) return false;
    }
    return true;
}

/// J'_ij = J_ij t_i t_j, h'_i = h_i t_i.
template <class T>
BasicInstance<T> gauge_transform(const BasicInstance<T>& inst, const GaugeVector& gauge) {
    const auto& g = inst.graph();
    if (gauge.size() != g.num_vertices()) throw InputError("gauge does not match instance vertices");
    std::vector<T> couplers(inst.couplers().begin(), inst.couplers().end());
    std::vector<T> fields(inst.fields().begin(), inst.fields().end());
    for (std::size_t e = 0; e < g.num_edges(); ++e)
        if (gauge[g.edges()[e].u] * gauge[g.edges()[e].v] < 0) couplers[e] = -couplers[e];
    for (std::size_t v = 0; v < fields.size(); ++v)
        if (gauge[v] < 0) fields[v] = -fields[v];
    return with_values<T>(inst, std::move(couplers), std::move(fields), inst.denominator());
}

/// Real-valued copy in physical units with additive Gaussian noise. Both noise
/// widths are relative to the instance scale max|J| (generated classes have
/// h = 0, so a field-relative width would vanish).
inline RealInstance perturb_instance(const Instance& inst, double coupler_noise_frac, double field_noise_frac,
                                     std::uint64_t seed) {
    if (!(coupler_noise_frac >= 0.0) || !(field_noise_frac >= 0.0))
        throw InputError("noise fractions must be non-negative");
    const double den = static_cast<double>(inst.denominator());
    const double scale = static_cast<double>(inst.max_abs_coupler()) / den;
    CounterRng rng(seed, StreamTag::noise);
    std::vector<double> couplers(inst.couplers().size());
    std::vector<double> fields(inst.fields().size());
    for (std::size_t e = 0; e < couplers.size(); ++e) {
        couplers[e] = static_cast<double>(inst.coupler(e)) / den;
        if (coupler_noise_frac > 0.0) couplers[e] += coupler_noise_frac * scale * rng.normal();
    }
    for (std::size_t v = 0; v < fields.size(); ++v) {
        fields[v] = static_cast<double>(inst.field(v)) / den;
        if (field_noise_frac > 0.0) fields[v] += field_noise_frac * scale * rng.normal();
    }
    return with_values<double>(inst, std::move(couplers), std::move(fields), 1);
}

/// Exact instance re-expressed as doubles in physical units (no noise).
inline RealInstance to_real(const Instance& inst) { return perturb_instance(inst, 0.0, 0.0, 0); }

// Instance text format:
//
//     instance chimera m n k denom D class TAG seed S
//     broken v1 v2 ...          (optional, as in graph specs)
//     broken_edge u v           (optional)
//     b u v num                 (one per active coupler, vertex ids)
//     f v num                   (optional, nonzero fields)

inline void write_instance(std::ostream& out, const Instance& inst) {
    const auto* chimera = inst.chimera();
    if (!chimera) throw InputError("only chimera instances can be serialized");
    out << "instance chimera " << chimera->rows() << ' ' << chimera->cols() << ' ' << chimera->shore() << " denom "
        << inst.denominator() << " class " << to_string(inst.disorder_class()) << " seed " << inst.seed() << '\n';
    write_broken_lines(out, *chimera);
    const auto& g = inst.graph();
    for (std::size_t e = 0; e < g.num_edges(); ++e)
        out << "b " << g.label(g.edges()[e].u) << ' ' << g.label(g.edges()[e].v) << ' ' << inst.coupler(e) << '\n';
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
        if (inst.field(v) != 0) out << "f " << g.label(v) << ' ' << inst.field(v) << '\n';
}

inline Instance parse_instance(std::istream& in) {
    struct Header {
        std::uint32_t m, n, k;
        std::int64_t den;
        DisorderClass cls;
        std::uint64_t seed;
    };
    std::optional<Header> header;
    std::set<VertexId> broken;
    std::set<VertexPair> broken_edges;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> body;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto tokens = split_tokens(line);
        if (tokens.empty()) continue;
        auto fail = [&](const std::string& why) {
            throw InputError("instance line " + std::to_string(lineno) + ": " + why);
        };
        if (!header) {
            if (tokens.size() != 11 || tokens[0] != "instance" || tokens[1] != "chimera" || tokens[5] != "denom" ||
                tokens[7] != "class" || tokens[9] != "seed")
                fail("expected 'instance chimera m n k denom D class TAG seed S'");
            header = Header{detail::parse_number<std::uint32_t>(tokens[2], "rows"),
                            detail::parse_number<std::uint32_t>(tokens[3], "cols"),
                            detail::parse_number<std::uint32_t>(tokens[4], "shore"),
                            detail::parse_number<std::int64_t>(tokens[6], "denominator"),
                            parse_disorder_class(tokens[8]),
                            detail::parse_number<std::uint64_t>(tokens[10], "seed")};
            continue;
        }
        if (parse_broken_line(tokens, broken, broken_edges)) continue;
        if (tokens[0] == "b" && tokens.size() == 4) {
            body.emplace_back(lineno, std::move(tokens));
        } else if (tokens[0] == "f" && tokens.size() == 3) {
            body.emplace_back(lineno, std::move(tokens));
        } else {
            fail("malformed line '" + line + "'");
        }
    }
    if (!header) throw InputError("instance file has no header");

    auto chimera = build_chimera(header->m, header->n, header->k, std::move(broken), std::move(broken_edges));
    const auto& g = chimera->graph();
    std::vector<std::int64_t> couplers(g.num_edges(), 0);
    std::vector<bool> seen_edge(g.num_edges(), false);
    std::vector<std::int64_t> fields(g.num_vertices(), 0);
    std::vector<bool> seen_field(g.num_vertices(), false);
    for (const auto& [ln, tokens] : body) {
        auto fail = [&, l = ln](const std::string& why) {
            throw InputError("instance line " + std::to_string(l) + ": " + why);
        };
        auto vertex = [&](const std::string& tok) {
            const auto id = detail::parse_number<VertexId>(tok, "vertex id");
            const auto dense = chimera->dense_index(id);
            if (!dense) fail("unknown vertex " + tok);
            return *dense;
        };
        if (tokens[0] == "b") {
            const auto u = vertex(tokens[1]);
            const auto v = vertex(tokens[2]);
            const auto e = g.edge_index(u, v);
            if (!e) fail("no coupler between " + tokens[1] + " and " + tokens[2]);
            if (seen_edge[*e]) fail("duplicate coupler " + tokens[1] + " " + tokens[2]);
            seen_edge[*e] = true;
            couplers[*e] = detail::parse_number<std::int64_t>(tokens[3], "coupler");
        } else {
            const auto v = vertex(tokens[1]);
            if (seen_field[v]) fail("duplicate field " + tokens[1]);
            seen_field[v] = true;
            fields[v] = detail::parse_number<std::int64_t>(tokens[2], "field");
        }
    }
    for (std::size_t e = 0; e < g.num_edges(); ++e)
        if (!seen_edge[e])
            throw InputError("missing coupler " + std::to_string(g.label(g.edges()[e].u)) + " " +
                             std::to_string(g.label(g.edges()[e].v)));
    Instance inst(std::move(chimera), std::move(couplers), std::move(fields), header->den, header->cls, header->seed);
    if (!conforms_to_class(inst))
        throw InputError("instance values do not match class " + std::string(to_string(header->cls)));
    return inst;
}

}  // namespace spinglass
