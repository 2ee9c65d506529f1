#pragma once

// Chimera graphs C(m, n, k) and the dense graph view shared by every solver.
//
// Vertex ids: cells row-major, then cell side (the vertically coupled shore
// before the horizontally coupled shore), then shore index:
//
//     id = ((row * cols + col) * 2 + side) * shore + index
//
// Side 0 qubits couple to the same index in the cells above and below, side 1
// qubits to the same index in the cells left and right. The bipartition used by
// the samplers is (row + col + side) mod 2.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spinglass {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using VertexId = std::uint32_t;

struct Edge {
    std::uint32_t u = 0;  // dense index, u < v
    std::uint32_t v = 0;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Neighbor {
    std::uint32_t vertex;
    std::uint32_t edge;
};

enum class Side : std::uint8_t { A = 0, B = 1 };

/// Undirected simple graph over dense vertex indices 0..N-1, each carrying an
/// external label. Edges are stored canonically (u < v, sorted).
class Graph {
public:
    Graph() = default;

    Graph(std::vector<VertexId> labels, std::vector<Edge> edges) : labels_(std::move(labels)), edges_(std::move(edges)) {
        for (auto& e : edges_) {
            if (e.u == e.v || e.u >= labels_.size() || e.v >= labels_.size())
                throw InputError("graph edge references an invalid vertex");
            if (e.u > e.v) std::swap(e.u, e.v);
        }
        std::sort(edges_.begin(), edges_.end());
        if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
            throw InputError("graph has a duplicate edge");
        build_adjacency();
        color_by_bfs();
    }

    /// Graph with a known 2-coloring (Chimera supplies its own).
    Graph(std::vector<VertexId> labels, std::vector<Edge> edges, std::vector<Side> sides)
        : Graph(std::move(labels), std::move(edges)) {
        if (sides.size() != labels_.size()) throw InputError("side labels do not match vertices");
        sides_ = std::move(sides);
        bipartite_ = std::none_of(edges_.begin(), edges_.end(),
                                  [&](const Edge& e) { return sides_[e.u] == sides_[e.v]; });
        build_sweep_order();
    }

    std::size_t num_vertices() const { return labels_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<VertexId>& labels() const { return labels_; }
    const std::vector<Edge>& edges() const { return edges_; }
    VertexId label(std::uint32_t v) const { return labels_[v]; }

    std::span<const Neighbor> neighbors(std::uint32_t v) const {
        return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
    }
    std::size_t degree(std::uint32_t v) const { return offsets_[v + 1] - offsets_[v]; }

    bool is_bipartite() const { return bipartite_; }
    Side side(std::uint32_t v) const { return sides_[v]; }
    const std::vector<Side>& sides() const { return sides_; }

    /// Side-A vertices followed by side-B vertices, each ascending.
    const std::vector<std::uint32_t>& sweep_order() const { return sweep_order_; }

    std::optional<std::uint32_t> index_of(VertexId label) const {
        const auto it = std::lower_bound(sorted_labels_.begin(), sorted_labels_.end(), std::pair{label, 0u},
                                         [](const auto& a, const auto& b) { return a.first < b.first; });
        if (it == sorted_labels_.end() || it->first != label) return std::nullopt;
        return it->second;
    }

    std::optional<std::uint32_t> edge_index(std::uint32_t a, std::uint32_t b) const {
        for (const auto& n : neighbors(a))
            if (n.vertex == b) return n.edge;
        return std::nullopt;
    }

    friend bool operator==(const Graph& x, const Graph& y) {
        return x.labels_ == y.labels_ && x.edges_ == y.edges_;
    }

private:
    void build_adjacency() {
        const auto n = labels_.size();
        offsets_.assign(n + 1, 0);
        for (const auto& e : edges_) {
            ++offsets_[e.u + 1];
            ++offsets_[e.v + 1];
        }
        for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
        adjacency_.resize(offsets_[n]);
        auto fill = offsets_;
        for (std::uint32_t ei = 0; ei < edges_.size(); ++ei) {
            const auto& e = edges_[ei];
            adjacency_[fill[e.u]++] = {e.v, ei};
            adjacency_[fill[e.v]++] = {e.u, ei};
        }
        sorted_labels_.clear();
        for (std::uint32_t i = 0; i < n; ++i) sorted_labels_.emplace_back(labels_[i], i);
        std::sort(sorted_labels_.begin(), sorted_labels_.end());
        if (std::adjacent_find(sorted_labels_.begin(), sorted_labels_.end(), [](const auto& a, const auto& b) {
                return a.first == b.first;
            }) != sorted_labels_.end())
            throw InputError("graph has duplicate vertex labels");
    }

    void color_by_bfs() {
        const auto n = labels_.size();
        std::vector<int> color(n, -1);
        bipartite_ = true;
        for (std::uint32_t s = 0; s < n; ++s) {
            if (color[s] >= 0) continue;
            color[s] = 0;
            std::queue<std::uint32_t> todo;
            todo.push(s);
            while (!todo.empty()) {
                const auto v = todo.front();
                todo.pop();
                for (const auto& nb : neighbors(v)) {
                    if (color[nb.vertex] < 0) {
                        color[nb.vertex] = 1 - color[v];
                        todo.push(nb.vertex);
                    } else if (color[nb.vertex] == color[v]) {
                        bipartite_ = false;
                    }
                }
            }
        }
        sides_.resize(n);
        for (std::size_t i = 0; i < n; ++i) sides_[i] = bipartite_ ? static_cast<Side>(color[i]) : Side::A;
        build_sweep_order();
    }

    void build_sweep_order() {
        sweep_order_.clear();
        for (auto want : {Side::A, Side::B})
            for (std::uint32_t i = 0; i < labels_.size(); ++i)
                if (sides_[i] == want) sweep_order_.push_back(i);
    }

    std::vector<VertexId> labels_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> adjacency_;
    std::vector<std::pair<VertexId, std::uint32_t>> sorted_labels_;
    std::vector<Side> sides_;
    std::vector<std::uint32_t> sweep_order_;
    bool bipartite_ = true;
};

struct ChimeraCoord {
    std::uint32_t row;
    std::uint32_t col;
    std::uint32_t side;  // 0: vertical coupling, 1: horizontal coupling
    std::uint32_t index;
};

using VertexPair = std::pair<VertexId, VertexId>;

class ChimeraGraph {
public:
    ChimeraGraph(std::uint32_t rows, std::uint32_t cols, std::uint32_t shore, std::set<VertexId> broken = {},
                 std::set<VertexPair> broken_edges = {})
        : rows_(rows), cols_(cols), shore_(shore), broken_(std::move(broken)) {
        if (rows == 0 || cols == 0 || shore == 0) throw InputError("chimera dimensions must be positive");
        const std::uint64_t total = std::uint64_t{rows} * cols * 2 * shore;
        if (total > std::numeric_limits<VertexId>::max()) throw InputError("chimera graph too large");
        for (auto b : broken_)
            if (b >= total) throw InputError("broken vertex id " + std::to_string(b) + " out of range");
        for (auto [a, b] : broken_edges) {
            if (a > b) std::swap(a, b);
            if (!is_chimera_edge(a, b))
                throw InputError("broken edge " + std::to_string(a) + "-" + std::to_string(b) +
                                 " is not a chimera coupler");
            broken_edges_.insert({a, b});
        }

        std::vector<VertexId> labels;
        std::vector<Side> sides;
        dense_.assign(total, -1);
        for (VertexId id = 0; id < total; ++id) {
            if (broken_.count(id)) continue;
            dense_[id] = static_cast<std::int64_t>(labels.size());
            labels.push_back(id);
            const auto c = coord(id);
            sides.push_back(static_cast<Side>((c.row + c.col + c.side) % 2));
        }
        std::vector<Edge> edges;
        auto add = [&](VertexId a, VertexId b) {
            if (a > b) std::swap(a, b);
            if (dense_[a] < 0 || dense_[b] < 0 || broken_edges_.count({a, b})) return;
            edges.push_back({static_cast<std::uint32_t>(dense_[a]), static_cast<std::uint32_t>(dense_[b])});
        };
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c)
                for (std::uint32_t i = 0; i < shore; ++i) {
                    for (std::uint32_t j = 0; j < shore; ++j) add(id_of({r, c, 0, i}), id_of({r, c, 1, j}));
                    if (r + 1 < rows) add(id_of({r, c, 0, i}), id_of({r + 1, c, 0, i}));
                    if (c + 1 < cols) add(id_of({r, c, 1, i}), id_of({r, c + 1, 1, i}));
                }
        graph_ = Graph(std::move(labels), std::move(edges), std::move(sides));
    }

    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }
    std::uint32_t shore() const { return shore_; }
    std::size_t total_sites() const { return std::size_t{rows_} * cols_ * 2 * shore_; }
    const std::set<VertexId>& broken() const { return broken_; }
    const std::set<VertexPair>& broken_edges() const { return broken_edges_; }
    const Graph& graph() const { return graph_; }

    VertexId id_of(ChimeraCoord c) const { return ((c.row * cols_ + c.col) * 2 + c.side) * shore_ + c.index; }

    ChimeraCoord coord(VertexId id) const {
        const std::uint32_t index = id % shore_;
        id /= shore_;
        const std::uint32_t side = id % 2;
        id /= 2;
        return {id / cols_, id % cols_, side, index};
    }

    /// Dense index of an active vertex, nullopt if broken or out of range.
    std::optional<std::uint32_t> dense_index(VertexId id) const {
        if (id >= dense_.size() || dense_[id] < 0) return std::nullopt;
        return static_cast<std::uint32_t>(dense_[id]);
    }

    bool is_chimera_edge(VertexId a, VertexId b) const {
        if (a >= total_sites() || b >= total_sites() || a == b) return false;
        const auto x = coord(a), y = coord(b);
        if (x.row == y.row && x.col == y.col) return x.side != y.side;
        if (x.side != y.side || x.index != y.index) return false;
        if (x.side == 0) return x.col == y.col && (x.row + 1 == y.row || y.row + 1 == x.row);
        return x.row == y.row && (x.col + 1 == y.col || y.col + 1 == x.col);
    }

    friend bool operator==(const ChimeraGraph& x, const ChimeraGraph& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.shore_ == y.shore_ && x.broken_ == y.broken_ &&
               x.broken_edges_ == y.broken_edges_;
    }

private:
    std::uint32_t rows_, cols_, shore_;
    std::set<VertexId> broken_;
    std::set<VertexPair> broken_edges_;
    std::vector<std::int64_t> dense_;
    Graph graph_;
};

inline std::shared_ptr<const ChimeraGraph> build_chimera(std::uint32_t rows, std::uint32_t cols, std::uint32_t shore = 4,
                                                         std::set<VertexId> broken = {},
                                                         std::set<VertexPair> broken_edges = {}) {
    return std::make_shared<const ChimeraGraph>(rows, cols, shore, std::move(broken), std::move(broken_edges));
}

struct Bipartition {
    std::vector<std::uint32_t> a;  // dense indices
    std::vector<std::uint32_t> b;
};

inline Bipartition bipartite_sides(const Graph& g) {
    Bipartition out;
    for (std::uint32_t v = 0; v < g.num_vertices(); ++v) (g.side(v) == Side::A ? out.a : out.b).push_back(v);
    return out;
}

inline Bipartition bipartite_sides(const ChimeraGraph& g) { return bipartite_sides(g.graph()); }

// Graph spec text format:
//
//     chimera m n k
//     broken v1 v2 ...        (any number of lines)
//     broken_edge u v         (any number of lines)
//
// Blank lines and '#' comments are ignored.

namespace detail {

inline std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

template <class T>
T parse_number(const std::string& token, const char* what) {
    std::istringstream in(token);
    T value{};
    in >> value;
    if (!in || !in.eof()) throw InputError(std::string("malformed ") + what + ": '" + token + "'");
    return value;
}

}  // namespace detail

/// Handles one `broken ...` or `broken_edge ...` line; false when the keyword is neither.
inline bool parse_broken_line(const std::vector<std::string>& tokens, std::set<VertexId>& broken,
                              std::set<VertexPair>& broken_edges) {
    if (tokens.empty()) return false;
    if (tokens[0] == "broken") {
        for (std::size_t i = 1; i < tokens.size(); ++i)
            broken.insert(detail::parse_number<VertexId>(tokens[i], "vertex id"));
        return true;
    }
    if (tokens[0] == "broken_edge") {
        if (tokens.size() != 3) throw InputError("broken_edge expects two vertex ids");
        auto a = detail::parse_number<VertexId>(tokens[1], "vertex id");
        auto b = detail::parse_number<VertexId>(tokens[2], "vertex id");
        if (a > b) std::swap(a, b);
        broken_edges.insert({a, b});
        return true;
    }
    return false;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
    std::istringstream in(detail::strip_comment(line));
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

inline std::shared_ptr<const ChimeraGraph> parse_graph_spec(std::istream& in) {
    std::optional<std::array<std::uint32_t, 3>> dims;
    std::set<VertexId> broken;
    std::set<VertexPair> broken_edges;
    for (std::string line; std::getline(in, line);) {
        const auto tokens = split_tokens(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "chimera") {
            if (dims) throw InputError("duplicate chimera header");
            if (tokens.size() != 4) throw InputError("chimera header expects m n k");
            dims = {detail::parse_number<std::uint32_t>(tokens[1], "rows"),
                    detail::parse_number<std::uint32_t>(tokens[2], "cols"),
                    detail::parse_number<std::uint32_t>(tokens[3], "shore")};
        } else if (!dims) {
            throw InputError("graph spec must start with a chimera header");
        } else if (!parse_broken_line(tokens, broken, broken_edges)) {
            throw InputError("unknown graph spec line: " + line);
        }
    }
    if (!dims) throw InputError("graph spec has no chimera header");
    return build_chimera((*dims)[0], (*dims)[1], (*dims)[2], std::move(broken), std::move(broken_edges));
}

inline void write_broken_lines(std::ostream& out, const ChimeraGraph& g) {
    if (!g.broken().empty()) {
        out << "broken";
        for (auto b : g.broken()) out << ' ' << b;
        out << '\n';
    }
    for (const auto& [a, b] : g.broken_edges()) out << "broken_edge " << a << ' ' << b << '\n';
}

inline void write_graph_spec(std::ostream& out, const ChimeraGraph& g) {
    out << "chimera " << g.rows() << ' ' << g.cols() << ' ' << g.shore() << '\n';
    write_broken_lines(out, g);
}

}  // namespace spinglass
