#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsr {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotConnectedError : GraphError {
    NotConnectedError() : GraphError("graph is not connected") {}
};
struct CycleSpaceTooLargeError : GraphError {
    explicit CycleSpaceTooLargeError(std::size_t beta, std::size_t cap)
        : GraphError("cycle space too large: beta=" + std::to_string(beta) +
                     " exceeds cap " + std::to_string(cap)) {}
};
struct TooManyTreesError : GraphError {
    explicit TooManyTreesError(std::size_t cap)
        : GraphError("spanning tree enumeration exceeds cap " + std::to_string(cap)) {}
};

// Set of edge ids with bitset semantics. Capacity is the number of edge ids
// of the owning graph; all set operations require equal capacities.
class EdgeSet {
public:
    EdgeSet() = default;
    explicit EdgeSet(std::size_t capacity)
        : capacity_(capacity), words_((capacity + 63) / 64, 0) {}

    static EdgeSet full(std::size_t capacity) {
        EdgeSet s(capacity);
        for (std::size_t e = 0; e < capacity; ++e) s.insert(static_cast<EdgeId>(e));
        return s;
    }

    std::size_t capacity() const { return capacity_; }

    void insert(EdgeId e) { word(e) |= bit(e); }
    void erase(EdgeId e) { word(e) &= ~bit(e); }
    bool contains(EdgeId e) const {
        return e < capacity_ && (words_[e >> 6] & bit(e)) != 0;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
        return n;
    }
    bool empty() const {
        return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
    }

    EdgeSet& operator|=(const EdgeSet& o) { apply(o, [](std::uint64_t& a, std::uint64_t b) { a |= b; }); return *this; }
    EdgeSet& operator&=(const EdgeSet& o) { apply(o, [](std::uint64_t& a, std::uint64_t b) { a &= b; }); return *this; }
    EdgeSet& operator^=(const EdgeSet& o) { apply(o, [](std::uint64_t& a, std::uint64_t b) { a ^= b; }); return *this; }

    friend EdgeSet operator|(EdgeSet a, const EdgeSet& b) { return a |= b; }
    friend EdgeSet operator&(EdgeSet a, const EdgeSet& b) { return a &= b; }
    friend EdgeSet operator^(EdgeSet a, const EdgeSet& b) { return a ^= b; }

    EdgeSet complement() const {
        EdgeSet r(capacity_);
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = ~words_[i];
        r.trim();
        return r;
    }

    bool is_subset_of(const EdgeSet& o) const {
        check_same(o);
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }

    bool operator==(const EdgeSet& o) const {
        return capacity_ == o.capacity_ && words_ == o.words_;
    }

    // Orders by the ascending sequence of member ids, so {0,2} < {1,2} and
    // {0} < {0,1}. At the lowest differing id the holder wins unless the
    // other set is exhausted there (a proper prefix compares smaller).
    static bool lex_less(const EdgeSet& a, const EdgeSet& b) {
        a.check_same(b);
        for (std::size_t i = 0; i < a.words_.size(); ++i) {
            std::uint64_t diff = a.words_[i] ^ b.words_[i];
            if (!diff) continue;
            unsigned bitpos = static_cast<unsigned>(__builtin_ctzll(diff));
            bool a_holds = (a.words_[i] >> bitpos) & 1;
            const EdgeSet& rest = a_holds ? b : a;
            std::uint64_t above = rest.words_[i] & ~((std::uint64_t{2} << bitpos) - 1);
            bool rest_continues = above != 0;
            for (std::size_t k = i + 1; !rest_continues && k < rest.words_.size(); ++k)
                rest_continues = rest.words_[k] != 0;
            return a_holds == rest_continues;
        }
        return false;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            std::uint64_t w = words_[i];
            while (w) {
                unsigned bitpos = static_cast<unsigned>(__builtin_ctzll(w));
                fn(static_cast<EdgeId>(i * 64 + bitpos));
                w &= w - 1;
            }
        }
    }

    std::vector<EdgeId> to_vector() const {
        std::vector<EdgeId> v;
        v.reserve(count());
        for_each([&](EdgeId e) { v.push_back(e); });
        return v;
    }

private:
    std::uint64_t& word(EdgeId e) {
        if (e >= capacity_) throw GraphError("edge id out of range: " + std::to_string(e));
        return words_[e >> 6];
    }
    static std::uint64_t bit(EdgeId e) { return std::uint64_t{1} << (e & 63); }
    void check_same(const EdgeSet& o) const {
        if (capacity_ != o.capacity_) throw GraphError("edge set capacity mismatch");
    }
    template <typename Op>
    void apply(const EdgeSet& o, Op op) {
        check_same(o);
        for (std::size_t i = 0; i < words_.size(); ++i) op(words_[i], o.words_[i]);
        trim();
    }
    void trim() {
        unsigned tail = capacity_ & 63;
        if (!words_.empty() && tail)
            words_.back() &= (std::uint64_t{1} << tail) - 1;
    }

    std::size_t capacity_ = 0;
    std::vector<std::uint64_t> words_;
};

// Undirected simple graph over dense vertex ids. Edge ids are assigned
// densely in insertion order. Self-loops and parallel edges are rejected.
class Graph {
public:
    explicit Graph(std::size_t vertex_count) : vertex_count_(vertex_count), adjacency_(vertex_count) {
        if (vertex_count == 0) throw GraphError("graph needs at least one vertex");
    }

    EdgeId add_edge(VertexId u, VertexId v) {
        if (u >= vertex_count_ || v >= vertex_count_)
            throw GraphError("vertex id out of range");
        if (u == v)
            throw GraphError("self-loop rejected at vertex " + std::to_string(u));
        for (const auto& [w, e] : adjacency_[u])
            if (w == v) throw GraphError("parallel edge rejected: " + std::to_string(u) + "-" + std::to_string(v));
        EdgeId id = static_cast<EdgeId>(edges_.size());
        edges_.emplace_back(u, v);
        adjacency_[u].emplace_back(v, id);
        adjacency_[v].emplace_back(u, id);
        return id;
    }

    std::size_t vertex_count() const { return vertex_count_; }
    std::size_t edge_count() const { return edges_.size(); }

    std::pair<VertexId, VertexId> endpoints(EdgeId e) const { return edges_.at(e); }

    VertexId other_end(EdgeId e, VertexId v) const {
        auto [a, b] = endpoints(e);
        return v == a ? b : a;
    }

    // Neighbors of v as (vertex, edge id), in ascending edge-id order.
    const std::vector<std::pair<VertexId, EdgeId>>& adjacency(VertexId v) const {
        return adjacency_.at(v);
    }

    EdgeSet all_edges() const { return EdgeSet::full(edges_.size()); }
    EdgeSet empty_edge_set() const { return EdgeSet(edges_.size()); }

private:
    std::size_t vertex_count_;
    std::vector<std::pair<VertexId, VertexId>> edges_;
    std::vector<std::vector<std::pair<VertexId, EdgeId>>> adjacency_;
};

namespace detail {

struct UnionFind {
    explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
        std::iota(parent.begin(), parent.end(), VertexId{0});
    }
    VertexId find(VertexId v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    }
    // Returns false if u and v were already in the same component.
    bool unite(VertexId u, VertexId v) {
        VertexId ru = find(u), rv = find(v);
        if (ru == rv) return false;
        if (size[ru] < size[rv]) std::swap(ru, rv);
        parent[rv] = ru;
        size[ru] += size[rv];
        return true;
    }
    std::vector<VertexId> parent;
    std::vector<std::size_t> size;
};

// Breadth-first spanning tree from vertex 0 over the full edge set.
// Neighbor order follows ascending edge ids, so the tree is deterministic.
struct BfsTree {
    std::vector<bool> reached;
    std::vector<EdgeId> parent_edge;   // undefined at root / unreached
    std::vector<VertexId> parent;      // undefined at root / unreached
    std::vector<std::size_t> depth;
    EdgeSet tree_edges;
    bool spanning;
};

inline BfsTree bfs_tree(const Graph& g) {
    BfsTree t{std::vector<bool>(g.vertex_count(), false),
              std::vector<EdgeId>(g.vertex_count(), 0),
              std::vector<VertexId>(g.vertex_count(), 0),
              std::vector<std::size_t>(g.vertex_count(), 0),
              g.empty_edge_set(),
              false};
    std::queue<VertexId> q;
    q.push(0);
    t.reached[0] = true;
    std::size_t seen = 1;
    while (!q.empty()) {
        VertexId v = q.front();
        q.pop();
        for (const auto& [w, e] : g.adjacency(v)) {
            if (t.reached[w]) continue;
            t.reached[w] = true;
            t.parent[w] = v;
            t.parent_edge[w] = e;
            t.depth[w] = t.depth[v] + 1;
            t.tree_edges.insert(e);
            ++seen;
            q.push(w);
        }
    }
    t.spanning = (seen == g.vertex_count());
    return t;
}

} // namespace detail

inline bool is_connected(const Graph& g, const EdgeSet& active) {
    std::vector<bool> reached(g.vertex_count(), false);
    std::queue<VertexId> q;
    q.push(0);
    reached[0] = true;
    std::size_t seen = 1;
    while (!q.empty()) {
        VertexId v = q.front();
        q.pop();
        for (const auto& [w, e] : g.adjacency(v)) {
            if (!active.contains(e) || reached[w]) continue;
            reached[w] = true;
            ++seen;
            q.push(w);
        }
    }
    return seen == g.vertex_count();
}

inline bool is_acyclic(const Graph& g, const EdgeSet& active) {
    detail::UnionFind uf(g.vertex_count());
    bool acyclic = true;
    active.for_each([&](EdgeId e) {
        auto [u, v] = g.endpoints(e);
        if (!uf.unite(u, v)) acyclic = false;
    });
    return acyclic;
}

inline bool is_tree(const Graph& g, const EdgeSet& active) {
    return active.count() == g.vertex_count() - 1 && is_connected(g, active);
}

// The acyclicity route to the same predicate; must agree with is_tree on
// every input (equivalence of the two tree characterizations).
inline bool is_tree_by_acyclicity(const Graph& g, const EdgeSet& active) {
    return active.count() == g.vertex_count() - 1 && is_acyclic(g, active);
}

struct Cycle {
    EdgeSet edges;
};

// A valid cycle induces a connected subgraph in which every touched vertex
// has degree exactly 2.
inline bool is_valid_cycle(const Graph& g, const EdgeSet& edges) {
    if (edges.empty()) return false;
    std::vector<int> degree(g.vertex_count(), 0);
    edges.for_each([&](EdgeId e) {
        auto [u, v] = g.endpoints(e);
        ++degree[u];
        ++degree[v];
    });
    VertexId start = 0;
    bool found = false;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        if (degree[v] == 0) continue;
        if (degree[v] != 2) return false;
        if (!found) {
            start = v;
            found = true;
        }
    }
    // Walk the cycle from one touched vertex; it must cover every member edge.
    std::vector<bool> used(g.edge_count(), false);
    VertexId v = start;
    std::size_t walked = 0;
    while (true) {
        bool advanced = false;
        for (const auto& [w, e] : g.adjacency(v)) {
            if (!edges.contains(e) || used[e]) continue;
            used[e] = true;
            ++walked;
            v = w;
            advanced = true;
            break;
        }
        if (!advanced) break;
    }
    return v == start && walked == edges.count();
}

struct CycleBasis {
    std::vector<Cycle> cycles;
    std::vector<EdgeId> chord_of; // chord_of[k] defines cycles[k]
};

// Spanning tree plus chords; the breadth-first tree rooted at vertex 0.
inline std::pair<EdgeSet, EdgeSet> spanning_tree(const Graph& g) {
    auto t = detail::bfs_tree(g);
    if (!t.spanning) throw NotConnectedError{};
    EdgeSet chords = t.tree_edges.complement();
    return {t.tree_edges, chords};
}

// One fundamental cycle per chord: the chord plus the tree path between its
// endpoints. Basis length equals the cyclomatic number |E| - |V| + 1.
inline CycleBasis fundamental_cycle_basis(const Graph& g) {
    auto t = detail::bfs_tree(g);
    if (!t.spanning) throw NotConnectedError{};
    CycleBasis basis;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        if (t.tree_edges.contains(e)) continue;
        auto [u, v] = g.endpoints(e);
        EdgeSet cyc = g.empty_edge_set();
        cyc.insert(e);
        VertexId a = u, b = v;
        while (t.depth[a] > t.depth[b]) {
            cyc.insert(t.parent_edge[a]);
            a = t.parent[a];
        }
        while (t.depth[b] > t.depth[a]) {
            cyc.insert(t.parent_edge[b]);
            b = t.parent[b];
        }
        while (a != b) {
            cyc.insert(t.parent_edge[a]);
            cyc.insert(t.parent_edge[b]);
            a = t.parent[a];
            b = t.parent[b];
        }
        basis.cycles.push_back(Cycle{std::move(cyc)});
        basis.chord_of.push_back(e);
    }
    return basis;
}

// Union of the basis cycles' edge sets. By the basis-independence of the
// cycle space this equals the union over all cycles of the graph; its
// complement is exactly the bridge set.
inline EdgeSet cycle_edges(const Graph& g, const CycleBasis& basis) {
    EdgeSet u = g.empty_edge_set();
    for (const auto& c : basis.cycles) u |= c.edges;
    return u;
}

inline EdgeSet cycle_edges(const Graph& g) {
    return cycle_edges(g, fundamental_cycle_basis(g));
}

// All simple cycles of a connected graph, each exactly once, ordered by
// cardinality then lexicographic edge ids. Every cycle is a symmetric
// difference of fundamental cycles, so the nonzero combinations of the
// basis are generated and filtered by the cycle invariant.
inline std::vector<Cycle> enumerate_all_cycles(const Graph& g, std::size_t beta_cap = 20) {
    CycleBasis basis = fundamental_cycle_basis(g);
    std::size_t beta = basis.cycles.size();
    if (beta > beta_cap) throw CycleSpaceTooLargeError(beta, beta_cap);
    std::vector<Cycle> out;
    std::uint64_t combos = (std::uint64_t{1} << beta);
    for (std::uint64_t mask = 1; mask < combos; ++mask) {
        EdgeSet edges = g.empty_edge_set();
        for (std::size_t k = 0; k < beta; ++k)
            if (mask & (std::uint64_t{1} << k)) edges ^= basis.cycles[k].edges;
        if (is_valid_cycle(g, edges)) out.push_back(Cycle{std::move(edges)});
    }
    std::sort(out.begin(), out.end(), [](const Cycle& a, const Cycle& b) {
        std::size_t ca = a.edges.count(), cb = b.edges.count();
        if (ca != cb) return ca < cb;
        return EdgeSet::lex_less(a.edges, b.edges);
    });
    return out;
}

namespace detail {

inline void spanning_tree_rec(const Graph& g, EdgeId next, std::size_t picked,
                              UnionFind& uf, EdgeSet& current,
                              std::vector<EdgeSet>& out, std::size_t cap) {
    std::size_t need = g.vertex_count() - 1 - picked;
    if (need == 0) {
        // An acyclic edge set of size |V|-1 has exactly one component.
        if (out.size() >= cap) throw TooManyTreesError(cap);
        out.push_back(current);
        return;
    }
    if (g.edge_count() - next < need) return;
    auto [u, v] = g.endpoints(next);
    UnionFind saved = uf;
    if (uf.unite(u, v)) {
        current.insert(next);
        spanning_tree_rec(g, next + 1, picked + 1, uf, current, out, cap);
        current.erase(next);
        uf = saved;
    }
    spanning_tree_rec(g, next + 1, picked, uf, current, out, cap);
}

} // namespace detail

// Every spanning tree exactly once, emitted in lexicographic order of the
// included edge-id sets.
inline std::vector<EdgeSet> enumerate_spanning_trees(const Graph& g, std::size_t cap = 1'000'000) {
    if (!is_connected(g, g.all_edges())) throw NotConnectedError{};
    std::vector<EdgeSet> out;
    detail::UnionFind uf(g.vertex_count());
    EdgeSet current = g.empty_edge_set();
    detail::spanning_tree_rec(g, 0, 0, uf, current, out, cap);
    return out;
}

// Graphviz rendering with an optional highlighted edge set (highlighted
// edges drawn gray and thick, the rest black).
inline std::string to_dot(const Graph& g, const EdgeSet* highlight = nullptr,
                          const std::string& name = "g") {
    std::ostringstream os;
    os << "graph " << name << " {\n";
    os << "  node [shape=circle fontsize=10];\n";
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        os << "  " << v << ";\n";
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        os << "  " << u << " -- " << v << " [label=\"e" << e << "\"";
        if (highlight && highlight->contains(e))
            os << " color=gray penwidth=2.5";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace dsr
