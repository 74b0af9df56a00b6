#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dsr/graph.hpp"
#include "dsr/network.hpp"
#include "dsr/power_flow.hpp"
#include "dsr/reconfig.hpp"

// Brute-force verification engine. Deliberately does no constraint
// propagation and no cycle-space reasoning: cycles come from filtering raw
// edge subsets, optima from power-flowing every spanning tree.

namespace dsr {

struct BruteForceTooLargeError : std::runtime_error {
    BruteForceTooLargeError() : std::runtime_error("graph too large for brute-force enumeration") {}
};

// Every edge subset that satisfies the cycle invariant, in the same
// (cardinality, lexicographic) order the enumerator promises.
inline std::vector<Cycle> brute_force_cycles(const Graph& g) {
    if (g.edge_count() > 24) throw BruteForceTooLargeError{};
    std::vector<Cycle> out;
    std::uint64_t total = std::uint64_t{1} << g.edge_count();
    for (std::uint64_t mask = 1; mask < total; ++mask) {
        EdgeSet edges = g.empty_edge_set();
        for (std::size_t e = 0; e < g.edge_count(); ++e)
            if (mask & (std::uint64_t{1} << e)) edges.insert(static_cast<EdgeId>(e));
        if (is_valid_cycle(g, edges)) out.push_back(Cycle{std::move(edges)});
    }
    std::sort(out.begin(), out.end(), [](const Cycle& a, const Cycle& b) {
        std::size_t ca = a.edges.count(), cb = b.edges.count();
        if (ca != cb) return ca < cb;
        return EdgeSet::lex_less(a.edges, b.edges);
    });
    return out;
}

struct OracleResult {
    double optimum_f = 0.0;
    Topology optimum_topology;
    PfSolution optimum_solution;
    std::size_t tree_count = 0;   // spanning trees of the full line graph
    std::size_t subset_count = 0; // |V|-1-edge subsets of the full line set
    std::size_t cycle_count = 0;
};

namespace detail {

inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    // Exact while it fits; saturates at cap + 1 beyond.
    unsigned long long r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > cap) return cap + 1;
    }
    return static_cast<std::size_t>(r);
}

} // namespace detail

// Ground truth for the reconfiguration solvers: every |V|-1-edge subset of
// the line set is tested for treeness, trees containing all non-switchable
// lines are power-flowed, and the best converged objective wins with the
// solver's own tie-break.
inline OracleResult exhaustive_optimum(const Network& n, const NewtonOptions& newton = {},
                                       std::size_t cap = 1'000'000) {
    Graph g(n.buses.size());
    for (const auto& l : n.lines) g.add_edge(l.from, l.to);

    std::size_t m = n.lines.size();
    std::size_t k = n.buses.size() - 1;
    if (detail::binomial_capped(m, k, cap) > cap) throw TooManyTreesError(cap);

    EdgeSet flag_switchable = n.switchable_lines();
    EdgeSet forced = flag_switchable.complement();

    OracleResult res;
    if (g.edge_count() <= 24) res.cycle_count = brute_force_cycles(g).size();

    bool have_best = false;
    double best_f = 0.0;
    EdgeSet best_closed;
    PfSolution best_sol;
    Topology best_topology;

    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    bool more = k <= m;
    if (k == 0) more = false; // single-bus network: the empty tree
    while (more) {
        ++res.subset_count;
        EdgeSet candidate(m);
        for (std::size_t i : idx) candidate.insert(static_cast<EdgeId>(i));
        if (is_tree(g, candidate)) {
            ++res.tree_count;
            if (forced.is_subset_of(candidate)) {
                Topology t{candidate & flag_switchable};
                PfOutcome out = try_solve_power_flow(n, t, newton);
                if (out.status == PfStatus::Converged &&
                    (!have_best ||
                     improves(out.solution.f_obj, t.closed, best_f, best_closed))) {
                    have_best = true;
                    best_f = out.solution.f_obj;
                    best_closed = t.closed;
                    best_sol = std::move(out.solution);
                    best_topology = t;
                }
            }
        }
        // next k-combination of {0..m-1}
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == m - k + (i - 1)) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }

    if (k == 0) {
        // Degenerate single-bus case: the unique (empty) topology.
        Topology t{EdgeSet(m)};
        PfOutcome out = try_solve_power_flow(n, t, newton);
        if (out.status == PfStatus::Converged) {
            have_best = true;
            best_f = out.solution.f_obj;
            best_sol = std::move(out.solution);
            best_topology = t;
        }
        res.subset_count = 1;
        res.tree_count = 1;
    }

    if (!have_best) throw AllInfeasibleError{};
    res.optimum_f = best_f;
    res.optimum_topology = best_topology;
    res.optimum_solution = std::move(best_sol);
    return res;
}

} // namespace dsr
