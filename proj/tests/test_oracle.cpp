#include <catch2/catch_amalgamated.hpp>

#include "dsr/oracle.hpp"
#include "test_support.hpp"

using namespace dsr;
using namespace testsup;

TEST_CASE("brute-force cycle counts") {
    CHECK(brute_force_cycles(triangle()).size() == 1);
    CHECK(brute_force_cycles(k4()).size() == 7);
    CHECK(brute_force_cycles(theta_graph()).size() == 3);
    CHECK(brute_force_cycles(path_graph(6)).empty());
    CHECK(brute_force_cycles(two_triangles_bridge()).size() == 2);

    Graph big(26);
    for (VertexId v = 0; v + 1 < 26; ++v) big.add_edge(v, v + 1);
    CHECK_THROWS_AS(brute_force_cycles(big), BruteForceTooLargeError);
}

TEST_CASE("exhaustive optimum on a pure tree") {
    Network n = load_network(fixture("treefix.json"));
    OracleResult r = exhaustive_optimum(n);
    CHECK(r.tree_count == 1);
    CHECK(r.subset_count == 1);
    CHECK(r.cycle_count == 0);
    CHECK(r.optimum_topology.closed == baseline_topology(n).closed);
}

TEST_CASE("exhaustive optimum on the triangle") {
    Network n = load_network(fixture("tri3.json"));
    OracleResult r = exhaustive_optimum(n);
    CHECK(r.tree_count == 3);
    CHECK(r.subset_count == 3);
    CHECK(r.cycle_count == 1);
    CHECK(r.optimum_solution.converged);
    // picks the minimum over the three candidate trees
    double best = r.optimum_f;
    for (EdgeId open = 0; open < 3; ++open) {
        Topology t{n.switchable_lines()};
        t.closed.erase(open);
        PfSolution sol = solve_power_flow(n, t);
        CHECK(best <= sol.f_obj + kTieEps);
    }
}

TEST_CASE("subset count strictly dominates tree count beside a bridge") {
    Network n = load_network(fixture("twocycle8.json"));
    OracleResult r = exhaustive_optimum(n);
    CHECK(r.subset_count == 36); // C(9,7)
    CHECK(r.tree_count == 16);
    CHECK(r.subset_count > r.tree_count);
}

TEST_CASE("subset filtering agrees with the recursive tree enumerator") {
    for (const char* f : {"tri3.json", "ring6.json", "twocycle8.json", "mesh12.json"}) {
        INFO(f);
        Network n = load_network(fixture(f));
        Graph g(n.buses.size());
        for (const auto& l : n.lines) g.add_edge(l.from, l.to);
        CHECK(enumerate_spanning_trees(g).size() == exhaustive_optimum(n).tree_count);
    }
}

TEST_CASE("oracle guards") {
    Network n = load_network(fixture("ring6.json"));
    CHECK_THROWS_AS(exhaustive_optimum(n, {}, 2), TooManyTreesError);

    // forcing a cycle closed leaves no candidate spanning tree
    Network all_fixed = load_network(fixture("tri3.json"));
    for (auto& l : all_fixed.lines) l.switchable = false;
    CHECK_THROWS_AS(exhaustive_optimum(all_fixed), AllInfeasibleError);
}
