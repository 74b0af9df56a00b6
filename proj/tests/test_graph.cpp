#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "dsr/graph.hpp"
#include "dsr/oracle.hpp"
#include "test_support.hpp"

using namespace dsr;
using namespace testsup;

TEST_CASE("graph construction rejects degenerate edges") {
    Graph g(3);
    g.add_edge(0, 1);
    CHECK_THROWS_AS(g.add_edge(1, 1), GraphError);
    CHECK_THROWS_AS(g.add_edge(1, 0), GraphError); // parallel, either orientation
    CHECK_THROWS_AS(g.add_edge(0, 7), GraphError);
    CHECK(g.edge_count() == 1);
}

TEST_CASE("edge set algebra and ordering") {
    EdgeSet a(70), b(70);
    a.insert(0);
    a.insert(2);
    a.insert(69);
    b.insert(2);
    b.insert(69);
    CHECK(a.count() == 3);
    CHECK((a & b).count() == 2);
    CHECK((a | b).count() == 3);
    CHECK((a ^ b).to_vector() == std::vector<EdgeId>{0});
    CHECK(b.is_subset_of(a));
    CHECK_FALSE(a.is_subset_of(b));
    CHECK(a.complement().count() == 67);

    EdgeSet c(70), d(70);
    c.insert(0);
    c.insert(2);
    d.insert(1);
    d.insert(2);
    CHECK(EdgeSet::lex_less(c, d));  // {0,2} < {1,2}
    CHECK_FALSE(EdgeSet::lex_less(d, c));
    EdgeSet e(70);
    e.insert(0);
    CHECK(EdgeSet::lex_less(e, c));  // {0} < {0,2}
    CHECK_FALSE(EdgeSet::lex_less(c, c));
}

TEST_CASE("is_connected on small graphs") {
    Graph p3 = path_graph(3);
    CHECK(is_connected(p3, p3.all_edges()));
    EdgeSet no_mid = p3.all_edges();
    no_mid.erase(1);
    CHECK_FALSE(is_connected(p3, no_mid));

    Graph tri = triangle();
    for (EdgeId e = 0; e < 3; ++e) {
        EdgeSet act = tri.all_edges();
        act.erase(e);
        CHECK(is_connected(tri, act));
    }
}

TEST_CASE("is_tree examples") {
    Graph star = star_graph(5);
    CHECK(is_tree(star, star.all_edges()));
    CHECK(is_tree_by_acyclicity(star, star.all_edges()));

    Graph tri = triangle();
    CHECK_FALSE(is_tree(tri, tri.all_edges()));
    CHECK_FALSE(is_tree_by_acyclicity(tri, tri.all_edges()));

    Graph g(4);
    g.add_edge(0, 1);
    g.add_edge(2, 3);
    CHECK_FALSE(is_tree(g, g.all_edges()));
    CHECK_FALSE(is_tree_by_acyclicity(g, g.all_edges()));
}

TEST_CASE("tree characterizations agree on random subsets") {
    // (acyclic and |V|-1 edges) iff (connected and |V|-1 edges)
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        Graph g = random_connected_graph(rng, 2, 10, 6);
        EdgeSet sub = random_edge_subset(rng, g, g.vertex_count() - 1);
        CHECK(is_tree(g, sub) == is_tree_by_acyclicity(g, sub));
    }
}

TEST_CASE("spanning tree and chords") {
    Graph p4 = path_graph(4);
    auto [t1, c1] = spanning_tree(p4);
    CHECK(t1 == p4.all_edges());
    CHECK(c1.empty());

    Graph tri = triangle();
    auto [t2, c2] = spanning_tree(tri);
    CHECK(t2.count() == 2);
    CHECK(c2.count() == 1);
    CHECK(is_tree(tri, t2));

    Graph k = k4();
    auto [t3, c3] = spanning_tree(k);
    CHECK(t3.count() == 3);
    CHECK(c3.count() == 3); // beta = 6 - 4 + 1
    CHECK(is_tree(k, t3));

    Graph split(4);
    split.add_edge(0, 1);
    split.add_edge(2, 3);
    CHECK_THROWS_AS(spanning_tree(split), NotConnectedError);
}

TEST_CASE("fundamental cycle basis") {
    Graph p5 = path_graph(5);
    CHECK(fundamental_cycle_basis(p5).cycles.empty());

    Graph tri = triangle();
    CycleBasis tb = fundamental_cycle_basis(tri);
    REQUIRE(tb.cycles.size() == 1);
    CHECK(tb.cycles[0].edges == tri.all_edges());

    Graph k = k4();
    CycleBasis kb = fundamental_cycle_basis(k);
    REQUIRE(kb.cycles.size() == 3);
    auto [tree, chords] = spanning_tree(k);
    for (std::size_t i = 0; i < kb.cycles.size(); ++i) {
        CHECK(is_valid_cycle(k, kb.cycles[i].edges));
        CHECK(kb.cycles[i].edges.contains(kb.chord_of[i]));
        CHECK(chords.contains(kb.chord_of[i]));
        // the cycle is the chord plus tree edges only
        EdgeSet rest = kb.cycles[i].edges;
        rest.erase(kb.chord_of[i]);
        CHECK(rest.is_subset_of(tree));
    }
}

TEST_CASE("enumerate_all_cycles on named graphs") {
    CHECK(enumerate_all_cycles(triangle()).size() == 1);
    CHECK(enumerate_all_cycles(theta_graph()).size() == 3);
    CHECK(enumerate_all_cycles(k4()).size() == 7);

    // deterministic order: cardinality first, then lexicographic edge ids
    auto cycles = enumerate_all_cycles(k4());
    for (std::size_t i = 1; i < cycles.size(); ++i) {
        std::size_t prev = cycles[i - 1].edges.count(), cur = cycles[i].edges.count();
        CHECK(prev <= cur);
        if (prev == cur) CHECK(EdgeSet::lex_less(cycles[i - 1].edges, cycles[i].edges));
    }

    CHECK_THROWS_AS(enumerate_all_cycles(k4(), 2), CycleSpaceTooLargeError);
}

TEST_CASE("enumeration equals brute force on small random graphs") {
    std::mt19937 rng(11);
    for (int i = 0; i < 40; ++i) {
        Graph g = random_connected_graph(rng, 2, 8, 5);
        auto fast = enumerate_all_cycles(g);
        auto slow = brute_force_cycles(g);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t c = 0; c < fast.size(); ++c) {
            CHECK(fast[c].edges == slow[c].edges);
            CHECK(is_valid_cycle(g, fast[c].edges));
        }
    }
}

TEST_CASE("cycle edges and bridges") {
    Graph p4 = path_graph(4);
    CHECK(cycle_edges(p4).empty());

    Graph tri = triangle();
    CHECK(cycle_edges(tri) == tri.all_edges());

    Graph tt = two_triangles_bridge();
    EdgeSet ce = cycle_edges(tt);
    CHECK(ce.count() == 6);
    CHECK_FALSE(ce.contains(3)); // the bridge

    // removal keeps the graph connected iff the edge lies on a cycle
    std::mt19937 rng(23);
    for (int i = 0; i < 100; ++i) {
        Graph g = random_connected_graph(rng, 2, 10, 6);
        EdgeSet ces = cycle_edges(g);
        for (EdgeId e = 0; e < g.edge_count(); ++e) {
            EdgeSet act = g.all_edges();
            act.erase(e);
            CHECK(is_connected(g, act) == ces.contains(e));
        }
    }
}

TEST_CASE("basis union equals union over all cycles") {
    std::mt19937 rng(31);
    for (int i = 0; i < 100; ++i) {
        Graph g = random_connected_graph(rng, 2, 10, 6);
        EdgeSet from_basis = cycle_edges(g, fundamental_cycle_basis(g));
        EdgeSet from_all(g.edge_count());
        for (const auto& c : enumerate_all_cycles(g)) from_all |= c.edges;
        CHECK(from_basis == from_all);
    }
}

TEST_CASE("spanning tree enumeration") {
    Graph p4 = path_graph(4);
    auto trees_p4 = enumerate_spanning_trees(p4);
    REQUIRE(trees_p4.size() == 1);
    CHECK(trees_p4[0] == p4.all_edges());

    CHECK(enumerate_spanning_trees(triangle()).size() == 3);

    auto trees_k4 = enumerate_spanning_trees(k4());
    CHECK(trees_k4.size() == 16); // Cayley: 4^2
    std::set<std::vector<EdgeId>> distinct;
    for (const auto& t : trees_k4) {
        CHECK(is_tree(k4(), t));
        distinct.insert(t.to_vector());
    }
    CHECK(distinct.size() == trees_k4.size());

    CHECK_THROWS_AS(enumerate_spanning_trees(k4(), 5), TooManyTreesError);
}

TEST_CASE("dot export") {
    Graph tt = two_triangles_bridge();
    EdgeSet ce = cycle_edges(tt);
    std::string dot = to_dot(tt, &ce, "demo");
    CHECK(dot.find("graph demo") != std::string::npos);
    CHECK(dot.find("2 -- 3") != std::string::npos);
    CHECK(dot.find("penwidth") != std::string::npos);
    // the bridge is not highlighted
    CHECK(dot.find("2 -- 3 [label=\"e3\"];") != std::string::npos);
}
