#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <json.hpp>

#include "dsr/network.hpp"
#include "test_support.hpp"

using namespace dsr;
using namespace testsup;
using nlohmann::json;

namespace {

// Minimal valid 3-bus triangle used as the mutation base for the
// validation tests.
json base_net() {
    return json::parse(R"({
      "name": "t", "base_mva": 10.0,
      "buses": [
        {"id": 0, "v_min": 0.95, "v_max": 1.05, "is_ref": true, "v_ref": 1.0},
        {"id": 1, "v_min": 0.95, "v_max": 1.05, "is_ref": false},
        {"id": 2, "v_min": 0.95, "v_max": 1.05, "is_ref": false}
      ],
      "lines": [
        {"id": 0, "from": 0, "to": 1, "g": 4.0, "b": -12.0, "g_sh": 0.0, "b_sh": 0.0,
         "s_max": 1.0, "switchable": true, "baseline_closed": true},
        {"id": 1, "from": 1, "to": 2, "g": 3.0, "b": -9.0, "g_sh": 0.0, "b_sh": 0.0,
         "s_max": 1.0, "switchable": true, "baseline_closed": false},
        {"id": 2, "from": 0, "to": 2, "g": 5.0, "b": -14.0, "g_sh": 0.0, "b_sh": 0.0,
         "s_max": 1.0, "switchable": true, "baseline_closed": true}
      ],
      "loads": [{"bus": 1, "p": 0.2, "q": 0.05}],
      "sources": [{"bus": 0}]
    })");
}

void expect_invalid(json j, const std::string& needle) {
    try {
        parse_network(j);
        FAIL("expected ValidationError containing \"" + needle + "\"");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
}

} // namespace

TEST_CASE("fixtures load and validate") {
    Network tri = load_network(fixture("tri3.json"));
    CHECK(tri.buses.size() == 3);
    CHECK(tri.lines.size() == 3);
    CHECK(tri.reference_bus() == 0);
    CHECK(tri.base_mva == 10.0);

    for (const char* f : {"ring6.json", "twocycle8.json", "mesh12.json", "treefix.json"})
        CHECK_NOTHROW(load_network(fixture(f)));
}

TEST_CASE("validation rules") {
    json j = base_net();
    j["buses"][1]["is_ref"] = true;
    j["buses"][1]["v_ref"] = 1.0;
    expect_invalid(j, "multiple reference buses");

    j = base_net();
    j["buses"][0]["is_ref"] = false;
    expect_invalid(j, "no reference bus");

    j = base_net();
    j["lines"][1]["id"] = 0;
    expect_invalid(j, "duplicate edge");

    j = base_net();
    j["lines"][1]["from"] = 0;
    j["lines"][1]["to"] = 1;
    expect_invalid(j, "parallel edge");

    j = base_net();
    j["lines"][1]["from"] = 2;
    j["lines"][1]["to"] = 2;
    expect_invalid(j, "self loop");

    j = base_net();
    j["buses"][1]["v_min"] = 1.2; // above v_max
    expect_invalid(j, "bad bounds");

    j = base_net();
    j["buses"][0]["v_ref"] = 1.5;
    expect_invalid(j, "bad bounds");

    j = base_net();
    j["lines"].erase(1);
    j["lines"].erase(1);
    j["lines"][0]["id"] = 0;
    expect_invalid(j, "disconnected");

    j = base_net();
    j["sources"][0]["bus"] = 1;
    expect_invalid(j, "source not at reference bus");

    j = base_net();
    j["sources"].push_back({{"bus", 0}});
    expect_invalid(j, "multiple sources");

    j = base_net();
    j["sources"] = json::array();
    expect_invalid(j, "no source");

    j = base_net();
    j["lines"][0]["g"] = -1.0;
    expect_invalid(j, "bad admittance");

    j = base_net();
    j["lines"][0]["s_max"] = 0.0;
    expect_invalid(j, "bad rating");

    j = base_net();
    j["loads"][0]["bus"] = 9;
    expect_invalid(j, "load bus out of range");
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(load_network("/nonexistent/net.json"), ParseError);

    json j = base_net();
    j["buses"][0].erase("v_ref"); // required for the reference bus
    CHECK_THROWS_AS(parse_network(j), ParseError);

    j = base_net();
    j.erase("base_mva");
    CHECK_THROWS_AS(parse_network(j), ParseError);

    j = base_net();
    j["units"] = "furlongs";
    CHECK_THROWS_AS(parse_network(j), ParseError);
}

TEST_CASE("serialization round-trips") {
    for (const char* f : {"tri3.json", "ring6.json", "twocycle8.json", "mesh12.json", "treefix.json"}) {
        Network n = load_network(fixture(f));
        Network again = parse_network(serialize(n));
        CHECK(n == again);
    }
}

TEST_CASE("physical units convert on load") {
    json j = base_net();
    j["units"] = "physical";
    j["base_kv"] = 20.0;
    // z_base = 20^2 / 10 = 40 ohm; admittances scale by 40, powers by 1/10
    Network n = parse_network(j);
    CHECK(n.lines[0].g == Catch::Approx(4.0 * 40.0));
    CHECK(n.lines[0].b == Catch::Approx(-12.0 * 40.0));
    CHECK(n.lines[0].s_max == Catch::Approx(0.1));
    CHECK(n.loads[0].p == Catch::Approx(0.02));
}

TEST_CASE("to_graph and the active set") {
    Network tri = load_network(fixture("tri3.json"));

    Topology baseline = baseline_topology(tri);
    CHECK(baseline.closed.to_vector() == std::vector<EdgeId>{0, 2});
    auto [g, active] = to_graph(tri, baseline);
    CHECK(active.count() == 2);
    CHECK(is_tree(g, active));

    Topology all{tri.switchable_lines()};
    auto [g2, full] = to_graph(tri, all);
    CHECK(full.count() == 3);
    CHECK_FALSE(is_tree(g2, full));

    // non-switchable lines are always active
    Network treefix = load_network(fixture("treefix.json"));
    Topology none{EdgeSet(treefix.lines.size())};
    auto [g3, act3] = to_graph(treefix, none);
    CHECK(act3.count() == 2); // the two non-switchable lines

    Topology bad{EdgeSet(treefix.lines.size())};
    bad.closed.insert(0); // line 0 is not switchable
    CHECK_THROWS_AS(to_graph(treefix, bad), ValidationError);

    // with no switchable lines at all, everything is always active
    Network fixed = tri;
    for (auto& l : fixed.lines) l.switchable = false;
    CHECK(baseline_topology(fixed).closed.empty());
    auto [g4, act4] = to_graph(fixed, baseline_topology(fixed));
    CHECK(act4 == g4.all_edges());
}

TEST_CASE("baseline topologies are radial on bundled fixtures") {
    for (const char* f : {"tri3.json", "ring6.json", "twocycle8.json", "mesh12.json", "treefix.json"}) {
        Network n = load_network(fixture(f));
        auto [g, active] = to_graph(n, baseline_topology(n));
        CHECK(is_tree(g, active));
    }
}

TEST_CASE("active set cardinality identity") {
    // |active| = |E| - |switchable| + |closed|
    std::mt19937 rng(41);
    Network n = load_network(fixture("mesh12.json"));
    EdgeSet sw = n.switchable_lines();
    auto ids = sw.to_vector();
    for (int i = 0; i < 50; ++i) {
        Topology t{EdgeSet(n.lines.size())};
        for (EdgeId e : ids)
            if (rng() & 1) t.closed.insert(e);
        auto [g, active] = to_graph(n, t);
        CHECK(active.count() == n.lines.size() - sw.count() + t.closed.count());
    }
}
