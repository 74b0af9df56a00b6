#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsr/graph.hpp"

namespace dsr {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Bus {
    std::uint32_t id = 0;
    double v_min = 0.9;  // p.u.
    double v_max = 1.1;  // p.u.
    bool is_ref = false;
    double v_ref = 1.0;  // p.u., meaningful only when is_ref

    bool operator==(const Bus&) const = default;
};

struct Line {
    EdgeId id = 0;
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    double g = 0.0;     // series conductance, p.u.
    double b = 0.0;     // series susceptance, p.u.
    double g_sh = 0.0;  // shunt conductance per side, p.u.
    double b_sh = 0.0;  // shunt susceptance per side, p.u.
    double s_max = 1.0; // apparent power rating, p.u.
    bool switchable = false;
    bool baseline_closed = true;

    bool operator==(const Line&) const = default;
};

struct Load {
    std::uint32_t bus = 0;
    double p = 0.0; // p.u., passive sign convention
    double q = 0.0;

    bool operator==(const Load&) const = default;
};

struct Source {
    std::uint32_t bus = 0;

    bool operator==(const Source&) const = default;
};

// Open/closed assignment for switchable lines; non-switchable lines are
// implicitly closed. closed must stay within the switchable set.
struct Topology {
    EdgeSet closed;

    bool operator==(const Topology&) const = default;
};

class Network {
public:
    std::string name;
    double base_mva = 1.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Load> loads;
    std::vector<Source> sources;

    bool operator==(const Network&) const = default;

    std::uint32_t reference_bus() const {
        for (const auto& b : buses)
            if (b.is_ref) return b.id;
        throw ValidationError("no reference bus");
    }

    EdgeSet switchable_lines() const {
        EdgeSet s(lines.size());
        for (const auto& l : lines)
            if (l.switchable) s.insert(l.id);
        return s;
    }

    void validate() const;
};

inline void Network::validate() const {
    if (buses.empty()) throw ValidationError("no buses");
    if (base_mva <= 0 || !std::isfinite(base_mva)) throw ValidationError("bad base_mva");

    std::size_t refs = 0;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const Bus& b = buses[i];
        if (b.id != i) throw ValidationError("bus ids must be dense 0..n-1");
        if (!(b.v_min > 0) || !(b.v_min <= b.v_max) ||
            !std::isfinite(b.v_min) || !std::isfinite(b.v_max))
            throw ValidationError("bad bounds at bus " + std::to_string(b.id));
        if (b.is_ref) {
            ++refs;
            if (!(b.v_min <= b.v_ref && b.v_ref <= b.v_max))
                throw ValidationError("bad bounds: v_ref outside [v_min, v_max] at bus " +
                                      std::to_string(b.id));
        }
    }
    if (refs == 0) throw ValidationError("no reference bus");
    if (refs > 1) throw ValidationError("multiple reference buses");

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const Line& l = lines[i];
        if (l.id != i) throw ValidationError("duplicate edge id or non-dense line ids");
        if (l.from == l.to) throw ValidationError("self loop at line " + std::to_string(l.id));
        if (l.from >= buses.size() || l.to >= buses.size())
            throw ValidationError("line endpoint out of range at line " + std::to_string(l.id));
        if (!(l.g >= 0) || !std::isfinite(l.g) || !std::isfinite(l.b) ||
            !std::isfinite(l.g_sh) || !std::isfinite(l.b_sh))
            throw ValidationError("bad admittance at line " + std::to_string(l.id));
        if (!(l.s_max > 0) || !std::isfinite(l.s_max))
            throw ValidationError("bad rating at line " + std::to_string(l.id));
        for (std::size_t j = 0; j < i; ++j) {
            const Line& o = lines[j];
            if ((o.from == l.from && o.to == l.to) || (o.from == l.to && o.to == l.from))
                throw ValidationError("parallel edge between buses " + std::to_string(l.from) +
                                      " and " + std::to_string(l.to));
        }
    }

    for (const auto& ld : loads) {
        if (ld.bus >= buses.size()) throw ValidationError("load bus out of range");
        if (!std::isfinite(ld.p) || !std::isfinite(ld.q)) throw ValidationError("bad load value");
    }

    if (sources.empty()) throw ValidationError("no source");
    if (sources.size() > 1) throw ValidationError("multiple sources");
    if (sources[0].bus >= buses.size()) throw ValidationError("source bus out of range");
    if (!buses[sources[0].bus].is_ref)
        throw ValidationError("source not at reference bus");

    // The full-line graph must be connected so at least one radial topology
    // exists (the vertex set never shrinks under switching).
    Graph g(buses.size());
    for (const auto& l : lines) g.add_edge(l.from, l.to);
    if (lines.size() + 1 < buses.size() || !is_connected(g, g.all_edges()))
        throw ValidationError("disconnected network");
}

// Projects the network onto its graph; the active set is the union of
// always-closed lines and the topology's closed switches.
inline std::pair<Graph, EdgeSet> to_graph(const Network& n, const Topology& t) {
    Graph g(n.buses.size());
    for (const auto& l : n.lines) g.add_edge(l.from, l.to);
    if (!t.closed.is_subset_of(n.switchable_lines()))
        throw ValidationError("topology closes a non-switchable line");
    EdgeSet active(n.lines.size());
    for (const auto& l : n.lines)
        if (!l.switchable) active.insert(l.id);
    active |= t.closed;
    return {std::move(g), std::move(active)};
}

inline Topology baseline_topology(const Network& n) {
    Topology t{EdgeSet(n.lines.size())};
    for (const auto& l : n.lines)
        if (l.switchable && l.baseline_closed) t.closed.insert(l.id);
    return t;
}

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw ParseError(std::string("missing or non-numeric field \"") + key + "\"");
    return j[key].get<double>();
}

inline bool require_bool(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_boolean())
        throw ParseError(std::string("missing or non-boolean field \"") + key + "\"");
    return j[key].get<bool>();
}

inline std::uint32_t require_index(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && j[key].is_number_integer() && j[key].get<std::int64_t>() >= 0)
        return j[key].get<std::uint32_t>();
    throw ParseError(std::string("missing or non-index field \"") + key + "\"");
}

} // namespace detail

// Parses the network schema. Default quantities are p.u. on base_mva; with
// "units": "physical" (and a top-level "base_kv") admittances are taken in
// siemens, ratings in MVA and loads in MW/MVAr, converted at load time.
inline Network parse_network(const nlohmann::json& j) {
    using detail::require_bool;
    using detail::require_index;
    using detail::require_number;

    Network n;
    n.name = j.value("name", std::string{});
    n.base_mva = require_number(j, "base_mva");

    bool physical = false;
    if (j.contains("units")) {
        std::string u = j["units"].get<std::string>();
        if (u == "physical") physical = true;
        else if (u != "pu") throw ParseError("unknown units mode \"" + u + "\"");
    }
    double y_scale = 1.0, s_scale = 1.0;
    if (physical) {
        double base_kv = require_number(j, "base_kv");
        if (!(base_kv > 0)) throw ParseError("base_kv must be positive");
        double z_base = base_kv * base_kv / n.base_mva; // ohm
        y_scale = z_base;                               // S -> p.u.
        s_scale = 1.0 / n.base_mva;                     // MW/MVA -> p.u.
    }

    if (!j.contains("buses") || !j["buses"].is_array()) throw ParseError("missing \"buses\" array");
    for (const auto& jb : j["buses"]) {
        Bus b;
        b.id = require_index(jb, "id");
        b.v_min = require_number(jb, "v_min");
        b.v_max = require_number(jb, "v_max");
        b.is_ref = require_bool(jb, "is_ref");
        if (b.is_ref) b.v_ref = require_number(jb, "v_ref");
        n.buses.push_back(b);
    }

    if (!j.contains("lines") || !j["lines"].is_array()) throw ParseError("missing \"lines\" array");
    for (const auto& jl : j["lines"]) {
        Line l;
        l.id = require_index(jl, "id");
        l.from = require_index(jl, "from");
        l.to = require_index(jl, "to");
        l.g = require_number(jl, "g") * y_scale;
        l.b = require_number(jl, "b") * y_scale;
        l.g_sh = require_number(jl, "g_sh") * y_scale;
        l.b_sh = require_number(jl, "b_sh") * y_scale;
        l.s_max = require_number(jl, "s_max") * s_scale;
        l.switchable = require_bool(jl, "switchable");
        l.baseline_closed = require_bool(jl, "baseline_closed");
        n.lines.push_back(l);
    }

    if (j.contains("loads")) {
        for (const auto& jl : j["loads"]) {
            Load ld;
            ld.bus = require_index(jl, "bus");
            ld.p = require_number(jl, "p") * s_scale;
            ld.q = require_number(jl, "q") * s_scale;
            n.loads.push_back(ld);
        }
    }

    if (!j.contains("sources") || !j["sources"].is_array())
        throw ParseError("missing \"sources\" array");
    for (const auto& js : j["sources"]) {
        Source s;
        s.bus = require_index(js, "bus");
        n.sources.push_back(s);
    }

    n.validate();
    return n;
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_network(j);
}

// Serializes in p.u. form; load(serialize(n)) reproduces n exactly.
inline nlohmann::json serialize(const Network& n) {
    nlohmann::json j;
    j["name"] = n.name;
    j["base_mva"] = n.base_mva;
    j["buses"] = nlohmann::json::array();
    for (const auto& b : n.buses) {
        nlohmann::json jb{{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}, {"is_ref", b.is_ref}};
        if (b.is_ref) jb["v_ref"] = b.v_ref;
        j["buses"].push_back(jb);
    }
    j["lines"] = nlohmann::json::array();
    for (const auto& l : n.lines)
        j["lines"].push_back({{"id", l.id}, {"from", l.from}, {"to", l.to},
                              {"g", l.g}, {"b", l.b}, {"g_sh", l.g_sh}, {"b_sh", l.b_sh},
                              {"s_max", l.s_max}, {"switchable", l.switchable},
                              {"baseline_closed", l.baseline_closed}});
    j["loads"] = nlohmann::json::array();
    for (const auto& ld : n.loads)
        j["loads"].push_back({{"bus", ld.bus}, {"p", ld.p}, {"q", ld.q}});
    j["sources"] = nlohmann::json::array();
    for (const auto& s : n.sources)
        j["sources"].push_back({{"bus", s.bus}});
    return j;
}

} // namespace dsr
