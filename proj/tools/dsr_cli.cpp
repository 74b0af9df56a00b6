// Command-line front end: inspect cycles, run a single power flow, or
// search for the loss-minimal radial topology and report the results.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsr/graph.hpp"
#include "dsr/network.hpp"
#include "dsr/oracle.hpp"
#include "dsr/power_flow.hpp"
#include "dsr/reconfig.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerifyMismatch = 4;

dsr::NewtonOptions newton_from_env() {
    dsr::NewtonOptions opts;
    if (const char* tol = std::getenv("RECONF_TOL")) opts.tol = std::atof(tol);
    if (const char* mi = std::getenv("RECONF_MAX_ITER")) opts.max_iter = std::atoi(mi);
    return opts;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string id_list(const dsr::EdgeSet& s) {
    std::string out = "{";
    bool first = true;
    s.for_each([&](dsr::EdgeId e) {
        if (!first) out += ",";
        out += "e" + std::to_string(e);
        first = false;
    });
    return out + "}";
}

dsr::Graph graph_of(const dsr::Network& n) {
    dsr::Graph g(n.buses.size());
    for (const auto& l : n.lines) g.add_edge(l.from, l.to);
    return g;
}

int cmd_cycles(const std::string& path, bool all, const std::string& dot_path) {
    dsr::Network net = dsr::load_network(path);
    dsr::Graph g = graph_of(net);
    dsr::CycleBasis basis = dsr::fundamental_cycle_basis(g);
    dsr::EdgeSet ce = dsr::cycle_edges(g, basis);
    dsr::EdgeSet bridges = ce.complement();

    std::cout << "network " << net.name << ": |V|=" << g.vertex_count()
              << " |E|=" << g.edge_count() << "\n";
    std::cout << "beta=" << basis.cycles.size() << "\n";
    for (std::size_t k = 0; k < basis.cycles.size(); ++k)
        std::cout << "basis[" << k << "] chord e" << basis.chord_of[k] << " edges "
                  << id_list(basis.cycles[k].edges) << "\n";
    if (all) {
        auto cycles = dsr::enumerate_all_cycles(g);
        std::cout << "cycles=" << cycles.size() << "\n";
        for (std::size_t i = 0; i < cycles.size(); ++i)
            std::cout << "cycle[" << i << "] edges " << id_list(cycles[i].edges) << "\n";
    }
    std::cout << "cycle-edges=" << ce.count() << " " << id_list(ce) << "\n";
    std::cout << "bridges=" << bridges.count() << " " << id_list(bridges) << "\n";
    if (!dot_path.empty()) write_file(dot_path, dsr::to_dot(g, &ce, "cycles"));
    return kExitOk;
}

dsr::Topology topology_from_file(const dsr::Network& net, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dsr::ParseError("cannot open topology file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw dsr::ParseError("invalid JSON in " + path + ": " + e.what());
    }
    if (!j.contains("closed") || !j["closed"].is_array())
        throw dsr::ParseError("topology file needs a \"closed\" array of line ids");
    dsr::Topology t{dsr::EdgeSet(net.lines.size())};
    for (const auto& e : j["closed"]) {
        auto id = e.get<dsr::EdgeId>();
        if (id >= net.lines.size())
            throw dsr::ParseError("topology names unknown line id " + std::to_string(id));
        t.closed.insert(id);
    }
    if (!t.closed.is_subset_of(net.switchable_lines()))
        throw dsr::ValidationError("topology closes a non-switchable line");
    return t;
}

int cmd_pf(const std::string& path, const std::string& topology_path, const std::string& out_path) {
    dsr::Network net = dsr::load_network(path);
    dsr::Topology t = topology_path.empty() ? dsr::baseline_topology(net)
                                            : topology_from_file(net, topology_path);
    dsr::PfSolution sol = dsr::solve_power_flow(net, t, newton_from_env());
    double gv = 0.0, gs = 0.0;
    for (double v : sol.gamma_v) gv = std::max(gv, v);
    for (double v : sol.gamma_s) gs = std::max(gs, v);
    std::cout << "case=" << net.name << " f_obj=" << sol.f_obj << " p_loss=" << sol.p_loss
              << " gamma_v=" << gv << " gamma_s=" << gs
              << " iterations=" << sol.iterations << "\n";
    if (!out_path.empty()) write_file(out_path, dsr::to_json(sol).dump(2) + "\n");
    return kExitOk;
}

std::vector<dsr::ModelKind> parse_models(const std::string& spec) {
    std::vector<dsr::ModelKind> kinds;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t comma = spec.find(',', pos);
        std::string tok = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (tok == "cdsr") kinds.push_back(dsr::ModelKind::CDSR);
        else if (tok == "rrdsr") kinds.push_back(dsr::ModelKind::RRDSR);
        else throw CLI::ValidationError("--model", "expected cdsr, rrdsr or cdsr,rrdsr");
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return kinds;
}

int cmd_solve(const std::string& path, const std::string& model_spec, double time_limit,
              const std::string& report_path, const std::string& json_path, bool verify,
              const std::string& dot_path) {
    dsr::Network net = dsr::load_network(path);
    std::vector<dsr::ModelKind> kinds = parse_models(model_spec);
    dsr::NewtonOptions newton = newton_from_env();

    dsr::Topology baseline = dsr::baseline_topology(net);
    dsr::PfSolution baseline_sol = dsr::solve_power_flow(net, baseline, newton);

    std::vector<dsr::ReportRow> rows;
    nlohmann::json dumps = nlohmann::json::array();
    bool wrote_dot = false;
    for (dsr::ModelKind kind : kinds) {
        dsr::ProblemInstance inst = dsr::build_instance(net, kind);
        dsr::SolveOptions opts;
        opts.time_limit_s = time_limit;
        opts.newton = newton;
        dsr::SolveResult res = dsr::solve(inst, baseline, opts);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
        rows.push_back(dsr::report(net.name, kind, res, baseline_sol));
        dumps.push_back(dsr::to_json(net.name, kind, res));

        if (verify) {
            dsr::OracleResult oracle = dsr::exhaustive_optimum(net, newton);
            bool f_ok = std::abs(res.f_obj - oracle.optimum_f) <= 1e-8;
            bool topo_ok = res.best.closed == oracle.optimum_topology.closed;
            if (!f_ok || !topo_ok) {
                std::cerr << "verify mismatch (" << dsr::to_string(kind) << "): solver f="
                          << res.f_obj << " closed=" << id_list(res.best.closed)
                          << " oracle f=" << oracle.optimum_f << " closed="
                          << id_list(oracle.optimum_topology.closed) << "\n";
                return kExitVerifyMismatch;
            }
            std::cout << "verify ok (" << dsr::to_string(kind) << "): oracle trees="
                      << oracle.tree_count << " subsets=" << oracle.subset_count << "\n";
        }
        if (!dot_path.empty() && !wrote_dot) {
            auto [g, active] = dsr::to_graph(net, res.best);
            write_file(dot_path, dsr::to_dot(g, &active, "optimized"));
            wrote_dot = true;
        }
    }

    std::string csv = dsr::to_csv(rows);
    std::cout << csv;
    if (!report_path.empty()) write_file(report_path, csv);
    if (!json_path.empty()) write_file(json_path, dumps.dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"loss-minimal radial topology toolkit"};
    app.require_subcommand(1);

    std::string net_path, dot_path, out_path, topology_path, report_path, json_path;
    std::string model_spec;
    double time_limit = 900.0;
    bool all = false, verify = false;

    CLI::App* cycles = app.add_subcommand("cycles", "list cycle basis, cycles and bridges");
    cycles->add_option("net", net_path, "network JSON file")->required();
    cycles->add_flag("--all", all, "enumerate the full cycle set");
    cycles->add_option("--dot", dot_path, "write DOT with cycle-edges highlighted");

    CLI::App* pf = app.add_subcommand("pf", "run one AC power flow");
    pf->add_option("net", net_path, "network JSON file")->required();
    pf->add_option("--topology", topology_path, "topology JSON {\"closed\":[ids]}");
    pf->add_option("--out", out_path, "write the solution as JSON");

    CLI::App* solve = app.add_subcommand("solve", "search for the loss-minimal radial topology");
    solve->add_option("net", net_path, "network JSON file")->required();
    solve->add_option("--model", model_spec, "cdsr, rrdsr or cdsr,rrdsr")->required();
    solve->add_option("--time-limit", time_limit, "search time limit in seconds");
    solve->add_option("--report", report_path, "write the CSV report here");
    solve->add_option("--json", json_path, "write the full result dump here");
    solve->add_flag("--verify", verify, "cross-check against the exhaustive oracle");
    solve->add_option("--dot", dot_path, "write DOT of the optimized topology");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cycles->parsed()) return cmd_cycles(net_path, all, dot_path);
        if (pf->parsed()) return cmd_pf(net_path, topology_path, out_path);
        if (solve->parsed())
            return cmd_solve(net_path, model_spec, time_limit, report_path, json_path, verify,
                             dot_path);
    } catch (const dsr::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const dsr::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    return kExitOk;
}
