#pragma once

#include <cassert>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsr/graph.hpp"
#include "dsr/network.hpp"
#include "dsr/power_flow.hpp"

namespace dsr {

struct AllInfeasibleError : std::runtime_error {
    AllInfeasibleError() : std::runtime_error("no feasible radial topology found") {}
};

enum class ModelKind { CDSR, RRDSR };

inline const char* to_string(ModelKind k) { return k == ModelKind::CDSR ? "cdsr" : "rrdsr"; }

// Objective ties are broken towards the lexicographically smallest closed
// edge set; the exhaustive oracle applies the identical rule.
inline constexpr double kTieEps = 1e-12;

inline bool improves(double f, const EdgeSet& closed, double incumbent_f,
                     const EdgeSet& incumbent_closed) {
    if (f < incumbent_f - kTieEps) return true;
    if (f > incumbent_f + kTieEps) return false;
    return EdgeSet::lex_less(closed, incumbent_closed);
}

// Discrete search instance. Only cycle-edges may open (opening a bridge
// disconnects the graph), so the effective switchable set is the network's
// switchable lines restricted to cycle-edges; everything else stays closed.
// The closed-count target keeps |E| - |E^S| + sum(z) = |V| - 1.
struct ProblemInstance {
    const Network* network = nullptr;
    ModelKind kind = ModelKind::CDSR;
    Graph graph{1};
    EdgeSet switchable;
    EdgeSet fixed_closed;
    EdgeSet always_closed_switchable; // switchable by flag but not openable here
    std::vector<EdgeSet> all_cycles;  // populated for CDSR only
    std::int64_t required_closed_count = 0;

    std::vector<EdgeId> switchable_ids;            // ascending
    std::vector<std::vector<EdgeId>> cycle_members; // ascending edge ids per cycle
};

inline ProblemInstance build_instance(const Network& n, ModelKind kind,
                                      std::size_t beta_cap = 20) {
    ProblemInstance inst;
    inst.network = &n;
    inst.kind = kind;
    Graph g(n.buses.size());
    for (const auto& l : n.lines) g.add_edge(l.from, l.to);
    EdgeSet ce = cycle_edges(g); // throws NotConnected on a split network

    EdgeSet flag_switchable = n.switchable_lines();
    inst.switchable = ce & flag_switchable;
    inst.fixed_closed = inst.switchable.complement();
    inst.always_closed_switchable = flag_switchable & inst.fixed_closed;

    if (kind == ModelKind::CDSR) {
        for (auto& c : enumerate_all_cycles(g, beta_cap))
            inst.all_cycles.push_back(std::move(c.edges));
    }
    inst.required_closed_count =
        static_cast<std::int64_t>(n.buses.size()) - 1 -
        (static_cast<std::int64_t>(n.lines.size()) -
         static_cast<std::int64_t>(inst.switchable.count()));

    inst.switchable_ids = inst.switchable.to_vector();
    for (const auto& c : inst.all_cycles) inst.cycle_members.push_back(c.to_vector());
    inst.graph = std::move(g);
    return inst;
}

enum class EdgeState : std::uint8_t { Free, Open, Closed };

struct PropagationResult {
    bool conflict = false;
    std::vector<EdgeState> assignment;
};

namespace detail {

// Unit propagation to fixpoint. Count rule: once the closed target is met
// the remaining free edges open, once the open budget is spent they close.
// Cycle rule (CDSR): a cycle with no open edge and one free edge forces
// that edge open; with none free it is a conflict.
inline bool propagate_inplace(const ProblemInstance& inst, std::vector<EdgeState>& st) {
    const std::int64_t target = inst.required_closed_count;
    const std::int64_t budget =
        static_cast<std::int64_t>(inst.switchable_ids.size()) - target;
    bool changed = true;
    while (changed) {
        changed = false;
        std::int64_t closed = 0, open = 0;
        for (EdgeId e : inst.switchable_ids) {
            if (st[e] == EdgeState::Closed) ++closed;
            else if (st[e] == EdgeState::Open) ++open;
        }
        if (closed > target || open > budget) return false;
        if (closed == target) {
            for (EdgeId e : inst.switchable_ids)
                if (st[e] == EdgeState::Free) {
                    st[e] = EdgeState::Open;
                    changed = true;
                }
        } else if (open == budget) {
            for (EdgeId e : inst.switchable_ids)
                if (st[e] == EdgeState::Free) {
                    st[e] = EdgeState::Closed;
                    changed = true;
                }
        }
        for (const auto& members : inst.cycle_members) {
            bool has_open = false;
            EdgeId lone_free = 0;
            int free_count = 0;
            for (EdgeId e : members) {
                if (st[e] == EdgeState::Open) {
                    has_open = true;
                    break;
                }
                if (st[e] == EdgeState::Free) {
                    if (free_count == 0) lone_free = e;
                    ++free_count;
                }
            }
            if (has_open) continue;
            if (free_count == 0) return false; // fully closed cycle
            if (free_count == 1) {
                st[lone_free] = EdgeState::Open;
                changed = true;
            }
        }
    }
    return true;
}

} // namespace detail

inline PropagationResult propagate(const ProblemInstance& inst,
                                   std::vector<EdgeState> partial) {
    if (partial.size() != inst.network->lines.size())
        throw std::invalid_argument("assignment size does not match the line count");
    PropagationResult r;
    r.conflict = !detail::propagate_inplace(inst, partial);
    r.assignment = std::move(partial);
    return r;
}

inline std::vector<EdgeState> initial_assignment(const ProblemInstance& inst) {
    std::vector<EdgeState> st(inst.network->lines.size(), EdgeState::Closed);
    for (EdgeId e : inst.switchable_ids) st[e] = EdgeState::Free;
    return st;
}

struct SearchStats {
    std::size_t nodes_explored = 0;
    std::size_t leaves_evaluated = 0;
    std::size_t pf_solves = 0;
    std::size_t pruned_by_bound = 0;
    std::size_t pruned_by_propagation = 0;
    double wall_time = 0.0;
    std::vector<std::pair<double, double>> incumbent_history; // (seconds, f_obj)
};

struct SolveResult {
    Topology best;
    PfSolution solution;
    double f_obj = 0.0;
    double p_loss = 0.0;
    double delta_loss_pct = 0.0;
    double gamma_v_max = 0.0;
    double gamma_s_max = 0.0;
    SearchStats stats;
    bool proven_optimal = false;
    std::vector<std::string> warnings;
};

struct SolveOptions {
    double time_limit_s = 900.0;
    NewtonOptions newton{};
    // Test hook, called with the active edge set of every evaluated leaf.
    std::function<void(const EdgeSet&)> on_leaf{};
};

namespace detail {

struct SearchContext {
    const ProblemInstance* inst;
    SolveOptions opts;
    std::chrono::steady_clock::time_point t0;
    bool timed_out = false;

    bool have_incumbent = false;
    double incumbent_f = std::numeric_limits<double>::infinity();
    EdgeSet incumbent_closed; // over the full line domain
    PfSolution incumbent_solution;

    double lower_bound = 0.0; // total real load; losses only add to it
    SearchStats stats;

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

inline EdgeSet closed_set_of(const ProblemInstance& inst, const std::vector<EdgeState>& st) {
    EdgeSet closed = inst.always_closed_switchable;
    for (EdgeId e : inst.switchable_ids)
        if (st[e] == EdgeState::Closed) closed.insert(e);
    return closed;
}

inline EdgeSet active_set_of(const ProblemInstance& inst, const std::vector<EdgeState>& st) {
    EdgeSet active = inst.fixed_closed;
    for (EdgeId e : inst.switchable_ids)
        if (st[e] == EdgeState::Closed) active.insert(e);
    return active;
}

// Branching edge: lowest free edge of the most-constrained unsatisfied
// cycle (fewest free edges, ties by lowest edge id); with no unsatisfied
// cycles, the lowest free switchable edge overall. Returns false when the
// assignment is complete.
inline bool select_branch_edge(const ProblemInstance& inst, const std::vector<EdgeState>& st,
                               EdgeId& out) {
    std::size_t best_free = std::numeric_limits<std::size_t>::max();
    EdgeId best_edge = 0;
    for (const auto& members : inst.cycle_members) {
        bool has_open = false;
        std::size_t free_count = 0;
        EdgeId lowest = 0;
        for (EdgeId e : members) {
            if (st[e] == EdgeState::Open) {
                has_open = true;
                break;
            }
            if (st[e] == EdgeState::Free) {
                if (free_count == 0) lowest = e;
                ++free_count;
            }
        }
        if (has_open || free_count == 0) continue;
        if (free_count < best_free || (free_count == best_free && lowest < best_edge)) {
            best_free = free_count;
            best_edge = lowest;
        }
    }
    if (best_free != std::numeric_limits<std::size_t>::max()) {
        out = best_edge;
        return true;
    }
    for (EdgeId e : inst.switchable_ids)
        if (st[e] == EdgeState::Free) {
            out = e;
            return true;
        }
    return false;
}

inline void evaluate_leaf(SearchContext& ctx, const std::vector<EdgeState>& st) {
    const ProblemInstance& inst = *ctx.inst;
    ++ctx.stats.leaves_evaluated;
    EdgeSet active = active_set_of(inst, st);
    if (ctx.opts.on_leaf) ctx.opts.on_leaf(active);

    if (inst.kind == ModelKind::RRDSR) {
        // Count alone admits disconnected edge sets; reject them before
        // spending a Newton solve.
        if (!is_connected(inst.graph, active)) return;
    } else {
        assert(is_tree(inst.graph, active));
    }

    Topology t{closed_set_of(inst, st)};
    ++ctx.stats.pf_solves;
    PfOutcome out = try_solve_power_flow(*inst.network, t, ctx.opts.newton);
    if (out.status != PfStatus::Converged) return;

    if (!ctx.have_incumbent ||
        improves(out.solution.f_obj, t.closed, ctx.incumbent_f, ctx.incumbent_closed)) {
        ctx.have_incumbent = true;
        ctx.incumbent_f = out.solution.f_obj;
        ctx.incumbent_closed = t.closed;
        ctx.incumbent_solution = std::move(out.solution);
        ctx.stats.incumbent_history.emplace_back(ctx.elapsed(), ctx.incumbent_f);
    }
}

inline void dfs(SearchContext& ctx, std::vector<EdgeState> st) {
    if (ctx.timed_out) return;
    if (ctx.elapsed() > ctx.opts.time_limit_s) {
        ctx.timed_out = true;
        return;
    }
    ++ctx.stats.nodes_explored;
    if (!propagate_inplace(*ctx.inst, st)) {
        ++ctx.stats.pruned_by_propagation;
        return;
    }
    if (ctx.have_incumbent && ctx.lower_bound > ctx.incumbent_f) {
        ++ctx.stats.pruned_by_bound;
        return;
    }
    EdgeId e;
    if (!select_branch_edge(*ctx.inst, st, e)) {
        evaluate_leaf(ctx, st);
        return;
    }
    {
        std::vector<EdgeState> child = st;
        child[e] = EdgeState::Closed;
        dfs(ctx, std::move(child));
    }
    st[e] = EdgeState::Open;
    dfs(ctx, std::move(st));
}

} // namespace detail

// Depth-first branch-and-bound over switch assignments with exact AC power
// flow at every leaf. The incumbent is seeded from mip_start when that
// topology is radial and its power flow converges.
inline SolveResult solve(const ProblemInstance& inst, const Topology& mip_start,
                         const SolveOptions& opts = {}) {
    detail::SearchContext ctx;
    ctx.inst = &inst;
    ctx.opts = opts;
    ctx.t0 = std::chrono::steady_clock::now();
    for (const auto& ld : inst.network->loads) ctx.lower_bound += ld.p;

    SolveResult result;

    double baseline_loss = -1.0;
    {
        auto [g, active] = to_graph(*inst.network, mip_start);
        if (!is_tree(g, active)) {
            result.warnings.push_back("MIP start is not radial; search starts with no incumbent");
        } else {
            ++ctx.stats.pf_solves;
            PfOutcome out = try_solve_power_flow(*inst.network, mip_start, opts.newton);
            if (out.status != PfStatus::Converged) {
                result.warnings.push_back("MIP start power flow failed; search starts with no incumbent");
            } else {
                baseline_loss = out.solution.p_loss;
                ctx.have_incumbent = true;
                ctx.incumbent_f = out.solution.f_obj;
                ctx.incumbent_closed = mip_start.closed;
                ctx.incumbent_solution = std::move(out.solution);
                ctx.stats.incumbent_history.emplace_back(ctx.elapsed(), ctx.incumbent_f);
            }
        }
    }

    detail::dfs(ctx, initial_assignment(inst));

    ctx.stats.wall_time = ctx.elapsed();
    if (!ctx.have_incumbent) throw AllInfeasibleError{};

    result.best = Topology{ctx.incumbent_closed};
    result.solution = std::move(ctx.incumbent_solution);
    result.f_obj = result.solution.f_obj;
    result.p_loss = result.solution.p_loss;
    result.delta_loss_pct =
        baseline_loss > 0.0 ? 100.0 * (baseline_loss - result.p_loss) / baseline_loss : 0.0;
    for (double v : result.solution.gamma_v) result.gamma_v_max = std::max(result.gamma_v_max, v);
    for (double v : result.solution.gamma_s) result.gamma_s_max = std::max(result.gamma_s_max, v);
    result.stats = std::move(ctx.stats);
    result.proven_optimal = !ctx.timed_out;
    return result;
}

struct ReportRow {
    std::string case_name;
    std::string model;
    double f = 0.0;
    double p_loss = 0.0;
    double delta_loss_pct = 0.0;
    double gamma_v = 0.0;
    double gamma_s = 0.0;
    double ct = 0.0;
    std::size_t nodes = 0;
    std::size_t leaves = 0;
    bool proven_optimal = false;
};

// Zero when no improving topology was found; otherwise the loss reduction
// relative to the baseline.
inline double delta_loss_pct(double baseline_loss, double loss) {
    if (!(baseline_loss > 0.0)) return 0.0;
    return 100.0 * (baseline_loss - loss) / baseline_loss;
}

inline ReportRow report(const std::string& case_name, ModelKind kind, const SolveResult& result,
                        const PfSolution& baseline) {
    ReportRow row;
    row.case_name = case_name;
    row.model = to_string(kind);
    row.f = result.f_obj;
    row.p_loss = result.p_loss;
    row.delta_loss_pct = delta_loss_pct(baseline.p_loss, result.p_loss);
    row.gamma_v = result.gamma_v_max;
    row.gamma_s = result.gamma_s_max;
    row.ct = result.stats.wall_time;
    row.nodes = result.stats.nodes_explored;
    row.leaves = result.stats.leaves_evaluated;
    row.proven_optimal = result.proven_optimal;
    return row;
}

namespace detail {

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string fmt_ct(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace detail

inline std::string to_csv(const std::vector<ReportRow>& rows) {
    std::string out = "case,model,f,p_loss,delta_loss_pct,gamma_v,gamma_s,ct,nodes,leaves,proven_optimal\n";
    for (const auto& r : rows) {
        out += r.case_name + "," + r.model + "," + detail::fmt_g(r.f) + "," +
               detail::fmt_g(r.p_loss) + "," + detail::fmt_g(r.delta_loss_pct) + "," +
               detail::fmt_g(r.gamma_v) + "," + detail::fmt_g(r.gamma_s) + "," +
               detail::fmt_ct(r.ct) + "," + std::to_string(r.nodes) + "," +
               std::to_string(r.leaves) + "," + (r.proven_optimal ? "true" : "false") + "\n";
    }
    return out;
}

inline nlohmann::json to_json(const std::string& case_name, ModelKind kind,
                              const SolveResult& result) {
    nlohmann::json j;
    j["case"] = case_name;
    j["model"] = to_string(kind);
    j["f_obj"] = result.f_obj;
    j["p_loss"] = result.p_loss;
    j["delta_loss_pct"] = result.delta_loss_pct;
    j["gamma_v"] = result.gamma_v_max;
    j["gamma_s"] = result.gamma_s_max;
    j["proven_optimal"] = result.proven_optimal;
    j["topology"] = {{"closed", result.best.closed.to_vector()}};
    j["stats"] = {{"nodes_explored", result.stats.nodes_explored},
                  {"leaves_evaluated", result.stats.leaves_evaluated},
                  {"pf_solves", result.stats.pf_solves},
                  {"pruned_by_bound", result.stats.pruned_by_bound},
                  {"pruned_by_propagation", result.stats.pruned_by_propagation},
                  {"wall_time", result.stats.wall_time},
                  {"incumbent_history", result.stats.incumbent_history}};
    j["solution"] = to_json(result.solution);
    j["warnings"] = result.warnings;
    return j;
}

} // namespace dsr
