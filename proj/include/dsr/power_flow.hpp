#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dsr/network.hpp"

namespace dsr {

// Singular Jacobian: the topology cannot carry a power flow (typically a
// disconnected island), reported as infeasibility rather than a crash.
struct SingularError : std::runtime_error {
    SingularError() : std::runtime_error("singular Jacobian: topology infeasible for power flow") {}
};
struct NonConvergedError : std::runtime_error {
    explicit NonConvergedError(int iters)
        : std::runtime_error("power flow did not converge within " + std::to_string(iters) + " iterations") {}
};

struct NewtonOptions {
    double tol = 1e-8; // max-norm on the mismatch vector
    int max_iter = 50;
};

struct PfSolution {
    std::vector<double> v_m;                    // per bus, p.u.
    std::vector<double> theta;                  // per bus, rad
    std::vector<std::array<double, 2>> p_flow;  // per line [from-side, to-side], 0 when open
    std::vector<std::array<double, 2>> q_flow;
    std::vector<double> p_g, q_g;               // per source
    double f_obj = 0.0;
    double p_loss = 0.0;
    std::vector<double> gamma_v;                // per bus
    std::vector<double> gamma_s;                // per line, p.u.^2
    int iterations = 0;
    bool converged = false;
};

enum class PfStatus { Converged, Singular, NonConverged };

struct PfOutcome {
    PfStatus status = PfStatus::NonConverged;
    PfSolution solution;
};

// Real/reactive power injected into the line at the f side, polar form:
//   p_ft =  v_f^2 (g+g_sh) - v_f v_t (g cos dth + b sin dth)
//   q_ft = -v_f^2 (b+b_sh) + v_f v_t (b cos dth - g sin dth),  dth = th_f - th_t
inline std::pair<double, double> branch_flow(double v_f, double v_t, double theta_f,
                                             double theta_t, const Line& line) {
    double dth = theta_f - theta_t;
    double c = std::cos(dth), s = std::sin(dth);
    double p = v_f * v_f * (line.g + line.g_sh) - v_f * v_t * (line.g * c + line.b * s);
    double q = -v_f * v_f * (line.b + line.b_sh) + v_f * v_t * (line.b * c - line.g * s);
    return {p, q};
}

// Power-flow system for one fixed topology. Unknowns are the angles and
// magnitudes of all non-reference buses, laid out [theta..., v_m...], each
// block in ascending bus-id order. The reference bus holds (v_ref, 0).
class PfSystem {
public:
    PfSystem(const Network& n, const Topology& t) : net_(&n) {
        auto [g, active] = to_graph(n, t);
        active_ = active;
        ref_ = n.reference_bus();
        v_ref_ = n.buses[ref_].v_ref;

        var_of_bus_.assign(n.buses.size(), -1);
        int k = 0;
        for (std::size_t b = 0; b < n.buses.size(); ++b)
            if (b != ref_) var_of_bus_[b] = k++;
        unknown_buses_ = static_cast<std::size_t>(k);

        p_load_.assign(n.buses.size(), 0.0);
        q_load_.assign(n.buses.size(), 0.0);
        for (const auto& ld : n.loads) {
            p_load_[ld.bus] += ld.p;
            q_load_[ld.bus] += ld.q;
        }
        for (const auto& l : n.lines)
            if (active_.contains(l.id)) active_lines_.push_back(l);
    }

    std::size_t unknown_count() const { return 2 * unknown_buses_; }
    const EdgeSet& active_edges() const { return active_; }

    Eigen::VectorXd flat_start() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknown_count()));
        for (std::size_t i = unknown_buses_; i < unknown_count(); ++i)
            x[static_cast<Eigen::Index>(i)] = v_ref_;
        return x;
    }

    // Expands an unknown vector to full per-bus (theta, v_m) arrays.
    void expand(const Eigen::VectorXd& x, std::vector<double>& theta, std::vector<double>& v) const {
        theta.assign(net_->buses.size(), 0.0);
        v.assign(net_->buses.size(), v_ref_);
        for (std::size_t b = 0; b < net_->buses.size(); ++b) {
            int k = var_of_bus_[b];
            if (k < 0) continue;
            theta[b] = x[k];
            v[b] = x[static_cast<Eigen::Index>(unknown_buses_) + k];
        }
    }

    // Mismatch of the bus balances at every non-reference bus:
    //   r_P(f) = sum of real flows leaving f + total real load at f
    //   r_Q(f) = likewise for reactive power
    Eigen::VectorXd mismatch(const Eigen::VectorXd& x) const {
        std::vector<double> th, v;
        expand(x, th, v);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknown_count()));
        for (std::size_t b = 0; b < net_->buses.size(); ++b) {
            int k = var_of_bus_[b];
            if (k < 0) continue;
            r[k] = p_load_[b];
            r[static_cast<Eigen::Index>(unknown_buses_) + k] = q_load_[b];
        }
        for (const auto& l : active_lines_) {
            auto [p_ft, q_ft] = branch_flow(v[l.from], v[l.to], th[l.from], th[l.to], l);
            auto [p_tf, q_tf] = branch_flow(v[l.to], v[l.from], th[l.to], th[l.from], l);
            add_injection(r, l.from, p_ft, q_ft);
            add_injection(r, l.to, p_tf, q_tf);
        }
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
        std::vector<double> th, v;
        expand(x, th, v);
        auto m = static_cast<Eigen::Index>(unknown_count());
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
        for (const auto& l : active_lines_) {
            add_branch_partials(J, l, l.from, l.to, th, v);
            add_branch_partials(J, l, l.to, l.from, th, v);
        }
        return J;
    }

private:
    void add_injection(Eigen::VectorXd& r, std::uint32_t bus, double p, double q) const {
        int k = var_of_bus_[bus];
        if (k < 0) return;
        r[k] += p;
        r[static_cast<Eigen::Index>(unknown_buses_) + k] += q;
    }

    // Partials of the flow injected at side `f` of line l (towards `t`),
    // accumulated into the mismatch rows of bus f.
    void add_branch_partials(Eigen::MatrixXd& J, const Line& l, std::uint32_t f, std::uint32_t t,
                             const std::vector<double>& th, const std::vector<double>& v) const {
        int row = var_of_bus_[f];
        if (row < 0) return;
        auto nb = static_cast<Eigen::Index>(unknown_buses_);
        double g = l.g, b = l.b;
        double dth = th[f] - th[t];
        double c = std::cos(dth), s = std::sin(dth);
        double vf = v[f], vt = v[t];

        double dp_dthf = vf * vt * (g * s - b * c);
        double dp_dvf = 2.0 * vf * (g + l.g_sh) - vt * (g * c + b * s);
        double dp_dvt = -vf * (g * c + b * s);
        double dq_dthf = -vf * vt * (b * s + g * c);
        double dq_dvf = -2.0 * vf * (b + l.b_sh) + vt * (b * c - g * s);
        double dq_dvt = vf * (b * c - g * s);

        int colf = var_of_bus_[f], colt = var_of_bus_[t];
        if (colf >= 0) {
            J(row, colf) += dp_dthf;
            J(row, nb + colf) += dp_dvf;
            J(nb + row, colf) += dq_dthf;
            J(nb + row, nb + colf) += dq_dvf;
        }
        if (colt >= 0) {
            J(row, colt) += -dp_dthf;
            J(row, nb + colt) += dp_dvt;
            J(nb + row, colt) += -dq_dthf;
            J(nb + row, nb + colt) += dq_dvt;
        }
    }

    const Network* net_;
    EdgeSet active_;
    std::vector<Line> active_lines_;
    std::vector<int> var_of_bus_;
    std::vector<double> p_load_, q_load_;
    std::size_t unknown_buses_ = 0;
    std::uint32_t ref_ = 0;
    double v_ref_ = 1.0;
};

// Voltage-bound and rating violations of a solved state. gamma_v is the
// bound excess per bus; gamma_s the excess of p^2+q^2 over s_max^2 per
// line, taking the worse of the two line ends.
inline std::pair<std::vector<double>, std::vector<double>>
violations(const Network& n, const PfSolution& sol) {
    std::vector<double> gv(n.buses.size(), 0.0), gs(n.lines.size(), 0.0);
    for (const auto& bus : n.buses) {
        double v = sol.v_m[bus.id];
        double excess = std::max(bus.v_min - v, v - bus.v_max);
        gv[bus.id] = excess > 0.0 ? excess : 0.0;
    }
    for (const auto& l : n.lines) {
        double cap = l.s_max * l.s_max;
        double worst = 0.0;
        for (int side = 0; side < 2; ++side) {
            double p = sol.p_flow[l.id][side], q = sol.q_flow[l.id][side];
            double excess = p * p + q * q - cap;
            worst = std::max(worst, excess);
        }
        gs[l.id] = worst;
    }
    return {std::move(gv), std::move(gs)};
}

inline std::pair<double, double> objective_and_losses(const Network& n, const PfSolution& sol) {
    double f = 0.0;
    for (double p : sol.p_g) f += p;
    double loss = 0.0;
    for (const auto& l : n.lines) loss += sol.p_flow[l.id][0] + sol.p_flow[l.id][1];
    return {f, loss};
}

inline PfOutcome try_solve_power_flow(const Network& n, const Topology& t,
                                      const NewtonOptions& opts = {}) {
    PfSystem sys(n, t);
    Eigen::VectorXd x = sys.flat_start();
    Eigen::VectorXd r = sys.mismatch(x);
    int iter = 0;
    bool converged = r.size() == 0 || r.lpNorm<Eigen::Infinity>() < opts.tol;
    while (!converged && iter < opts.max_iter) {
        Eigen::MatrixXd J = sys.jacobian(x);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
        double dmax = diag.maxCoeff();
        if (!(dmax > 0) || diag.minCoeff() <= 1e-12 * std::max(1.0, dmax))
            return {PfStatus::Singular, {}};
        x -= lu.solve(r);
        ++iter;
        if (!x.allFinite()) return {PfStatus::NonConverged, {}};
        r = sys.mismatch(x);
        converged = r.lpNorm<Eigen::Infinity>() < opts.tol;
    }
    if (!converged) return {PfStatus::NonConverged, {}};

    PfSolution sol;
    sys.expand(x, sol.theta, sol.v_m);
    sol.iterations = iter;
    sol.converged = true;
    sol.p_flow.assign(n.lines.size(), {0.0, 0.0});
    sol.q_flow.assign(n.lines.size(), {0.0, 0.0});
    const EdgeSet& active = sys.active_edges();
    for (const auto& l : n.lines) {
        if (!active.contains(l.id)) continue; // open switch: exactly zero flow
        auto [p_ft, q_ft] = branch_flow(sol.v_m[l.from], sol.v_m[l.to],
                                        sol.theta[l.from], sol.theta[l.to], l);
        auto [p_tf, q_tf] = branch_flow(sol.v_m[l.to], sol.v_m[l.from],
                                        sol.theta[l.to], sol.theta[l.from], l);
        sol.p_flow[l.id] = {p_ft, p_tf};
        sol.q_flow[l.id] = {q_ft, q_tf};
    }

    // The source covers the flows leaving its bus plus the local load.
    std::uint32_t ref = n.reference_bus();
    double pg = 0.0, qg = 0.0;
    for (const auto& ld : n.loads)
        if (ld.bus == ref) {
            pg += ld.p;
            qg += ld.q;
        }
    for (const auto& l : n.lines) {
        if (!active.contains(l.id)) continue;
        if (l.from == ref) {
            pg += sol.p_flow[l.id][0];
            qg += sol.q_flow[l.id][0];
        }
        if (l.to == ref) {
            pg += sol.p_flow[l.id][1];
            qg += sol.q_flow[l.id][1];
        }
    }
    sol.p_g = {pg};
    sol.q_g = {qg};
    std::tie(sol.f_obj, sol.p_loss) = objective_and_losses(n, sol);
    std::tie(sol.gamma_v, sol.gamma_s) = violations(n, sol);
    return {PfStatus::Converged, std::move(sol)};
}

inline PfSolution solve_power_flow(const Network& n, const Topology& t,
                                   const NewtonOptions& opts = {}) {
    PfOutcome out = try_solve_power_flow(n, t, opts);
    switch (out.status) {
        case PfStatus::Converged: return std::move(out.solution);
        case PfStatus::Singular: throw SingularError{};
        default: throw NonConvergedError(opts.max_iter);
    }
}

inline nlohmann::json to_json(const PfSolution& sol) {
    nlohmann::json j;
    j["v_m"] = sol.v_m;
    j["theta"] = sol.theta;
    j["p_flow"] = sol.p_flow;
    j["q_flow"] = sol.q_flow;
    j["p_g"] = sol.p_g;
    j["q_g"] = sol.q_g;
    j["f_obj"] = sol.f_obj;
    j["p_loss"] = sol.p_loss;
    j["gamma_v"] = sol.gamma_v;
    j["gamma_s"] = sol.gamma_s;
    j["iterations"] = sol.iterations;
    j["converged"] = sol.converged;
    return j;
}

} // namespace dsr
