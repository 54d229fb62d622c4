#pragma once

// Network domain model: pipes, optional node incidence, loop definitions and
// the per-pipe flow state, plus the structural checks every solver relies on.
//
// Flows are canonical: a pipe's flow is positive in its assumed direction
// (from -> to when node incidence is given).  Loop members carry an
// orientation of +1 or -1 depending on whether the loop traverses the pipe
// with or against that direction, so the flow seen by a loop is
// orientation * Q.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "loopflow/errors.hpp"
#include "loopflow/hydraulics.hpp"

namespace loopflow::network {

struct Node {
    std::string id;
    double demand = 0.0;  // m^3/s, positive = withdrawal from the network
};

struct Pipe {
    std::string id;
    double diameter = 0.0;  // m
    double length = 0.0;    // m
    double roughness = 0.0; // m, absolute (water model)
    double discharge_coeff = 0.0;  // ventilation model
    double opening_area = 0.0;     // m^2 (ventilation model)
    std::string from_node;  // optional incidence; empty when unknown
    std::string to_node;
};

// One closed loop: ordered list of (pipe id, orientation) with orientation
// +1 when the loop walks the pipe in its assumed direction, -1 otherwise.
struct LoopDef {
    std::string id;
    std::vector<std::pair<std::string, int>> members;
};

struct Network {
    hydraulics::FluidModel fluid;
    std::vector<Pipe> pipes;
    std::vector<Node> nodes;     // optional
    std::vector<LoopDef> loops;
    double operating_pressure = 0.0;        // Pa absolute; 0 = not specified
    double reference_pressure = 101325.0;   // Pa absolute
};

// Canonical per-pipe flow in m^3/s, keyed by pipe id.
struct FlowState {
    std::map<std::string, double> flows;
};

// --- lookups -----------------------------------------------------------------

inline std::unordered_map<std::string, std::size_t> pipe_index(
    const Network& net) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(net.pipes.size());
    for (std::size_t i = 0; i < net.pipes.size(); ++i) {
        index.emplace(net.pipes[i].id, i);
    }
    return index;
}

inline bool has_full_incidence(const Network& net) {
    if (net.pipes.empty()) return false;
    for (const Pipe& p : net.pipes) {
        if (p.from_node.empty() || p.to_node.empty()) return false;
    }
    return true;
}

// --- pressure function dispatch ----------------------------------------------

// Evaluate the pipe's pressure function and derivative at flow q (canonical
// sign).  Dispatches on the network's fluid model.
inline hydraulics::PressureFunction pipe_pressure(const Pipe& pipe,
                                                  const hydraulics::FluidModel& fluid,
                                                  double q) {
    struct Visitor {
        const Pipe& pipe;
        double q;
        hydraulics::PressureFunction operator()(
            const hydraulics::RenouardGas& gas) const {
            return {hydraulics::renouard_f(q, pipe.diameter, pipe.length,
                                           gas.relative_density),
                    hydraulics::renouard_fprime(q, pipe.diameter, pipe.length,
                                                gas.relative_density)};
        }
        hydraulics::PressureFunction operator()(
            const hydraulics::DarcyWater& water) const {
            try {
                return hydraulics::darcy_pressure(q, pipe.diameter, pipe.length,
                                                  pipe.roughness, water);
            } catch (const OutOfRegimeError& e) {
                throw OutOfRegimeError("pipe '" + pipe.id + "': " + e.what());
            }
        }
        hydraulics::PressureFunction operator()(
            const hydraulics::AtkinsonVent& vent) const {
            return hydraulics::atkinson_pressure(q, pipe.discharge_coeff,
                                                 pipe.opening_area, vent);
        }
    };
    return std::visit(Visitor{pipe, q}, fluid);
}

// --- validation ---------------------------------------------------------------

namespace detail {

template <typename T>
inline void check_unique_ids(const std::vector<T>& items, const char* kind) {
    std::set<std::string> seen;
    for (const T& item : items) {
        if (item.id.empty()) {
            throw ValidationError(std::string(kind) + " with empty id");
        }
        if (!seen.insert(item.id).second) {
            throw ValidationError(std::string("duplicate ") + kind + " id '" +
                                  item.id + "'");
        }
    }
}

// Connected components over the node set implied by pipe endpoints.
inline std::vector<std::vector<std::string>> components(const Network& net) {
    std::map<std::string, std::vector<std::string>> adjacency;
    for (const Pipe& p : net.pipes) {
        adjacency[p.from_node].push_back(p.to_node);
        adjacency[p.to_node].push_back(p.from_node);
    }
    for (const Node& n : net.nodes) {
        adjacency.try_emplace(n.id);
    }
    std::set<std::string> unvisited;
    for (const auto& [node, _] : adjacency) unvisited.insert(node);

    std::vector<std::vector<std::string>> out;
    while (!unvisited.empty()) {
        std::vector<std::string> component;
        std::vector<std::string> stack{*unvisited.begin()};
        unvisited.erase(unvisited.begin());
        while (!stack.empty()) {
            std::string node = stack.back();
            stack.pop_back();
            component.push_back(node);
            for (const std::string& other : adjacency[node]) {
                auto it = unvisited.find(other);
                if (it != unvisited.end()) {
                    unvisited.erase(it);
                    stack.push_back(other);
                }
            }
        }
        std::sort(component.begin(), component.end());
        out.push_back(std::move(component));
    }
    return out;
}

}  // namespace detail

// Structural validation of a network definition.  Throws ValidationError or
// ConfigError with a message naming the offending element.
inline void validate(const Network& net) {
    if (net.pipes.empty()) {
        throw ValidationError("network has no pipes");
    }
    detail::check_unique_ids(net.pipes, "pipe");
    detail::check_unique_ids(net.nodes, "node");
    detail::check_unique_ids(net.loops, "loop");

    const bool is_vent =
        std::holds_alternative<hydraulics::AtkinsonVent>(net.fluid);
    for (const Pipe& p : net.pipes) {
        if (!(p.diameter > 0.0) && !is_vent) {
            throw ValidationError("pipe '" + p.id + "': diameter must be > 0");
        }
        if (!(p.length > 0.0) && !is_vent) {
            throw ValidationError("pipe '" + p.id + "': length must be > 0");
        }
        if (p.roughness < 0.0) {
            throw ValidationError("pipe '" + p.id + "': roughness must be >= 0");
        }
        if (is_vent && (!(p.discharge_coeff > 0.0) || !(p.opening_area > 0.0))) {
            throw ConfigError("pipe '" + p.id +
                              "': ventilation model needs positive "
                              "discharge_coeff and opening_area");
        }
        const bool has_from = !p.from_node.empty();
        const bool has_to = !p.to_node.empty();
        if (has_from != has_to) {
            throw ValidationError("pipe '" + p.id +
                                  "': give both endpoints or neither");
        }
    }

    const auto index = pipe_index(net);
    std::map<std::string, int> loops_per_pipe;
    for (const LoopDef& loop : net.loops) {
        if (loop.members.empty()) {
            throw ValidationError("loop '" + loop.id + "' has no members");
        }
        std::set<std::string> seen;
        for (const auto& [pipe_id, orientation] : loop.members) {
            if (index.find(pipe_id) == index.end()) {
                throw ValidationError("loop '" + loop.id +
                                      "' references unknown pipe '" + pipe_id +
                                      "'");
            }
            if (orientation != 1 && orientation != -1) {
                throw ValidationError("loop '" + loop.id + "', pipe '" + pipe_id +
                                      "': orientation must be +1 or -1");
            }
            if (!seen.insert(pipe_id).second) {
                throw ValidationError("loop '" + loop.id +
                                      "' lists pipe '" + pipe_id +
                                      "' more than once");
            }
            ++loops_per_pipe[pipe_id];
        }
    }
    for (const auto& [pipe_id, count] : loops_per_pipe) {
        if (count > 2) {
            throw ValidationError("pipe '" + pipe_id + "' appears in " +
                                  std::to_string(count) +
                                  " loops; at most 2 are allowed");
        }
    }

    if (!net.nodes.empty()) {
        double total = 0.0;
        double scale = 1.0;
        for (const Node& n : net.nodes) {
            total += n.demand;
            scale = std::max(scale, std::abs(n.demand));
        }
        if (std::abs(total) > 1e-9 * scale) {
            std::ostringstream msg;
            msg << "node demands must sum to zero, got " << total;
            throw ValidationError(msg.str());
        }
        std::set<std::string> node_ids;
        for (const Node& n : net.nodes) node_ids.insert(n.id);
        for (const Pipe& p : net.pipes) {
            for (const std::string& end : {p.from_node, p.to_node}) {
                if (!end.empty() && node_ids.find(end) == node_ids.end()) {
                    throw ValidationError("pipe '" + p.id +
                                          "' references unknown node '" + end +
                                          "'");
                }
            }
        }
    }

    if (has_full_incidence(net) && !net.loops.empty()) {
        const auto comps = detail::components(net);
        if (comps.size() > 1) {
            std::ostringstream msg;
            msg << "network graph is disconnected; components:";
            for (const auto& comp : comps) {
                msg << " {";
                for (std::size_t i = 0; i < comp.size(); ++i) {
                    msg << (i ? "," : "") << comp[i];
                }
                msg << "}";
            }
            throw ValidationError(msg.str());
        }
        std::set<std::string> node_ids;
        for (const Pipe& p : net.pipes) {
            node_ids.insert(p.from_node);
            node_ids.insert(p.to_node);
        }
        const std::size_t expected =
            net.pipes.size() - node_ids.size() + 1;
        if (net.loops.size() != expected) {
            std::ostringstream msg;
            msg << "expected " << expected << " independent loops for "
                << net.pipes.size() << " pipes and " << node_ids.size()
                << " nodes, got " << net.loops.size();
            throw ValidationError(msg.str());
        }
    }
}

// Check that a flow state covers every pipe exactly once with finite values.
inline void validate_state(const Network& net, const FlowState& state) {
    for (const Pipe& p : net.pipes) {
        auto it = state.flows.find(p.id);
        if (it == state.flows.end()) {
            throw ValidationError("flow state is missing pipe '" + p.id + "'");
        }
        if (!std::isfinite(it->second)) {
            throw ValidationError("flow state for pipe '" + p.id +
                                  "' is not finite");
        }
    }
    for (const auto& [pipe_id, _] : state.flows) {
        bool known = false;
        for (const Pipe& p : net.pipes) {
            if (p.id == pipe_id) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ValidationError("flow state references unknown pipe '" +
                                  pipe_id + "'");
        }
    }
}

// --- incidence and residuals ---------------------------------------------------

// Loop incidence matrix: entries[l][p] is +1/-1/0 for loop l (in definition
// order) and pipe p (in definition order).
struct IncidenceMatrix {
    std::vector<std::string> loop_ids;
    std::vector<std::string> pipe_ids;
    std::vector<std::vector<int>> entries;
};

inline IncidenceMatrix loop_incidence(const Network& net) {
    const auto index = pipe_index(net);
    IncidenceMatrix m;
    m.pipe_ids.reserve(net.pipes.size());
    for (const Pipe& p : net.pipes) m.pipe_ids.push_back(p.id);
    for (const LoopDef& loop : net.loops) {
        m.loop_ids.push_back(loop.id);
        std::vector<int> row(net.pipes.size(), 0);
        for (const auto& [pipe_id, orientation] : loop.members) {
            auto it = index.find(pipe_id);
            if (it == index.end()) {
                throw ValidationError("loop '" + loop.id +
                                      "' references unknown pipe '" + pipe_id +
                                      "'");
            }
            row[it->second] = orientation;
        }
        m.entries.push_back(std::move(row));
    }
    return m;
}

// Algebraic closure residual of each loop: sum over members of the pressure
// function evaluated at the flow the loop sees (orientation * Q).  Zero for
// every loop at the balanced state.
inline std::map<std::string, double> loop_residuals(const Network& net,
                                                    const FlowState& state) {
    validate_state(net, state);
    const auto index = pipe_index(net);
    std::map<std::string, double> out;
    for (const LoopDef& loop : net.loops) {
        double sum = 0.0;
        for (const auto& [pipe_id, orientation] : loop.members) {
            const Pipe& pipe = net.pipes.at(index.at(pipe_id));
            const double q = state.flows.at(pipe_id);
            sum += pipe_pressure(pipe, net.fluid, orientation * q).value;
        }
        out[loop.id] = sum;
    }
    return out;
}

// Mass balance residual of each node: inflow - outflow - demand.  Requires
// full node incidence on every pipe.
inline std::map<std::string, double> node_residuals(const Network& net,
                                                    const FlowState& state) {
    if (!has_full_incidence(net)) {
        throw ValidationError(
            "node data unavailable: every pipe needs from/to endpoints");
    }
    validate_state(net, state);
    std::map<std::string, double> out;
    for (const Pipe& p : net.pipes) {
        out.try_emplace(p.from_node, 0.0);
        out.try_emplace(p.to_node, 0.0);
    }
    for (const Node& n : net.nodes) {
        out.try_emplace(n.id, 0.0);
    }
    for (const Pipe& p : net.pipes) {
        const double q = state.flows.at(p.id);
        out[p.from_node] -= q;
        out[p.to_node] += q;
    }
    for (const Node& n : net.nodes) {
        out[n.id] -= n.demand;
    }
    return out;
}

}  // namespace loopflow::network
