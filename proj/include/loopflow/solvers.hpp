#pragma once

// Loop-balancing schemes.  All four methods share the same skeleton: evaluate
// every pipe's pressure function at the current flows, form per-loop closure
// residuals, compute one correction per loop, and add each correction to the
// member flows (respecting orientation) until both the corrections and the
// residuals are negligible.
//
//   * original   - each loop corrected independently by residual / sum|f'|,
//                  adjacent loops interact only through the flow updates;
//   * lobacev    - sign-adjusted variant: the corrections solve a linear
//                  system whose coefficients carry the residual signs;
//   * modified   - simultaneous solution of the full Newton system
//                  J = M diag(f') M^T over all loops;
//   * modified_multipoint - the modified scheme accelerated by a three-point
//                  iteration: every cycle of three iterations takes a plain
//                  Newton step, then two steps whose corrections are divided
//                  by bracket factors built from the cycle's residual history.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "loopflow/errors.hpp"
#include "loopflow/linsolve.hpp"
#include "loopflow/network.hpp"

namespace loopflow::solvers {

// --- configuration -----------------------------------------------------------

enum class Method { original, lobacev, modified, modified_multipoint };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::original: return "original";
        case Method::lobacev: return "lobacev";
        case Method::modified: return "modified";
        case Method::modified_multipoint: return "modified_multipoint";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& name) {
    if (name == "original") return Method::original;
    if (name == "lobacev") return Method::lobacev;
    if (name == "modified") return Method::modified;
    if (name == "modified_multipoint" || name == "multipoint") {
        return Method::modified_multipoint;
    }
    throw ConfigError("unknown method '" + name +
                      "' (expected original, lobacev, modified or "
                      "modified_multipoint)");
}

struct SolverConfig {
    Method method = Method::modified;
    int max_iterations = 100;
    double flow_tolerance = 1e-7;      // on the largest applied correction, m^3/s
    double residual_tolerance = 1e-6;  // on the largest relative loop residual
};

// --- trace types --------------------------------------------------------------

// One pipe as seen from inside a loop: flows and pressure-function values in
// the loop's own direction (orientation * canonical flow).
struct PipeRecord {
    std::string pipe_id;
    int orientation = 1;
    double q_before = 0.0;
    double f = 0.0;
    double fprime = 0.0;
    double q_after = 0.0;
};

struct LoopRecord {
    std::string loop_id;
    double residual = 0.0;
    double derivative_sum = 0.0;
    double raw = 0.0;      // raw per-loop solution of the method's system
    double applied = 0.0;  // correction actually added to the member flows
    bool fallback = false; // multipoint only: bracket rejected, plain step used
    std::vector<PipeRecord> pipes;
};

struct IterationRecord {
    int index = 0;  // 1-based
    std::vector<LoopRecord> loops;
    std::vector<std::pair<std::string, double>> flows_after;  // canonical
};

struct SolveTrace {
    Method method = Method::modified;
    SolverConfig config;
    std::string notes;
    std::vector<IterationRecord> iterations;
    bool converged = false;
    int iteration_count = 0;
};

// --- assembly products ----------------------------------------------------------

struct LoopEquation {
    std::string loop_id;
    double residual = 0.0;
    double derivative_sum = 0.0;
};

struct LoopSystem {
    std::vector<std::string> loop_ids;
    linsolve::DenseSystem system;
};

struct StepResult {
    std::vector<std::string> loop_ids;
    std::vector<double> raw;
    std::vector<double> applied;
    std::vector<bool> fallback;
    network::FlowState state;
};

// --- internal helpers -------------------------------------------------------------

namespace detail {

struct Member {
    std::size_t pipe = 0;
    int orientation = 1;
};

// Loops sorted by id with members resolved to pipe indices.  The sorted order
// is the deterministic processing order used everywhere.
struct LoopContext {
    std::vector<std::string> loop_ids;
    std::vector<std::vector<Member>> members;
};

inline LoopContext make_context(const network::Network& net) {
    const auto index = network::pipe_index(net);
    std::vector<const network::LoopDef*> sorted;
    sorted.reserve(net.loops.size());
    for (const auto& loop : net.loops) sorted.push_back(&loop);
    std::sort(sorted.begin(), sorted.end(),
              [](const network::LoopDef* a, const network::LoopDef* b) {
                  return a->id < b->id;
              });

    LoopContext ctx;
    for (const network::LoopDef* loop : sorted) {
        ctx.loop_ids.push_back(loop->id);
        std::vector<Member> members;
        for (const auto& [pipe_id, orientation] : loop->members) {
            auto it = index.find(pipe_id);
            if (it == index.end()) {
                throw ValidationError("loop '" + loop->id +
                                      "' references unknown pipe '" + pipe_id +
                                      "'");
            }
            members.push_back({it->second, orientation});
        }
        ctx.members.push_back(std::move(members));
    }
    return ctx;
}

// Pressure function of every pipe at the current canonical flows.
inline std::vector<hydraulics::PressureFunction> pipe_functions(
    const network::Network& net, const network::FlowState& state) {
    std::vector<hydraulics::PressureFunction> out;
    out.reserve(net.pipes.size());
    for (const network::Pipe& pipe : net.pipes) {
        out.push_back(network::pipe_pressure(pipe, net.fluid,
                                             state.flows.at(pipe.id)));
    }
    return out;
}

inline double loop_residual(const LoopContext& ctx, std::size_t l,
                            const std::vector<hydraulics::PressureFunction>& pf) {
    double sum = 0.0;
    for (const Member& m : ctx.members[l]) {
        sum += m.orientation * pf[m.pipe].value;
    }
    return sum;
}

inline double loop_derivative_sum(
    const LoopContext& ctx, std::size_t l,
    const std::vector<hydraulics::PressureFunction>& pf) {
    double sum = 0.0;
    for (const Member& m : ctx.members[l]) {
        sum += pf[m.pipe].derivative;
    }
    return sum;
}

// Largest |f| among the loop's members; the scale for relative residuals.
inline double loop_scale(const LoopContext& ctx, std::size_t l,
                         const std::vector<hydraulics::PressureFunction>& pf) {
    double mx = 0.0;
    for (const Member& m : ctx.members[l]) {
        mx = std::max(mx, std::abs(pf[m.pipe].value));
    }
    return mx;
}

inline void require_nondegenerate(const LoopContext& ctx, std::size_t l,
                                  double derivative_sum) {
    if (!(derivative_sum > 0.0)) {
        throw DegenerateLoopError(
            ctx.loop_ids[l], "loop '" + ctx.loop_ids[l] +
                                 "' is degenerate: the derivative sum vanishes "
                                 "(all member flows are zero)");
    }
}

// Newton coupling between two loops: sum over shared pipes of
// orientation_l * orientation_m * f'(pipe).
inline double shared_coupling(const LoopContext& ctx, std::size_t l,
                              std::size_t m,
                              const std::vector<hydraulics::PressureFunction>& pf) {
    double sum = 0.0;
    for (const Member& a : ctx.members[l]) {
        for (const Member& b : ctx.members[m]) {
            if (a.pipe == b.pipe) {
                sum += a.orientation * b.orientation * pf[a.pipe].derivative;
            }
        }
    }
    return sum;
}

inline network::FlowState apply_corrections(
    const network::Network& net, const network::FlowState& state,
    const LoopContext& ctx, const std::vector<double>& applied) {
    network::FlowState next = state;
    for (std::size_t l = 0; l < ctx.members.size(); ++l) {
        for (const Member& m : ctx.members[l]) {
            next.flows[net.pipes[m.pipe].id] += m.orientation * applied[l];
        }
    }
    return next;
}

}  // namespace detail

// --- assembly -----------------------------------------------------------------

// Per-loop residual and derivative sum for the independent-correction scheme.
// Loops are reported sorted by id.
inline std::vector<LoopEquation> assemble_original(
    const network::Network& net, const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto pf = detail::pipe_functions(net, state);
    std::vector<LoopEquation> out;
    for (std::size_t l = 0; l < ctx.loop_ids.size(); ++l) {
        LoopEquation eq;
        eq.loop_id = ctx.loop_ids[l];
        eq.residual = detail::loop_residual(ctx, l, pf);
        eq.derivative_sum = detail::loop_derivative_sum(ctx, l, pf);
        detail::require_nondegenerate(ctx, l, eq.derivative_sum);
        out.push_back(eq);
    }
    return out;
}

// Full Newton system over the loop corrections: diagonal entries are each
// loop's derivative sum, off-diagonal entries couple loops through shared
// pipes, and the right-hand side is the residual vector.  The correction is
// the negative of the system's solution.
inline LoopSystem assemble_modified(const network::Network& net,
                                    const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto pf = detail::pipe_functions(net, state);
    const std::size_t n = ctx.loop_ids.size();

    LoopSystem out;
    out.loop_ids = ctx.loop_ids;
    out.system.matrix.assign(n, std::vector<double>(n, 0.0));
    out.system.rhs.assign(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        const double dsum = detail::loop_derivative_sum(ctx, l, pf);
        detail::require_nondegenerate(ctx, l, dsum);
        out.system.matrix[l][l] = dsum;
        out.system.rhs[l] = detail::loop_residual(ctx, l, pf);
        for (std::size_t m = 0; m < n; ++m) {
            if (m == l) continue;
            out.system.matrix[l][m] = detail::shared_coupling(ctx, l, m, pf);
        }
    }
    return out;
}

// Sign-adjusted system: with s_l the sign of loop l's residual, the diagonal
// is s_l * sum|f'|, the coupling entries are s_l * s_m times the Newton
// coupling, and the right-hand side keeps the plain residuals.  The applied
// correction for loop l is -s_l times the l-th solution component, which
// reduces exactly to the independent scheme when the couplings are dropped.
inline LoopSystem assemble_lobacev(const network::Network& net,
                                   const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto pf = detail::pipe_functions(net, state);
    const std::size_t n = ctx.loop_ids.size();

    std::vector<double> residuals(n);
    std::vector<double> sign(n);
    for (std::size_t l = 0; l < n; ++l) {
        residuals[l] = detail::loop_residual(ctx, l, pf);
        sign[l] = residuals[l] < 0.0 ? -1.0 : 1.0;
    }

    LoopSystem out;
    out.loop_ids = ctx.loop_ids;
    out.system.matrix.assign(n, std::vector<double>(n, 0.0));
    out.system.rhs = residuals;
    for (std::size_t l = 0; l < n; ++l) {
        const double dsum = detail::loop_derivative_sum(ctx, l, pf);
        detail::require_nondegenerate(ctx, l, dsum);
        out.system.matrix[l][l] = sign[l] * dsum;
        for (std::size_t m = 0; m < n; ++m) {
            if (m == l) continue;
            out.system.matrix[l][m] =
                sign[l] * sign[m] * detail::shared_coupling(ctx, l, m, pf);
        }
    }
    return out;
}

// --- steps -------------------------------------------------------------------

// Independent corrections: raw_l = residual_l / sum|f'|_l, applied_l = -raw_l,
// all loops updated in the same sweep.
inline StepResult step_original(const network::Network& net,
                                const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto equations = assemble_original(net, state);

    StepResult out;
    out.loop_ids = ctx.loop_ids;
    out.fallback.assign(ctx.loop_ids.size(), false);
    for (const LoopEquation& eq : equations) {
        const double raw = eq.residual / eq.derivative_sum;
        out.raw.push_back(raw);
        out.applied.push_back(-raw);
    }
    out.state = detail::apply_corrections(net, state, ctx, out.applied);
    return out;
}

// Simultaneous Newton step: solve the full system, negate, apply.
inline StepResult step_modified(const network::Network& net,
                                const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto loop_system = assemble_modified(net, state);
    const std::vector<double> x = linsolve::solve(loop_system.system);

    StepResult out;
    out.loop_ids = ctx.loop_ids;
    out.raw = x;
    out.fallback.assign(x.size(), false);
    for (double v : x) out.applied.push_back(-v);
    out.state = detail::apply_corrections(net, state, ctx, out.applied);
    return out;
}

// Sign-adjusted step: solve the adjusted system, then apply -s_l * x_l.
inline StepResult step_lobacev(const network::Network& net,
                               const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto loop_system = assemble_lobacev(net, state);
    const std::vector<double>& residuals = loop_system.system.rhs;
    const std::vector<double> x = linsolve::solve(loop_system.system);

    StepResult out;
    out.loop_ids = ctx.loop_ids;
    out.raw = x;
    out.fallback.assign(x.size(), false);
    for (std::size_t l = 0; l < x.size(); ++l) {
        const double s = residuals[l] < 0.0 ? -1.0 : 1.0;
        out.applied.push_back(-s * x[l]);
    }
    out.state = detail::apply_corrections(net, state, ctx, out.applied);
    return out;
}

// Residual history for the three-point scheme.  `counter` counts completed
// steps; within each cycle of three, the residual vectors of the first and
// second steps are retained so the later steps can form their brackets.
struct ResidualHistory {
    int counter = 0;
    std::vector<double> cycle_base;
    std::vector<double> cycle_second;
};

// Three-point accelerated step.  Position 0 of each cycle takes the plain
// simultaneous Newton step and resets the history; position 1 divides each
// loop's Newton correction by (1 - 2 R/R1); position 2 divides it by
// (1 - 2u - u^2)(1 - v)(1 - 2w) with u = R2/R1, v = R/R2, w = R/R1, where R1
// and R2 are the loop's residuals at positions 0 and 1 and R is the current
// one.  A loop falls back to its plain Newton correction (flagged) when a
// bracket magnitude drops below 1e-12.
inline StepResult step_multipoint(const network::Network& net,
                                  const network::FlowState& state,
                                  ResidualHistory& history) {
    const auto ctx = detail::make_context(net);
    const auto loop_system = assemble_modified(net, state);
    const std::vector<double>& residuals = loop_system.system.rhs;
    const std::vector<double> x = linsolve::solve(loop_system.system);
    const std::size_t n = x.size();

    StepResult out;
    out.loop_ids = ctx.loop_ids;
    out.raw = x;
    out.fallback.assign(n, false);
    out.applied.assign(n, 0.0);

    const int position = history.counter % 3;
    constexpr double kBracketFloor = 1e-12;

    for (std::size_t l = 0; l < n; ++l) {
        const double newton = -x[l];
        double bracket = 1.0;
        if (position == 1) {
            const double r1 = history.cycle_base.at(l);
            if (r1 == 0.0) {
                out.fallback[l] = true;
            } else {
                bracket = 1.0 - 2.0 * residuals[l] / r1;
            }
        } else if (position == 2) {
            const double r1 = history.cycle_base.at(l);
            const double r2 = history.cycle_second.at(l);
            if (r1 == 0.0 || r2 == 0.0) {
                out.fallback[l] = true;
            } else {
                const double u = r2 / r1;
                const double v = residuals[l] / r2;
                const double w = residuals[l] / r1;
                bracket = (1.0 - 2.0 * u - u * u) * (1.0 - v) * (1.0 - 2.0 * w);
            }
        }
        if (position != 0 && !out.fallback[l] &&
            std::abs(bracket) < kBracketFloor) {
            out.fallback[l] = true;
        }
        out.applied[l] = out.fallback[l] ? newton : newton / bracket;
    }

    if (position == 0) {
        history.cycle_base = residuals;
        history.cycle_second.clear();
    } else if (position == 1) {
        history.cycle_second = residuals;
    }
    ++history.counter;

    out.state = detail::apply_corrections(net, state, ctx, out.applied);
    return out;
}

// --- driver ------------------------------------------------------------------

namespace detail {

inline std::string multipoint_notes() {
    return "three-point schedule: within each cycle of three iterations, the "
           "first takes the plain simultaneous step and resets the residual "
           "history, the second divides each loop's step by (1 - 2 R/R1), the "
           "third by (1 - 2u - u^2)(1 - v)(1 - 2w) with u = R2/R1, v = R/R2, "
           "w = R/R1; a loop falls back to the plain step (flagged) when a "
           "bracket magnitude is below 1e-12";
}

template <typename Fn>
inline auto with_iteration_context(int iteration, Fn&& fn) {
    const std::string prefix = "iteration " + std::to_string(iteration) + ": ";
    try {
        return fn();
    } catch (const DegenerateLoopError& e) {
        throw DegenerateLoopError(e.loop_id(), prefix + e.what());
    } catch (const SingularSystemError& e) {
        throw SingularSystemError(prefix + e.what(), e.pivot());
    } catch (const OutOfRegimeError& e) {
        throw OutOfRegimeError(prefix + e.what());
    }
}

}  // namespace detail

// Run the configured method from the given initial flows until both
// convergence tests hold or the iteration budget is exhausted:
//
//   * the largest |applied correction| of the iteration is below
//     config.flow_tolerance, and
//   * after the update, every loop's |residual| relative to the largest
//     member |f| is below config.residual_tolerance.
//
// The returned trace records every iteration in full; `converged` reports
// whether the tolerances were met within config.max_iterations.
inline SolveTrace solve(const network::Network& net,
                        const network::FlowState& initial,
                        const SolverConfig& config = {}) {
    network::validate(net);
    network::validate_state(net, initial);
    if (net.loops.empty()) {
        throw ValidationError("network has no loops to balance");
    }
    if (config.max_iterations < 1) {
        throw ConfigError("max_iterations must be >= 1");
    }
    if (!(config.flow_tolerance > 0.0) || !(config.residual_tolerance > 0.0)) {
        throw ConfigError("tolerances must be positive");
    }

    const auto ctx = detail::make_context(net);
    for (std::size_t l = 0; l < ctx.members.size(); ++l) {
        bool any_nonzero = false;
        for (const detail::Member& m : ctx.members[l]) {
            if (initial.flows.at(net.pipes[m.pipe].id) != 0.0) {
                any_nonzero = true;
                break;
            }
        }
        if (!any_nonzero) {
            throw ValidationError("loop '" + ctx.loop_ids[l] +
                                  "' has all member flows zero; provide a "
                                  "nonzero initial guess");
        }
    }

    SolveTrace trace;
    trace.method = config.method;
    trace.config = config;
    if (config.method == Method::modified_multipoint) {
        trace.notes = detail::multipoint_notes();
    }

    network::FlowState state = initial;
    ResidualHistory history;

    for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
        const auto pf_before = detail::with_iteration_context(
            iteration, [&] { return detail::pipe_functions(net, state); });

        StepResult step = detail::with_iteration_context(iteration, [&] {
            switch (config.method) {
                case Method::original: return step_original(net, state);
                case Method::lobacev: return step_lobacev(net, state);
                case Method::modified: return step_modified(net, state);
                case Method::modified_multipoint:
                    return step_multipoint(net, state, history);
            }
            throw ConfigError("unknown method");
        });

        const auto pf_after = detail::with_iteration_context(
            iteration, [&] { return detail::pipe_functions(net, step.state); });

        IterationRecord record;
        record.index = iteration;
        double max_applied = 0.0;
        double max_ratio = 0.0;
        for (std::size_t l = 0; l < ctx.loop_ids.size(); ++l) {
            LoopRecord loop;
            loop.loop_id = ctx.loop_ids[l];
            loop.residual = detail::loop_residual(ctx, l, pf_before);
            loop.derivative_sum = detail::loop_derivative_sum(ctx, l, pf_before);
            loop.raw = step.raw[l];
            loop.applied = step.applied[l];
            loop.fallback = step.fallback[l];
            for (const detail::Member& m : ctx.members[l]) {
                const network::Pipe& pipe = net.pipes[m.pipe];
                PipeRecord row;
                row.pipe_id = pipe.id;
                row.orientation = m.orientation;
                row.q_before = m.orientation * state.flows.at(pipe.id);
                row.f = m.orientation * pf_before[m.pipe].value;
                row.fprime = pf_before[m.pipe].derivative;
                row.q_after = m.orientation * step.state.flows.at(pipe.id);
                loop.pipes.push_back(std::move(row));
            }
            record.loops.push_back(std::move(loop));

            max_applied = std::max(max_applied, std::abs(step.applied[l]));
            const double residual_after = detail::loop_residual(ctx, l, pf_after);
            const double scale = detail::loop_scale(ctx, l, pf_after);
            const double ratio =
                scale > 0.0 ? std::abs(residual_after) / scale
                            : std::abs(residual_after);
            max_ratio = std::max(max_ratio, ratio);
        }
        for (const network::Pipe& pipe : net.pipes) {
            record.flows_after.emplace_back(pipe.id,
                                            step.state.flows.at(pipe.id));
        }
        trace.iterations.push_back(std::move(record));

        state = std::move(step.state);
        trace.iteration_count = iteration;
        if (max_applied < config.flow_tolerance &&
            max_ratio < config.residual_tolerance) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

// Loop residuals scaled by each loop's largest member |f|: the quantity the
// residual tolerance is tested against.
inline std::map<std::string, double> relative_loop_residuals(
    const network::Network& net, const network::FlowState& state) {
    const auto ctx = detail::make_context(net);
    const auto pf = detail::pipe_functions(net, state);
    std::map<std::string, double> out;
    for (std::size_t l = 0; l < ctx.loop_ids.size(); ++l) {
        const double residual = detail::loop_residual(ctx, l, pf);
        const double scale = detail::loop_scale(ctx, l, pf);
        out[ctx.loop_ids[l]] =
            scale > 0.0 ? std::abs(residual) / scale : std::abs(residual);
    }
    return out;
}

// Convenience accessor: the flow state after the last recorded iteration.
inline network::FlowState final_state(const network::Network& net,
                                      const network::FlowState& initial,
                                      const SolveTrace& trace) {
    (void)net;
    if (trace.iterations.empty()) return initial;
    network::FlowState out;
    for (const auto& [pipe_id, flow] : trace.iterations.back().flows_after) {
        out.flows[pipe_id] = flow;
    }
    return out;
}

}  // namespace loopflow::solvers
