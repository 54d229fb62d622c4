#pragma once

// Human- and machine-readable output: iteration traces in table, CSV or JSON
// form, result summaries, balance checks, and the method comparison table.
//
// Determinism rules: the table form rounds flows to 1e-4 and pressure values
// to 0.1 for readability; CSV and JSON write full-precision shortest
// round-trip decimals, and JSON key order is fixed, so two runs over the
// same input produce byte-identical documents.

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "loopflow/errors.hpp"
#include "loopflow/netfile.hpp"
#include "loopflow/network.hpp"
#include "loopflow/solvers.hpp"

namespace loopflow::cli {

enum class Format { table, csv, json };

inline Format format_from_string(const std::string& name) {
    if (name == "table") return Format::table;
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    throw ConfigError("unknown format '" + name +
                      "' (expected table, csv or json)");
}

namespace detail {

inline std::string fixed(double v, int decimals, int width = 0) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%*.*f", width, decimals, v);
    return buf;
}

struct Palette {
    bool enabled = false;
    std::string bold(const std::string& s) const {
        return enabled ? "\033[1m" + s + "\033[0m" : s;
    }
    std::string dim(const std::string& s) const {
        return enabled ? "\033[2m" + s + "\033[0m" : s;
    }
};

// Velocity for the summary: gas flows are rescaled from reference to line
// pressure; water uses the pipe cross-section; ventilation the opening area.
inline double summary_velocity(const network::Network& net,
                               const network::Pipe& pipe, double q) {
    if (std::holds_alternative<hydraulics::RenouardGas>(net.fluid)) {
        const double line_pressure = net.operating_pressure > 0.0
                                         ? net.operating_pressure
                                         : net.reference_pressure;
        return hydraulics::gas_velocity(q, pipe.diameter, line_pressure,
                                        net.reference_pressure);
    }
    if (std::holds_alternative<hydraulics::AtkinsonVent>(net.fluid)) {
        return q / pipe.opening_area;
    }
    const double area = hydraulics::kPi * pipe.diameter * pipe.diameter / 4.0;
    return q / area;
}

}  // namespace detail

// --- iteration trace ------------------------------------------------------------

inline nlohmann::ordered_json trace_to_json(const solvers::SolveTrace& trace) {
    nlohmann::ordered_json doc;
    doc["method"] = solvers::method_name(trace.method);
    doc["converged"] = trace.converged;
    doc["iterations"] = trace.iteration_count;
    doc["config"] = {
        {"max_iterations", trace.config.max_iterations},
        {"flow_tolerance", trace.config.flow_tolerance},
        {"residual_tolerance", trace.config.residual_tolerance},
    };
    if (!trace.notes.empty()) {
        doc["notes"] = trace.notes;
    }
    doc["trace"] = nlohmann::ordered_json::array();
    for (const solvers::IterationRecord& it : trace.iterations) {
        nlohmann::ordered_json jit;
        jit["iteration"] = it.index;
        jit["loops"] = nlohmann::ordered_json::array();
        for (const solvers::LoopRecord& loop : it.loops) {
            nlohmann::ordered_json jl;
            jl["id"] = loop.loop_id;
            jl["residual"] = loop.residual;
            jl["derivative_sum"] = loop.derivative_sum;
            jl["raw"] = loop.raw;
            jl["applied"] = loop.applied;
            if (loop.fallback) {
                jl["fallback"] = true;
            }
            jl["pipes"] = nlohmann::ordered_json::array();
            for (const solvers::PipeRecord& p : loop.pipes) {
                jl["pipes"].push_back({{"id", p.pipe_id},
                                       {"orientation", p.orientation},
                                       {"q_before", p.q_before},
                                       {"f", p.f},
                                       {"fprime", p.fprime},
                                       {"q_after", p.q_after}});
            }
            jit["loops"].push_back(std::move(jl));
        }
        nlohmann::ordered_json flows;
        for (const auto& [pipe_id, q] : it.flows_after) {
            flows[pipe_id] = q;
        }
        jit["flows_after"] = std::move(flows);
        doc["trace"].push_back(std::move(jit));
    }
    return doc;
}

inline std::string emit_trace_table(const solvers::SolveTrace& trace,
                                    bool color = false) {
    const detail::Palette palette{color};
    std::ostringstream out;
    out << palette.bold("method: " + solvers::method_name(trace.method))
        << "\n";
    for (const solvers::IterationRecord& it : trace.iterations) {
        out << "\n"
            << palette.bold("iteration " + std::to_string(it.index)) << "\n";
        for (const solvers::LoopRecord& loop : it.loops) {
            out << "loop " << loop.loop_id << ": residual "
                << detail::fixed(loop.residual, 1) << "  sum_fprime "
                << detail::fixed(loop.derivative_sum, 1) << "  raw "
                << detail::fixed(loop.raw, 4) << "  applied "
                << detail::fixed(loop.applied, 4)
                << (loop.fallback ? "  [fallback]" : "") << "\n";
            out << palette.dim(
                       "  pipe          Q_before                  f            "
                       "      f'      Q_after")
                << "\n";
            for (const solvers::PipeRecord& p : loop.pipes) {
                out << "  " << p.pipe_id
                    << std::string(p.pipe_id.size() < 6 ? 6 - p.pipe_id.size()
                                                        : 1,
                                   ' ')
                    << detail::fixed(p.q_before, 4, 10)
                    << detail::fixed(p.f, 1, 19)
                    << detail::fixed(p.fprime, 1, 19)
                    << detail::fixed(p.q_after, 4, 13) << "\n";
            }
        }
    }
    out << "\nconverged: " << (trace.converged ? "yes" : "no") << " after "
        << trace.iteration_count << " iteration"
        << (trace.iteration_count == 1 ? "" : "s") << "\n";
    return out.str();
}

inline std::string emit_trace_csv(const solvers::SolveTrace& trace) {
    std::ostringstream out;
    out << "iteration,loop,pipe,orientation,q_before,f,fprime,"
           "loop_residual,loop_derivative_sum,raw,applied,fallback,q_after\n";
    using cli::detail::format_double;
    for (const solvers::IterationRecord& it : trace.iterations) {
        for (const solvers::LoopRecord& loop : it.loops) {
            for (const solvers::PipeRecord& p : loop.pipes) {
                out << it.index << ',' << loop.loop_id << ',' << p.pipe_id << ','
                    << p.orientation << ',' << format_double(p.q_before) << ','
                    << format_double(p.f) << ',' << format_double(p.fprime)
                    << ',' << format_double(loop.residual) << ','
                    << format_double(loop.derivative_sum) << ','
                    << format_double(loop.raw) << ','
                    << format_double(loop.applied) << ','
                    << (loop.fallback ? 1 : 0) << ','
                    << format_double(p.q_after) << "\n";
            }
        }
    }
    return out.str();
}

inline std::string emit_trace(const solvers::SolveTrace& trace, Format format,
                              bool color = false) {
    switch (format) {
        case Format::table: return emit_trace_table(trace, color);
        case Format::csv: return emit_trace_csv(trace);
        case Format::json: return trace_to_json(trace).dump(2) + "\n";
    }
    throw ConfigError("unknown trace format");
}

// --- result summary ---------------------------------------------------------------

// Final flows next to the starting guess, with mean velocities.
inline std::string format_summary(const NetworkFile& doc,
                                  const solvers::SolveTrace& trace,
                                  const network::FlowState& final_flows,
                                  Format format, bool color = false) {
    const network::Network& net = doc.net;
    if (format == Format::json) {
        nlohmann::ordered_json out;
        out["method"] = solvers::method_name(trace.method);
        out["converged"] = trace.converged;
        out["iterations"] = trace.iteration_count;
        out["pipes"] = nlohmann::ordered_json::array();
        for (const network::Pipe& p : net.pipes) {
            const double q = final_flows.flows.at(p.id);
            nlohmann::ordered_json jp;
            jp["id"] = p.id;
            jp["diameter_m"] = p.diameter;
            jp["length_m"] = p.length;
            if (doc.has_flows) {
                jp["assumed_m3_per_h"] = doc.flows.flows.at(p.id) * 3600.0;
            }
            jp["flow_m3_per_s"] = q;
            jp["flow_m3_per_h"] = q * 3600.0;
            jp["velocity_m_per_s"] = detail::summary_velocity(net, p, q);
            out["pipes"].push_back(std::move(jp));
        }
        return out.dump(2) + "\n";
    }
    if (format == Format::csv) {
        using cli::detail::format_double;
        std::ostringstream out;
        out << "pipe,diameter_m,length_m,assumed_m3_per_h,flow_m3_per_s,"
               "flow_m3_per_h,velocity_m_per_s\n";
        for (const network::Pipe& p : net.pipes) {
            const double q = final_flows.flows.at(p.id);
            out << p.id << ',' << format_double(p.diameter) << ','
                << format_double(p.length) << ',';
            if (doc.has_flows) out << format_double(doc.flows.flows.at(p.id) * 3600.0);
            out << ',' << format_double(q) << ',' << format_double(q * 3600.0)
                << ',' << format_double(detail::summary_velocity(net, p, q))
                << "\n";
        }
        return out.str();
    }

    const detail::Palette palette{color};
    std::ostringstream out;
    out << palette.bold("method: " + solvers::method_name(trace.method))
        << "\n";
    out << "converged: " << (trace.converged ? "yes" : "no") << " after "
        << trace.iteration_count << " iteration"
        << (trace.iteration_count == 1 ? "" : "s") << "\n\n";
    out << palette.dim(
               "pipe    diameter_m    length_m    assumed_m3/h   "
               "calculated_m3/h   velocity_m/s")
        << "\n";
    for (const network::Pipe& p : net.pipes) {
        const double q = final_flows.flows.at(p.id);
        out << p.id
            << std::string(p.id.size() < 8 ? 8 - p.id.size() : 1, ' ')
            << detail::fixed(p.diameter, 3, 10)
            << detail::fixed(p.length, 1, 12);
        if (doc.has_flows) {
            out << detail::fixed(doc.flows.flows.at(p.id) * 3600.0, 1, 16);
        } else {
            out << std::string(16, ' ');
        }
        out << detail::fixed(q * 3600.0, 1, 18)
            << detail::fixed(detail::summary_velocity(net, p, q), 2, 15)
            << "\n";
    }
    return out.str();
}

// --- balance check ------------------------------------------------------------------

struct CheckReport {
    bool balanced = false;
    std::string text;
};

// Evaluate loop closure (and node balance when incidence is given) at the
// file's flows, without iterating.
inline CheckReport check_network(const NetworkFile& doc,
                                 double residual_tolerance = 1e-6,
                                 double node_tolerance = 1e-9,
                                 bool color = false) {
    const detail::Palette palette{color};
    if (!doc.has_flows) {
        throw ValidationError("file has no flows section to check");
    }
    const auto residuals = network::loop_residuals(doc.net, doc.flows);
    const auto relative =
        solvers::relative_loop_residuals(doc.net, doc.flows);

    CheckReport report;
    report.balanced = true;
    std::ostringstream out;
    out << palette.dim("loop      residual              relative") << "\n";
    for (const auto& [loop_id, residual] : residuals) {
        const double rel = relative.at(loop_id);
        if (!(rel < residual_tolerance)) report.balanced = false;
        out << loop_id
            << std::string(loop_id.size() < 10 ? 10 - loop_id.size() : 1, ' ')
            << detail::fixed(residual, 1, -20)
            << cli::detail::format_double(rel) << "\n";
    }

    if (network::has_full_incidence(doc.net)) {
        const auto node_res = network::node_residuals(doc.net, doc.flows);
        out << "\n" << palette.dim("node      imbalance_m3/s") << "\n";
        for (const auto& [node_id, imbalance] : node_res) {
            if (!(std::abs(imbalance) < node_tolerance)) {
                report.balanced = false;
            }
            out << node_id
                << std::string(node_id.size() < 10 ? 10 - node_id.size() : 1,
                               ' ')
                << cli::detail::format_double(imbalance) << "\n";
        }
    }
    out << "\nbalanced: " << (report.balanced ? "yes" : "no") << "\n";
    report.text = out.str();
    return report;
}

// --- method comparison ------------------------------------------------------------------

struct CompareRow {
    std::string method;
    bool converged = false;
    int iterations = 0;
};

inline std::string format_compare(const std::vector<CompareRow>& rows,
                                  bool color = false) {
    const detail::Palette palette{color};
    std::ostringstream out;
    out << palette.dim("method                  iterations   converged")
        << "\n";
    for (const CompareRow& row : rows) {
        out << row.method
            << std::string(row.method.size() < 24 ? 24 - row.method.size() : 1,
                           ' ')
            << row.iterations
            << std::string(row.iterations < 10 ? 12 : (row.iterations < 100 ? 11 : 10),
                           ' ')
            << (row.converged ? "yes" : "no") << "\n";
    }
    return out.str();
}

}  // namespace loopflow::cli
