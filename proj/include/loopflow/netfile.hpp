#pragma once

// Plain-text network file format.
//
//   # comment                       (anywhere; rest of line)
//   fluid gas | water | ventilation
//   relative_density 0.64           (gas)
//   density 1000                    (water, ventilation; kg/m^3)
//   kinematic_viscosity 1e-6        (water; m^2/s)
//   operating_pressure 4e5 Pa       (absolute line pressure, optional)
//   reference_pressure 101325 Pa    (optional, default 101325)
//
//   pipes:
//   <id> <diameter_m> <length_m>                      (gas)
//   <id> <diameter_m> <length_m> <roughness_m>        (water)
//   <id> <discharge_coeff> <opening_area_m2>          (ventilation)
//     ... each optionally followed by from=<node> to=<node>
//
//   nodes:                         (optional)
//   <id> <demand> <m3/s | m3/h>
//
//   loops:
//   <id> <member> <member> ...     members are +pipe / -pipe / pipe (= +)
//
//   flows:                         (optional)
//   <id> <flow> <m3/s | m3/h>
//
// Flows and demands must carry one of the two volume unit tags; pressures
// must carry "Pa".  Internally everything is m^3/s and Pa.  Serialization
// writes shortest round-trip decimal numbers, so parse(serialize(x)) == x.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "loopflow/errors.hpp"
#include "loopflow/network.hpp"

namespace loopflow::cli {

struct NetworkFile {
    network::Network net;
    network::FlowState flows;
    bool has_flows = false;
};

namespace detail {

inline std::string strip(const std::string& line) {
    std::string s = line;
    if (auto pos = s.find('#'); pos != std::string::npos) {
        s.erase(pos);
    }
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, int line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end != begin + tok.size() || tok.empty()) {
        throw ParseError(line, "expected a number, got '" + tok + "'");
    }
    return value;
}

// Volume flow with a mandatory unit tag, converted to m^3/s.
inline double parse_flow(const std::string& value, const std::string& unit,
                         int line) {
    const double v = parse_double(value, line);
    if (unit == "m3/s") return v;
    if (unit == "m3/h") return v / 3600.0;
    throw ParseError(line, "expected unit m3/s or m3/h, got '" + unit + "'");
}

inline double parse_pressure(const std::string& value, const std::string& unit,
                             int line) {
    const double v = parse_double(value, line);
    if (unit != "Pa") {
        throw ParseError(line, "expected unit Pa, got '" + unit + "'");
    }
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// Parse a network document.  Throws ParseError (with the offending line
// number) for syntax problems and ValidationError for structural ones.
inline NetworkFile parse_network(const std::string& text) {
    enum class Section { header, pipes, nodes, loops, flows };
    Section section = Section::header;

    NetworkFile doc;
    std::optional<std::string> fluid_kind;
    std::optional<double> relative_density;
    std::optional<double> density;
    std::optional<double> kinematic_viscosity;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::strip(raw);
        if (line.empty()) continue;

        if (line == "pipes:") { section = Section::pipes; continue; }
        if (line == "nodes:") { section = Section::nodes; continue; }
        if (line == "loops:") { section = Section::loops; continue; }
        if (line == "flows:") { section = Section::flows; continue; }

        const auto toks = detail::tokens(line);
        switch (section) {
            case Section::header: {
                const std::string& key = toks[0];
                if (key == "fluid") {
                    if (toks.size() != 2) {
                        throw ParseError(line_no, "usage: fluid <gas|water|ventilation>");
                    }
                    if (toks[1] != "gas" && toks[1] != "water" &&
                        toks[1] != "ventilation") {
                        throw ParseError(line_no, "unknown fluid '" + toks[1] + "'");
                    }
                    fluid_kind = toks[1];
                } else if (key == "relative_density" || key == "density" ||
                           key == "kinematic_viscosity") {
                    if (toks.size() != 2) {
                        throw ParseError(line_no, "usage: " + key + " <value>");
                    }
                    const double v = detail::parse_double(toks[1], line_no);
                    if (key == "relative_density") relative_density = v;
                    else if (key == "density") density = v;
                    else kinematic_viscosity = v;
                } else if (key == "operating_pressure" ||
                           key == "reference_pressure") {
                    if (toks.size() != 3) {
                        throw ParseError(line_no, "usage: " + key + " <value> Pa");
                    }
                    const double v =
                        detail::parse_pressure(toks[1], toks[2], line_no);
                    if (key == "operating_pressure") {
                        doc.net.operating_pressure = v;
                    } else {
                        doc.net.reference_pressure = v;
                    }
                } else {
                    throw ParseError(line_no, "unknown directive '" + key + "'");
                }
                break;
            }
            case Section::pipes: {
                if (!fluid_kind) {
                    throw ParseError(line_no, "set 'fluid' before the pipes section");
                }
                network::Pipe pipe;
                pipe.id = toks[0];
                std::size_t positional = 0;
                std::vector<double> values;
                for (std::size_t i = 1; i < toks.size(); ++i) {
                    const std::string& tok = toks[i];
                    if (tok.rfind("from=", 0) == 0) {
                        pipe.from_node = tok.substr(5);
                    } else if (tok.rfind("to=", 0) == 0) {
                        pipe.to_node = tok.substr(3);
                    } else {
                        values.push_back(detail::parse_double(tok, line_no));
                        ++positional;
                    }
                }
                if (*fluid_kind == "gas") {
                    if (positional != 2) {
                        throw ParseError(line_no,
                                         "gas pipe needs: <id> <diameter_m> <length_m>");
                    }
                    pipe.diameter = values[0];
                    pipe.length = values[1];
                } else if (*fluid_kind == "water") {
                    if (positional != 3) {
                        throw ParseError(
                            line_no,
                            "water pipe needs: <id> <diameter_m> <length_m> <roughness_m>");
                    }
                    pipe.diameter = values[0];
                    pipe.length = values[1];
                    pipe.roughness = values[2];
                } else {
                    if (positional != 2) {
                        throw ParseError(
                            line_no,
                            "ventilation pipe needs: <id> <discharge_coeff> <opening_area_m2>");
                    }
                    pipe.discharge_coeff = values[0];
                    pipe.opening_area = values[1];
                }
                doc.net.pipes.push_back(std::move(pipe));
                break;
            }
            case Section::nodes: {
                if (toks.size() != 3) {
                    throw ParseError(line_no, "node needs: <id> <demand> <m3/s|m3/h>");
                }
                network::Node node;
                node.id = toks[0];
                node.demand = detail::parse_flow(toks[1], toks[2], line_no);
                doc.net.nodes.push_back(std::move(node));
                break;
            }
            case Section::loops: {
                if (toks.size() < 2) {
                    throw ParseError(line_no, "loop needs: <id> <member> ...");
                }
                network::LoopDef loop;
                loop.id = toks[0];
                for (std::size_t i = 1; i < toks.size(); ++i) {
                    const std::string& tok = toks[i];
                    int orientation = 1;
                    std::string pipe_id = tok;
                    if (tok[0] == '+' || tok[0] == '-') {
                        orientation = tok[0] == '-' ? -1 : 1;
                        pipe_id = tok.substr(1);
                    }
                    if (pipe_id.empty()) {
                        throw ParseError(line_no, "empty loop member '" + tok + "'");
                    }
                    loop.members.emplace_back(pipe_id, orientation);
                }
                doc.net.loops.push_back(std::move(loop));
                break;
            }
            case Section::flows: {
                if (toks.size() != 3) {
                    throw ParseError(line_no, "flow needs: <id> <flow> <m3/s|m3/h>");
                }
                const std::string& pipe_id = toks[0];
                if (doc.flows.flows.count(pipe_id)) {
                    throw ParseError(line_no,
                                     "duplicate flow for pipe '" + pipe_id + "'");
                }
                doc.flows.flows[pipe_id] =
                    detail::parse_flow(toks[1], toks[2], line_no);
                doc.has_flows = true;
                break;
            }
        }
    }

    if (!fluid_kind) {
        throw ParseError(line_no, "missing 'fluid' directive");
    }
    if (*fluid_kind == "gas") {
        hydraulics::RenouardGas gas;
        if (relative_density) gas.relative_density = *relative_density;
        doc.net.fluid = gas;
    } else if (*fluid_kind == "water") {
        hydraulics::DarcyWater water;
        if (density) water.density = *density;
        if (kinematic_viscosity) water.kinematic_viscosity = *kinematic_viscosity;
        doc.net.fluid = water;
    } else {
        hydraulics::AtkinsonVent vent;
        if (density) vent.density = *density;
        doc.net.fluid = vent;
    }

    network::validate(doc.net);
    if (doc.has_flows) {
        network::validate_state(doc.net, doc.flows);
    }
    return doc;
}

// Read and parse a network file from disk.
inline NetworkFile load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_network(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.what());
    }
}

// Canonical serialization: SI units (m^3/s, Pa), shortest round-trip decimal
// numbers, fixed section order.  parse_network(serialize_network(doc))
// reproduces doc exactly.
inline std::string serialize_network(const NetworkFile& doc) {
    using detail::format_double;
    const network::Network& net = doc.net;
    std::ostringstream out;

    if (std::holds_alternative<hydraulics::RenouardGas>(net.fluid)) {
        const auto& gas = std::get<hydraulics::RenouardGas>(net.fluid);
        out << "fluid gas\n";
        out << "relative_density " << format_double(gas.relative_density) << "\n";
    } else if (std::holds_alternative<hydraulics::DarcyWater>(net.fluid)) {
        const auto& water = std::get<hydraulics::DarcyWater>(net.fluid);
        out << "fluid water\n";
        out << "density " << format_double(water.density) << "\n";
        out << "kinematic_viscosity "
            << format_double(water.kinematic_viscosity) << "\n";
    } else {
        const auto& vent = std::get<hydraulics::AtkinsonVent>(net.fluid);
        out << "fluid ventilation\n";
        out << "density " << format_double(vent.density) << "\n";
    }
    if (net.operating_pressure > 0.0) {
        out << "operating_pressure " << format_double(net.operating_pressure)
            << " Pa\n";
    }
    out << "reference_pressure " << format_double(net.reference_pressure)
        << " Pa\n";

    out << "\npipes:\n";
    const bool is_vent =
        std::holds_alternative<hydraulics::AtkinsonVent>(net.fluid);
    const bool is_water =
        std::holds_alternative<hydraulics::DarcyWater>(net.fluid);
    for (const network::Pipe& p : net.pipes) {
        out << p.id;
        if (is_vent) {
            out << " " << format_double(p.discharge_coeff) << " "
                << format_double(p.opening_area);
        } else {
            out << " " << format_double(p.diameter) << " "
                << format_double(p.length);
            if (is_water) out << " " << format_double(p.roughness);
        }
        if (!p.from_node.empty() && !p.to_node.empty()) {
            out << " from=" << p.from_node << " to=" << p.to_node;
        }
        out << "\n";
    }

    if (!net.nodes.empty()) {
        out << "\nnodes:\n";
        for (const network::Node& n : net.nodes) {
            out << n.id << " " << format_double(n.demand) << " m3/s\n";
        }
    }

    if (!net.loops.empty()) {
        out << "\nloops:\n";
        for (const network::LoopDef& loop : net.loops) {
            out << loop.id;
            for (const auto& [pipe_id, orientation] : loop.members) {
                out << " " << (orientation < 0 ? "-" : "+") << pipe_id;
            }
            out << "\n";
        }
    }

    if (doc.has_flows) {
        out << "\nflows:\n";
        for (const network::Pipe& p : net.pipes) {
            auto it = doc.flows.flows.find(p.id);
            if (it != doc.flows.flows.end()) {
                out << p.id << " " << format_double(it->second) << " m3/s\n";
            }
        }
    }
    return out.str();
}

}  // namespace loopflow::cli
