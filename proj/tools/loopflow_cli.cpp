// loopflow command line: balance looped pipe networks.
//
//   loopflow solve <file> [--method M] [--tol-flow X] [--tol-residual X]
//                        [--max-iter N] [--trace PATH] [--format F]
//   loopflow check <file>
//   loopflow compare <file>
//
// Exit codes: 0 success / balanced, 2 not converged / not balanced,
// 1 bad input or usage.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loopflow/loopflow.hpp"

#if defined(_WIN32)
#include <io.h>
#define LOOPFLOW_ISATTY _isatty
#define LOOPFLOW_FILENO _fileno
#else
#include <unistd.h>
#define LOOPFLOW_ISATTY isatty
#define LOOPFLOW_FILENO fileno
#endif

namespace {

bool color_enabled() {
    if (std::getenv("LOOPFLOW_NO_COLOR") != nullptr) return false;
    return LOOPFLOW_ISATTY(LOOPFLOW_FILENO(stdout)) != 0;
}

loopflow::cli::NetworkFile load_with_flows(const std::string& path) {
    loopflow::cli::NetworkFile doc = loopflow::cli::load_network(path);
    if (!doc.has_flows) {
        throw loopflow::ValidationError(path +
                                        ": file has no flows section; initial "
                                        "flows are required");
    }
    return doc;
}

int run_solve(const std::string& path, const std::string& method_name,
              double tol_flow, double tol_residual, int max_iter,
              const std::string& trace_path, const std::string& format_name) {
    using namespace loopflow;

    const cli::NetworkFile doc = load_with_flows(path);
    solvers::SolverConfig config;
    config.method = solvers::method_from_string(method_name);
    config.flow_tolerance = tol_flow;
    config.residual_tolerance = tol_residual;
    config.max_iterations = max_iter;

    const cli::Format format = cli::format_from_string(format_name);
    const solvers::SolveTrace trace = solvers::solve(doc.net, doc.flows, config);
    const network::FlowState final_flows =
        solvers::final_state(doc.net, doc.flows, trace);

    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) {
            throw Error("cannot write trace to '" + trace_path + "'");
        }
        out << cli::emit_trace(trace, format, /*color=*/false);
    }

    std::cout << cli::format_summary(doc, trace, final_flows, format,
                                     format == cli::Format::table &&
                                         color_enabled());
    return trace.converged ? 0 : 2;
}

int run_check(const std::string& path) {
    const loopflow::cli::NetworkFile doc = load_with_flows(path);
    const loopflow::cli::CheckReport report =
        loopflow::cli::check_network(doc, 1e-6, 1e-9, color_enabled());
    std::cout << report.text;
    return report.balanced ? 0 : 2;
}

int run_compare(const std::string& path) {
    using namespace loopflow;

    const cli::NetworkFile doc = load_with_flows(path);
    const std::vector<solvers::Method> methods = {
        solvers::Method::original,
        solvers::Method::lobacev,
        solvers::Method::modified,
        solvers::Method::modified_multipoint,
    };
    std::vector<cli::CompareRow> rows;
    bool all_converged = true;
    for (solvers::Method method : methods) {
        solvers::SolverConfig config;
        config.method = method;
        const solvers::SolveTrace trace =
            solvers::solve(doc.net, doc.flows, config);
        rows.push_back({solvers::method_name(method), trace.converged,
                        trace.iteration_count});
        all_converged = all_converged && trace.converged;
    }
    std::cout << cli::format_compare(rows, color_enabled());
    return all_converged ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"steady-state flow distribution in looped pipe networks"};
    app.require_subcommand(1);

    std::string path;
    std::string method = "modified";
    std::string format = "table";
    std::string trace_path;
    double tol_flow = 1e-7;
    double tol_residual = 1e-6;
    int max_iter = 100;

    CLI::App* solve = app.add_subcommand("solve", "balance the network");
    solve->add_option("file", path, "network file")->required();
    solve->add_option("--method", method,
                      "original | lobacev | modified | multipoint")
        ->check(CLI::IsMember(
            {"original", "lobacev", "modified", "multipoint",
             "modified_multipoint"}));
    solve->add_option("--tol-flow", tol_flow,
                      "tolerance on the largest applied correction (m^3/s)");
    solve->add_option("--tol-residual", tol_residual,
                      "tolerance on the largest relative loop residual");
    solve->add_option("--max-iter", max_iter, "iteration budget");
    solve->add_option("--trace", trace_path,
                      "write the full iteration trace to this file");
    solve->add_option("--format", format, "table | csv | json")
        ->check(CLI::IsMember({"table", "csv", "json"}));

    CLI::App* check = app.add_subcommand(
        "check", "evaluate loop closure and node balance at the file's flows");
    check->add_option("file", path, "network file")->required();

    CLI::App* compare = app.add_subcommand(
        "compare", "run every method and report iteration counts");
    compare->add_option("file", path, "network file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) {
            return run_solve(path, method, tol_flow, tol_residual, max_iter,
                             trace_path, format);
        }
        if (check->parsed()) {
            return run_check(path);
        }
        if (compare->parsed()) {
            return run_compare(path);
        }
    } catch (const loopflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
