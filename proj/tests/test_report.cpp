#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>

#include "json.hpp"
#include "loopflow/report.hpp"
#include "testutil.hpp"

using namespace loopflow;
using cli::Format;

namespace {

solvers::SolveTrace one_iteration_trace() {
    solvers::SolverConfig config;
    config.max_iterations = 1;
    return solvers::solve(testutil::make_reference_network(),
                          testutil::iter1_flows(), config);
}

cli::NetworkFile reference_doc() {
    cli::NetworkFile doc;
    doc.net = testutil::make_reference_network();
    doc.flows = testutil::assumed_flows();
    doc.has_flows = true;
    return doc;
}

std::size_t count_lines(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("format names map to the enum") {
    CHECK(cli::format_from_string("table") == Format::table);
    CHECK(cli::format_from_string("csv") == Format::csv);
    CHECK(cli::format_from_string("json") == Format::json);
    CHECK_THROWS_AS(cli::format_from_string("xml"), ConfigError);
}

TEST_CASE("the trace table rounds values to display precision") {
    const auto trace = one_iteration_trace();
    const std::string table = cli::emit_trace(trace, Format::table);

    CHECK(table.find("iteration 1") != std::string::npos);
    // Loop II's shared pipe, as seen from inside the loop.
    CHECK(table.find("loop II") != std::string::npos);
    CHECK(table.find("0.0167") != std::string::npos);
    CHECK(table.find("6238747.4") != std::string::npos);
    CHECK(table.find("679911398.4") != std::string::npos);
    CHECK(table.find("converged: no") != std::string::npos);
    // No color codes unless asked for.
    CHECK(table.find('\033') == std::string::npos);
    CHECK(cli::emit_trace_table(trace, /*color=*/true).find("\033[1m") !=
          std::string::npos);
}

TEST_CASE("the trace CSV has one full-precision row per loop member") {
    const auto trace = one_iteration_trace();
    const std::string csv = cli::emit_trace(trace, Format::csv);

    std::size_t members = 0;
    for (const auto& loop : trace.iterations[0].loops) {
        members += loop.pipes.size();
    }
    CHECK(members == 21);  // 6 + 3 + 5 + 4 + 3
    CHECK(count_lines(csv) == members + 1);
    CHECK(csv.rfind("iteration,loop,pipe,orientation,q_before,f,fprime,"
                    "loop_residual,loop_derivative_sum,raw,applied,fallback,"
                    "q_after\n",
                    0) == 0);

    // Full precision: the first data row's q_before round-trips exactly.
    const std::size_t start = csv.find('\n') + 1;
    const std::size_t end = csv.find('\n', start);
    const std::string row = csv.substr(start, end - start);
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos <= row.size()) {
        const std::size_t comma = row.find(',', pos);
        fields.push_back(row.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    REQUIRE(fields.size() == 13);
    CHECK(fields[0] == "1");
    CHECK(fields[1] == "I");
    CHECK(std::stod(fields[4]) ==
          trace.iterations[0].loops[0].pipes[0].q_before);
}

TEST_CASE("the trace JSON reparses to numerically identical values") {
    const auto trace = one_iteration_trace();
    const std::string emitted = cli::emit_trace(trace, Format::json);
    CHECK(cli::emit_trace(trace, Format::json) == emitted);  // deterministic

    const auto doc = nlohmann::json::parse(emitted);
    CHECK(doc["method"] == "modified");
    CHECK(doc["converged"] == false);
    CHECK(doc["iterations"] == 1);
    CHECK(doc["config"]["max_iterations"] == 1);
    CHECK(doc["config"]["flow_tolerance"].get<double>() ==
          trace.config.flow_tolerance);

    REQUIRE(doc["trace"].size() == 1);
    const auto& jit = doc["trace"][0];
    CHECK(jit["iteration"] == 1);
    REQUIRE(jit["loops"].size() == 5);
    for (std::size_t l = 0; l < 5; ++l) {
        const auto& jl = jit["loops"][l];
        const auto& loop = trace.iterations[0].loops[l];
        CHECK(jl["id"] == loop.loop_id);
        CHECK(jl["residual"].get<double>() == loop.residual);
        CHECK(jl["derivative_sum"].get<double>() == loop.derivative_sum);
        CHECK(jl["raw"].get<double>() == loop.raw);
        CHECK(jl["applied"].get<double>() == loop.applied);
        REQUIRE(jl["pipes"].size() == loop.pipes.size());
        for (std::size_t p = 0; p < loop.pipes.size(); ++p) {
            CHECK(jl["pipes"][p]["id"] == loop.pipes[p].pipe_id);
            CHECK(jl["pipes"][p]["orientation"] == loop.pipes[p].orientation);
            CHECK(jl["pipes"][p]["q_before"].get<double>() ==
                  loop.pipes[p].q_before);
            CHECK(jl["pipes"][p]["f"].get<double>() == loop.pipes[p].f);
            CHECK(jl["pipes"][p]["fprime"].get<double>() ==
                  loop.pipes[p].fprime);
            CHECK(jl["pipes"][p]["q_after"].get<double>() ==
                  loop.pipes[p].q_after);
        }
    }
    for (const auto& [pipe, q] : trace.iterations[0].flows_after) {
        CHECK(jit["flows_after"][pipe].get<double>() == q);
    }
}

TEST_CASE("an empty trace renders as headers only") {
    const solvers::SolveTrace empty;

    const std::string csv = cli::emit_trace(empty, Format::csv);
    CHECK(count_lines(csv) == 1);
    CHECK(csv.rfind("iteration,loop,pipe", 0) == 0);

    const std::string table = cli::emit_trace(empty, Format::table);
    CHECK(table.find("method: modified") != std::string::npos);
    CHECK(table.find("iteration ") == std::string::npos);
    CHECK(table.find("converged: no") != std::string::npos);

    const auto doc = nlohmann::json::parse(cli::emit_trace(empty, Format::json));
    CHECK(doc["trace"].empty());
}

TEST_CASE("the summary lists geometry, start, result and velocity per pipe") {
    const auto doc = reference_doc();
    const auto trace = solvers::solve(doc.net, doc.flows, {});
    REQUIRE(trace.converged);
    const auto final_flows = solvers::final_state(doc.net, doc.flows, trace);

    SECTION("json") {
        const auto summary = nlohmann::json::parse(
            cli::format_summary(doc, trace, final_flows, Format::json));
        CHECK(summary["method"] == "modified");
        CHECK(summary["converged"] == true);
        REQUIRE(summary["pipes"].size() == 14);

        const auto& p1 = summary["pipes"][0];
        CHECK(p1["id"] == "1");
        CHECK(p1["diameter_m"].get<double>() == 0.305);
        CHECK(p1["length_m"].get<double>() == 1127.8);
        CHECK_THAT(p1["assumed_m3_per_h"].get<double>(),
                   Catch::Matchers::WithinRel(1203.2, 1e-12));
        CHECK_THAT(p1["flow_m3_per_h"].get<double>(),
                   Catch::Matchers::WithinAbs(testutil::kCalculatedM3h[0], 1.0));
        const double q1 = final_flows.flows.at("1");
        CHECK(p1["velocity_m_per_s"].get<double>() ==
              hydraulics::gas_velocity(q1, 0.305, 4.0e5, 101325.0));
        // The reversed pipe keeps its sign in the summary.
        CHECK(summary["pipes"][12]["flow_m3_per_h"].get<double>() < 0.0);
    }
    SECTION("table") {
        const std::string table =
            cli::format_summary(doc, trace, final_flows, Format::table);
        CHECK(table.find("pipe") != std::string::npos);
        CHECK(table.find("diameter_m") != std::string::npos);
        CHECK(table.find("length_m") != std::string::npos);
        CHECK(table.find("assumed_m3/h") != std::string::npos);
        CHECK(table.find("calculated_m3/h") != std::string::npos);
        CHECK(table.find("velocity_m/s") != std::string::npos);
        CHECK(table.find("0.305") != std::string::npos);
        CHECK(table.find("1127.8") != std::string::npos);
        CHECK(table.find("1203.2") != std::string::npos);
        CHECK(table.find("converged: yes") != std::string::npos);
        // 14 pipe rows + method/converged/blank/header lines.
        CHECK(count_lines(table) == 18);
    }
    SECTION("csv") {
        const std::string csv =
            cli::format_summary(doc, trace, final_flows, Format::csv);
        CHECK(csv.rfind("pipe,diameter_m,length_m,assumed_m3_per_h,"
                        "flow_m3_per_s,flow_m3_per_h,velocity_m_per_s\n",
                        0) == 0);
        CHECK(count_lines(csv) == 15);
        CHECK(csv.find("\n1,0.305,1127.8,") != std::string::npos);
    }
}

TEST_CASE("check_network reports loop closure against the tolerance") {
    const auto doc = reference_doc();

    const cli::CheckReport before = cli::check_network(doc);
    CHECK_FALSE(before.balanced);
    CHECK(before.text.find("balanced: no") != std::string::npos);
    CHECK(before.text.find("loop") != std::string::npos);

    auto solved = doc;
    const auto trace = solvers::solve(doc.net, doc.flows, {});
    solved.flows = solvers::final_state(doc.net, doc.flows, trace);
    const cli::CheckReport after = cli::check_network(solved);
    CHECK(after.balanced);
    CHECK(after.text.find("balanced: yes") != std::string::npos);
}

TEST_CASE("check_network includes node imbalances when incidence is known") {
    const auto grid = testutil::make_grid_network(2, 2, 7);
    cli::NetworkFile doc;
    doc.net = grid.net;
    doc.flows = grid.flows;
    doc.has_flows = true;

    const cli::CheckReport report = cli::check_network(doc);
    CHECK(report.text.find("node") != std::string::npos);
    CHECK(report.text.find("imbalance_m3/s") != std::string::npos);
    // The random initial state satisfies mass balance but not loop closure.
    CHECK_FALSE(report.balanced);
    CHECK(report.text.find("balanced: no") != std::string::npos);
}

TEST_CASE("check_network requires a flows section") {
    auto doc = reference_doc();
    doc.has_flows = false;
    CHECK_THROWS_AS(cli::check_network(doc), ValidationError);
}

TEST_CASE("the comparison table lists one row per method") {
    const std::vector<cli::CompareRow> rows = {
        {"original", true, 52},
        {"lobacev", true, 13},
        {"modified", true, 5},
        {"modified_multipoint", true, 6},
    };
    const std::string table = cli::format_compare(rows);
    CHECK(table.find("method") != std::string::npos);
    CHECK(table.find("original") != std::string::npos);
    CHECK(table.find("52") != std::string::npos);
    CHECK(table.find("modified_multipoint") != std::string::npos);
    CHECK(count_lines(table) == 5);
}
