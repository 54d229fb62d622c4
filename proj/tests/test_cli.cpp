#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "loopflow/loopflow.hpp"

#ifndef LOOPFLOW_BIN
#error "LOOPFLOW_BIN must name the command-line binary"
#endif
#ifndef LOOPFLOW_DATA_DIR
#error "LOOPFLOW_DATA_DIR must point at the bundled data directory"
#endif

namespace {

const std::string kBin = LOOPFLOW_BIN;
const std::string kNetFile = std::string(LOOPFLOW_DATA_DIR) + "/figure1.net";

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string temp_path(const std::string& tag) {
    static int counter = 0;
    return "/tmp/loopflow_cli_" + std::to_string(::getpid()) + "_" + tag + "_" +
           std::to_string(counter++);
}

// Run the binary through the shell, capturing exit code, stdout and stderr.
RunResult run(const std::string& args, const std::string& env_prefix = "") {
    const std::string out_path = temp_path("out");
    const std::string err_path = temp_path("err");
    const std::string cmd = env_prefix + kBin + " " + args + " >" + out_path +
                            " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return result;
}

}  // namespace

TEST_CASE("solve converges on the bundled network and exits 0") {
    const RunResult r = run("solve " + kNetFile);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("converged: yes") != std::string::npos);
    CHECK(r.out.find("calculated_m3/h") != std::string::npos);
    CHECK(r.err.empty());
}

TEST_CASE("two runs write byte-identical JSON traces") {
    const std::string trace1 = temp_path("trace1");
    const std::string trace2 = temp_path("trace2");

    const RunResult r1 =
        run("solve " + kNetFile + " --format json --trace " + trace1);
    const RunResult r2 =
        run("solve " + kNetFile + " --format json --trace " + trace2);
    CHECK(r1.exit_code == 0);
    CHECK(r2.exit_code == 0);

    const std::string t1 = slurp(trace1);
    const std::string t2 = slurp(trace2);
    REQUIRE_FALSE(t1.empty());
    CHECK(t1 == t2);
    CHECK(r1.out == r2.out);

    // The trace is well-formed JSON with one record per iteration.
    const auto doc = nlohmann::json::parse(t1);
    CHECK(doc["converged"] == true);
    CHECK(doc["trace"].size() == doc["iterations"].get<std::size_t>());

    std::remove(trace1.c_str());
    std::remove(trace2.c_str());
}

TEST_CASE("an exhausted iteration budget exits 2") {
    const RunResult r = run("solve " + kNetFile + " --max-iter 2");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("converged: no") != std::string::npos);
}

TEST_CASE("every method option is accepted") {
    for (const std::string method :
         {"original", "lobacev", "modified", "multipoint",
          "modified_multipoint"}) {
        const RunResult r = run("solve " + kNetFile + " --method " + method);
        INFO("method " << method);
        CHECK(r.exit_code == 0);
    }
    const RunResult bad = run("solve " + kNetFile + " --method newton");
    CHECK(bad.exit_code == 1);
}

TEST_CASE("check reports the assumed flows as unbalanced") {
    const RunResult r = run("check " + kNetFile);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("balanced: no") != std::string::npos);
}

TEST_CASE("check accepts a balanced file") {
    using namespace loopflow;
    cli::NetworkFile doc = cli::load_network(kNetFile);
    const auto trace = solvers::solve(doc.net, doc.flows, {});
    REQUIRE(trace.converged);
    doc.flows = solvers::final_state(doc.net, doc.flows, trace);

    const std::string balanced_path = temp_path("balanced") + ".net";
    {
        std::ofstream out(balanced_path);
        out << cli::serialize_network(doc);
    }
    const RunResult r = run("check " + balanced_path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("balanced: yes") != std::string::npos);
    std::remove(balanced_path.c_str());
}

TEST_CASE("compare runs all four methods") {
    const RunResult r = run("compare " + kNetFile);
    CHECK(r.exit_code == 0);
    for (const std::string method :
         {"original", "lobacev", "modified", "modified_multipoint"}) {
        INFO("method " << method);
        CHECK(r.out.find(method) != std::string::npos);
    }

    // The simultaneous scheme must not need more iterations than the
    // independent one.
    std::istringstream lines(r.out);
    std::string line;
    int original_iters = -1, modified_iters = -1;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string name;
        int iters = 0;
        if (fields >> name >> iters) {
            if (name == "original") original_iters = iters;
            if (name == "modified") modified_iters = iters;
        }
    }
    REQUIRE(original_iters > 0);
    REQUIRE(modified_iters > 0);
    CHECK(modified_iters < original_iters);
}

TEST_CASE("missing and malformed inputs exit 1 with a diagnostic") {
    const RunResult missing = run("solve /no/such/file.net");
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);

    const std::string bad_path = temp_path("bad") + ".net";
    {
        std::ofstream out(bad_path);
        out << "fluid gas\nrelative_density 0.64\nwhat is this\n";
    }
    const RunResult malformed = run("solve " + bad_path);
    CHECK(malformed.exit_code == 1);
    CHECK(malformed.err.find("line 3") != std::string::npos);
    std::remove(bad_path.c_str());

    // A file without flows cannot be solved.
    const std::string no_flows_path = temp_path("noflows") + ".net";
    {
        std::ofstream out(no_flows_path);
        out << "fluid gas\nrelative_density 0.64\npipes:\na 0.2 100\n"
               "b 0.2 100\nc 0.2 100\nloops:\nL +a +b -c\n";
    }
    const RunResult no_flows = run("solve " + no_flows_path);
    CHECK(no_flows.exit_code == 1);
    CHECK(no_flows.err.find("flows") != std::string::npos);
    std::remove(no_flows_path.c_str());

    // No subcommand is a usage error.
    const RunResult none = run("");
    CHECK(none.exit_code == 1);
}

TEST_CASE("table output carries no escape codes when piped or disabled") {
    const RunResult piped = run("solve " + kNetFile);
    CHECK(piped.out.find('\033') == std::string::npos);

    const RunResult no_color =
        run("solve " + kNetFile, "LOOPFLOW_NO_COLOR=1 ");
    CHECK(no_color.out.find('\033') == std::string::npos);
}
