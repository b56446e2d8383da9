// Exercises the installed CLI binary end to end via std::system. The binary
// path arrives in SML_CLI_BIN (set by ctest); these cases are skipped when it
// is absent so the test binary still runs standalone.

#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const char* cli_bin() { return std::getenv("SML_CLI_BIN"); }

std::string tmp_dir() {
    const char* d = std::getenv("SML_TEST_TMP");
    return d ? d : "/tmp";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_bin()) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string write_config(const std::string& name, const std::string& body) {
    const std::string path = tmp_dir() + "/" + name;
    std::ofstream out(path);
    out << body;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli exit code contract and deterministic output") {
    if (!cli_bin()) {
        MESSAGE("SML_CLI_BIN not set; skipping CLI tests");
        return;
    }

    const std::string good = write_config("cli_certify.json", R"({
        "model": {"kind":"flat-torus","periods":[1.0,1.0]},
        "command": {"construction":"bidisc","a":1.0,"b":1.0,"n":1},
        "samples": 500, "format": "json"
    })");
    CHECK(run_cli("certify --config " + good) == 0);

    // unattainable tolerance: exit 2
    CHECK(run_cli("certify --config " + good + " --tol 1e-30") == 2);

    // malformed config: exit 1
    const std::string bad = write_config("cli_bad.json", "{\"command\":");
    CHECK(run_cli("certify --config " + bad) == 1);
    const std::string incomplete = write_config("cli_incomplete.json", "{\"command\":{}}");
    CHECK(run_cli("certify --config " + incomplete) == 1);
    CHECK(run_cli("certify --config /nonexistent/cfg.json") == 1);

    // unknown flags and missing subcommand are usage errors
    CHECK(run_cli("") != 0);
    CHECK(run_cli("certify") != 0);  // --config is required

    // byte-identical outputs for the same config and seed
    const std::string rho = write_config("cli_rho.json", R"({
        "model": {"kind":"flat-torus","periods":[1.0,1.0]},
        "command": {"random_pairs": 4},
        "cert_samples": 64
    })");
    const std::string out1 = tmp_dir() + "/rho1.csv";
    const std::string out2 = tmp_dir() + "/rho2.csv";
    CHECK(run_cli("rho --config " + rho + " --out " + out1) == 0);
    CHECK(run_cli("rho --config " + rho + " --out " + out2) == 0);
    const std::string doc1 = slurp(out1);
    CHECK(doc1 == slurp(out2));
    CHECK(doc1.rfind("pair,", 0) == 0);

    // --seed flag changes the sampled pairs
    const std::string out3 = tmp_dir() + "/rho3.csv";
    CHECK(run_cli("rho --config " + rho + " --seed 11 --out " + out3) == 0);
    CHECK(slurp(out3) != doc1);

    // --format json switches the document shape
    const std::string outj = tmp_dir() + "/rho.json";
    CHECK(run_cli("rho --config " + rho + " --format json --out " + outj) == 0);
    CHECK(slurp(outj).rfind("[", 0) == 0);
}

TEST_CASE("cli converge and capacities round trip") {
    if (!cli_bin()) return;

    const std::string conv = write_config("cli_conv.json", R"({
        "model": {"kind":"flat-torus","periods":[1.0,1.0]},
        "command": {
            "curve": {"type":"geodesic","start":[0.1,0.2],"direction":[3.0,4.0],"length":0.5},
            "k_min": 2, "k_max": 4
        },
        "cert_samples": 64
    })");
    const std::string out = tmp_dir() + "/conv.csv";
    CHECK(run_cli("converge --config " + conv + " --out " + out) == 0);
    const std::string doc = slurp(out);
    CHECK(doc.rfind("k,mesh,sum_dg,lower,upper,squeeze_factor,riem_length", 0) == 0);
    // three rows plus the header
    CHECK(std::count(doc.begin(), doc.end(), '\n') == 4);

    const std::string caps = write_config("cli_caps.json", R"({
        "model": {"kind":"flat-torus","periods":[1.0,1.0]},
        "command": {"region": {"kind":"bi-disc","a":1.0,"b":1.0,"n":2}},
        "samples": 500, "format": "json"
    })");
    const std::string capout = tmp_dir() + "/caps.json";
    CHECK(run_cli("capacities --config " + caps + " --out " + capout) == 0);
    CHECK(slurp(capout).find("\"gromov_lower\"") != std::string::npos);
}
