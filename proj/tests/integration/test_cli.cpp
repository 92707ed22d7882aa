// Runs the nhflow executable as a user would and checks exit codes and outputs.
#include <json.hpp>

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int run(const std::string& args, const std::string& log = "cli.log") {
    const std::string cmd = std::string(NHFLOW_CLI) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_config(const std::string& name, const json& doc) {
    std::ofstream(name) << doc.dump(2);
    return name;
}

json small_covariance(double threshold = 4.0) {
    json d = json::parse(slurp(std::string(NHFLOW_SOURCE_DIR) + "/configs/covariance.json"));
    d["ensemble"]["N"] = 16;
    d["replicas"] = 30;
    d["quadrature"] = {{"radial", 12}, {"angular", 32}};
    d["params"]["threshold"] = threshold;
    return d;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(run("") == 1);
    CHECK(run("no-such-experiment") == 1);
    CHECK(run("wick --replicas many") == 1);
    CHECK(run("--help") == 0);
}

TEST_CASE("a malformed config exits with 1 and reports line and column") {
    std::ofstream("broken.json") << "{\n  \"experiment\": \"covariance\",\n  \"seed\": 3,,\n}\n";
    CHECK(run("covariance --config broken.json", "broken.log") == 1);
    const std::string log = slurp("broken.log");
    CHECK(log.find("line 3") != std::string::npos);
    CHECK(log.find("column") != std::string::npos);
}

TEST_CASE("an invalid field exits with 1 and names it") {
    json d = small_covariance();
    d["ensemble"]["N"] = 0;
    CHECK(run("covariance --config " + write_config("invalid.json", d), "invalid.log") == 1);
    CHECK(slurp("invalid.log").find("/ensemble/N") != std::string::npos);
    CHECK(run("wick --config " + write_config("mismatch.json", small_covariance())) == 1);
}

TEST_CASE("passing and failing runs exit with 0 and 2") {
    CHECK(run("covariance --config " + write_config("pass.json", small_covariance()) + " --out out_pass") == 0);
    CHECK(fs::exists("out_pass/results.csv"));
    CHECK(fs::exists("out_pass/summary.json"));
    CHECK(fs::exists("out_pass/manifest.json"));
    // a z bound nobody can meet
    CHECK(run("covariance --config " + write_config("fail.json", small_covariance(1e-9)) + " --out out_fail") == 2);
    CHECK(json::parse(slurp("out_fail/summary.json"))["pass"] == false);
}

TEST_CASE("same seed gives byte-identical results and summaries") {
    const std::string cfg = write_config("repro.json", small_covariance());
    REQUIRE(run("covariance --config " + cfg + " --seed 5 --out rep_a") == 0);
    REQUIRE(run("covariance --config " + cfg + " --seed 5 --threads 2 --out rep_b") == 0);
    CHECK(slurp("rep_a/results.csv") == slurp("rep_b/results.csv"));
    CHECK(slurp("rep_a/summary.json") == slurp("rep_b/summary.json"));
    const json m = json::parse(slurp("rep_a/manifest.json"));
    CHECK(m["seed"] == 5);
    CHECK(m.contains("timestamp"));
    CHECK(m.contains("config_hash"));
    CHECK(m.contains("version"));
    REQUIRE(run("covariance --config " + cfg + " --seed 6 --out rep_c") == 0);
    CHECK(slurp("rep_a/results.csv") != slurp("rep_c/results.csv"));
}
