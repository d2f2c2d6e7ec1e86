#include "irlkf/config.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace irlkf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int status = -1;
    std::string output;
};

Outcome run_cli(const std::string& args) {
    const std::string cmd = std::string(IRLKF_CLI_PATH) + " " + args + " 2>&1";
    Outcome out;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) out.output += buf;
    const int raw = pclose(pipe);
    out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("irlkf_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::string kSmall =
    "--set experiment.iterations=2 --set experiment.repetitions=2 --set planner.restarts=2 --set learner.sigma_alpha=1";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run writes one CSV per arm and a manifest, identically on rerun") {
    const fs::path a = fresh("run_a"), b = fresh("run_b");
    const Outcome first = run_cli("run " + kSmall + " --out " + a.string());
    INFO(first.output);
    REQUIRE(first.status == 0);
    for (const char* f : {"PP.csv", "KF.csv", "AL.csv", "manifest.json"}) CHECK(fs::exists(a / f));
    const std::string kf = slurp(a / "KF.csv");
    CHECK(std::count(kf.begin(), kf.end(), '\n') == 5);

    REQUIRE(run_cli("run --config " + (a / "manifest.json").string() + " --jobs 2 --out " + b.string()).status == 0);
    for (const char* f : {"PP.csv", "KF.csv", "AL.csv", "manifest.json"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("catalog prints 48 environments") {
    const fs::path dir = fresh("catalog");
    const Outcome out = run_cli("catalog --out " + dir.string());
    REQUIRE(out.status == 0);
    const std::string csv = slurp(dir / "catalog.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 49);
    CHECK(out.output == csv);
}

TEST_CASE("plan without uncertainty is the same for every attitude") {
    const fs::path dir = fresh("plan");
    const fs::path est = dir / "estimate.json";
    std::ofstream(est) << R"({"mean": [1, -1], "covariance": [[0, 0], [0, 0]]})";
    const fs::path averse = dir / "averse", neutral = dir / "neutral";
    REQUIRE(run_cli("plan --estimate " + est.string() + " --mode averse --set plan.env_id=5 --out " +
                    averse.string())
                .status == 0);
    REQUIRE(run_cli("plan --estimate " + est.string() + " --mode neutral --set plan.env_id=5 --out " +
                    neutral.string())
                .status == 0);
    CHECK(slurp(averse / "trajectory.csv") == slurp(neutral / "trajectory.csv"));
    CHECK(json::parse(slurp(averse / "plan.json"))["mode"] == "averse");
}

TEST_CASE("sweep writes a grid") {
    const fs::path dir = fresh("sweep");
    REQUIRE(run_cli("sweep --set sweep.resolution=3 --set sweep.env_id=36 --out " + dir.string()).status == 0);
    const std::string csv = slurp(dir / "sweep_laptop.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("configuration errors exit with status 2") {
    const fs::path dir = fresh("bad");
    std::ofstream(dir / "bad.json") << "{\n  \"experiment.iterations\": 3,\n  \"experiment.iteratoins\": 4\n}";
    const Outcome unknown = run_cli("run --config " + (dir / "bad.json").string() + " --out " + dir.string());
    CHECK(unknown.status == 2);
    CHECK(unknown.output.find("experiment.iteratoins") != std::string::npos);
    CHECK(unknown.output.find("line 3") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "manifest.json"));

    std::ofstream(dir / "broken.json") << "{\"experiment.iterations\": ";
    CHECK(run_cli("run --config " + (dir / "broken.json").string()).status == 2);
    CHECK(run_cli("run --set experiment.repetitions=0").status == 2);
    CHECK(run_cli("run --config /nonexistent.json").status == 2);
    CHECK(run_cli("frobnicate").status == 2);
}

TEST_CASE("runtime failures exit with status 1") {
    const Outcome out = run_cli("serve --host 256.0.0.1 --port 1");
    CHECK(out.status == 1);
    CHECK(run_cli("plan --set plan.env_id=99").status == 1);
}

TEST_CASE("help lists every config key") {
    const Outcome out = run_cli("--help");
    CHECK(out.status == 0);
    for (const auto& k : config_keys()) {
        INFO(k.name);
        CHECK(out.output.find(k.name) != std::string::npos);
    }
}

}
