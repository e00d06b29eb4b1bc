#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const fs::path dir = fs::temp_directory_path() / "prds_cli_test";
    fs::create_directories(dir);
    const fs::path out_file = dir / "stdout.txt";
    const std::string cmd =
        std::string(PRDS_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream buf;
    buf << in.rdbuf();
    return RunResult{WEXITSTATUS(status), buf.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "prds_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("analyze reports q=15 for p=61, s=61,2") {
    auto r = run_cli("analyze --p 61 --s 61,2");
    CHECK(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j["q"] == 15);
    CHECK(j["attractor"].size() == 15);
}

TEST_CASE("analyze reports 25 components for p=41, s=11,41") {
    auto r = run_cli("analyze --p 41 --s 11,41");
    CHECK(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j["components"].size() == 25);
}

TEST_CASE("analyze p=5, s=5: the attractor is all of Gamma_5 with the identity chain") {
    auto r = run_cli("analyze --p 5 --s 5");
    CHECK(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j["q"] == 4);
    CHECK(j["attractor"] == json::array({0, 1, 2, 3}));
    CHECK(j["components"].size() == 4);
    CHECK(j["transient_absorption"].empty());
}

TEST_CASE("validation failures list every violation and exit 2") {
    auto r = run_cli("analyze --p 6 --s 1");
    CHECK(r.exit_code == 2);
    auto r2 = run_cli("simulate --p 29 --s 29,2 --q 0.5,0.6");
    CHECK(r2.exit_code == 2);
}

TEST_CASE("unknown flags exit 2; --help exits 0") {
    CHECK(run_cli("analyze --nonsense 3").exit_code == 2);
    CHECK(run_cli("--help").exit_code == 0);
    for (const char* sub : {"analyze", "simulate", "chain", "pattern"}) {
        auto r = run_cli(std::string(sub) + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("--p") != std::string::npos);
        CHECK(r.out.find("--seed") != std::string::npos);
    }
}

TEST_CASE("simulate is byte-identical for a fixed (config, seed)") {
    auto dir_a = fresh_dir("sim_a");
    auto dir_b = fresh_dir("sim_b");
    const std::string base =
        "simulate --p 29 --s 29,2,3 --q 0.2,0.4,0.4 --seed 7 --steps 1000 --out-dir ";
    CHECK(run_cli(base + dir_a.string()).exit_code == 0);
    CHECK(run_cli(base + dir_b.string()).exit_code == 0);
    CHECK(slurp(dir_a / "trace.csv") == slurp(dir_b / "trace.csv"));
    CHECK(slurp(dir_a / "summary.json") == slurp(dir_b / "summary.json"));
    CHECK(!slurp(dir_a / "trace.csv").empty());
}

TEST_CASE("a different seed draws a different sequence but the same component") {
    auto dir_a = fresh_dir("seed_a");
    auto dir_b = fresh_dir("seed_b");
    const std::string base = "simulate --p 29 --s 29,2,3 --u0-index 4 --steps 400 --out-dir ";
    CHECK(run_cli(base + dir_a.string() + " --seed 7").exit_code == 0);
    CHECK(run_cli(base + dir_b.string() + " --seed 8").exit_code == 0);
    CHECK(slurp(dir_a / "trace.csv") != slurp(dir_b / "trace.csv"));
    auto ja = json::parse(slurp(dir_a / "summary.json"));
    auto jb = json::parse(slurp(dir_b / "summary.json"));
    CHECK(ja["per_trial"][0]["absorbed_component"] == jb["per_trial"][0]["absorbed_component"]);
}

TEST_CASE("simulate --steps 0 leaves only u0 in the trace") {
    auto dir = fresh_dir("sim_zero");
    auto r = run_cli("simulate --p 29 --s 29,2 --steps 0 --out-dir " + dir.string());
    CHECK(r.exit_code == 0);
    auto trace = slurp(dir / "trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 2); // header + step 0
}

TEST_CASE("chain matches the labeled p=29 edges") {
    auto r = run_cli("chain --p 29 --s 29,2,3 --q 0.2,0.4,0.4 --steps 20000 --seed 5");
    CHECK(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j["states"] == json::array({0, 4, 8, 12, 16, 20, 24}));
    // row of xi^4: self-loop 1/5, doubling 2/5 at xi^8, tripling 2/5 at xi^12
    CHECK(j["exact"][1][1] == "1/5");
    CHECK(j["exact"][1][2] == "2/5");
    CHECK(j["exact"][1][3] == "2/5");
    CHECK(j["exact"][0][0] == "1/1");
    CHECK(j["all_within_3sigma"] == true);
}

TEST_CASE("chain with a single map prints a permutation matrix") {
    auto r = run_cli("chain --p 29 --s 2 --steps 2000 --seed 1");
    CHECK(r.exit_code == 0);
    auto j = json::parse(r.out);
    for (const auto& row : j["exact"]) {
        int ones = 0;
        for (const auto& e : row)
            if (e == "1/1") ++ones;
        CHECK(ones == 1);
    }
}

TEST_CASE("pattern emits strips, points, and histogram") {
    auto dir = fresh_dir("pattern47");
    auto r = run_cli("pattern --p 47 --s 14,47 --seed 3 --particles 4000 --out-dir " + dir.string());
    CHECK(r.exit_code == 0);
    auto strips = json::parse(slurp(dir / "strips.json"));
    CHECK(strips["strips"].size() == 22);
    CHECK(strips["absorbed"] == true);
    CHECK(fs::exists(dir / "points.csv"));
    CHECK(fs::exists(dir / "histogram.csv"));

    auto hist = slurp(dir / "histogram.csv");
    CHECK(hist.rfind("# 100 20 0 1 0 1\n", 0) == 0);
}

TEST_CASE("pattern output bytes are a pure function of (config, seed)") {
    auto dir_a = fresh_dir("pat_det_a");
    auto dir_b = fresh_dir("pat_det_b");
    const std::string base =
        "pattern --p 29 --s 29,2,3 --seed 11 --u0-index 1 --particles 1500 --out-dir ";
    CHECK(run_cli(base + dir_a.string()).exit_code == 0);
    CHECK(run_cli(base + dir_b.string()).exit_code == 0);
    for (const char* f : {"points.csv", "histogram.csv", "strips.json"}) {
        CHECK(!slurp(dir_a / f).empty());
        CHECK(slurp(dir_a / f) == slurp(dir_b / f));
    }
}

TEST_CASE("pattern with 4-set start reports 4 strips") {
    auto dir = fresh_dir("pattern41");
    auto r = run_cli("pattern --p 41 --s 17,41 --seed 2 --u0-index 1 --particles 4000 --out-dir " +
                     dir.string());
    CHECK(r.exit_code == 0);
    auto strips = json::parse(slurp(dir / "strips.json"));
    CHECK(strips["strips"].size() == 4);
}

TEST_CASE("degenerate y-range is rejected") {
    auto dir = fresh_dir("pattern_bad");
    auto r = run_cli("pattern --p 29 --s 29,2 --y-range 0,0 --out-dir " + dir.string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("seed-independence check on an orbit that cannot absorb exits 3") {
    // u0 in the zero basin never reaches the sphere attractor, so the check
    // cannot produce a strip set
    auto dir = fresh_dir("pattern_noabsorb");
    std::string u0 = "29:16:0,1";
    for (int i = 0; i < 14; ++i) u0 += ",0";
    auto r = run_cli("pattern --p 29 --s 29,2,3 --u0 " + u0 +
                     " --particles 2000 --check-seeds 1,2 --out-dir " + dir.string());
    CHECK(r.exit_code == 3);
}

TEST_CASE("config file values are used and flags override them") {
    auto dir = fresh_dir("config");
    const fs::path cfg = dir / "exp.json";
    {
        std::ofstream out(cfg);
        out << R"({"p": 61, "s": [61, 2], "seed": 4, "precision": 12})";
    }
    auto r = run_cli("analyze --config " + cfg.string());
    CHECK(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j["q"] == 15);
    CHECK(j["precision"] == 12);

    auto r2 = run_cli("analyze --config " + cfg.string() + " --s 61,2,3");
    CHECK(r2.exit_code == 0);
    auto j2 = json::parse(r2.out);
    CHECK(j2["q"] == 5);

    CHECK(run_cli("analyze --config /nonexistent.json").exit_code == 4);
}
