#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "json.hpp"
#include "oracles.hpp"
#include "socsim/adversary.hpp"
#include "socsim/detection.hpp"

using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(const oracle::TempDir& dir, const std::string& args)
{
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(SOCSIM_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), oracle::slurp(out), oracle::slurp(err)};
}

json read_json(const std::filesystem::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

} // namespace

TEST_CASE("run twice gives byte-identical datasets and a manifest")
{
    oracle::TempDir d("cli");
    const auto a = d / "a";
    const auto b = d / "b";
    REQUIRE(cli(d, "run --exemplary --seed 5 --out " + a.string()).code == 0);
    REQUIRE(cli(d, "run --exemplary --seed 5 --out " + b.string()).code == 0);
    CHECK(oracle::slurp(a / "dataset.jsonl") == oracle::slurp(b / "dataset.jsonl"));
    CHECK(oracle::slurp(a / "dataset.jsonl.truth.json") == oracle::slurp(b / "dataset.jsonl.truth.json"));
    const auto m = read_json(a / "manifest.json");
    CHECK(m["schema"] == "socsim.manifest/1");
    CHECK(m["seed"] == 5);
    CHECK(m["rng"] == "splitmix64/v1");
    CHECK(m["scenario_fingerprint"].get<std::string>().size() == 16);
}

TEST_CASE("exemplary run detects 4 steps under Default and 6 under BestPractice")
{
    oracle::TempDir d("cli");
    REQUIRE(cli(d, "run --exemplary --seed 3 --drop-rate 0 --out " + (d / "run").string()).code == 0);
    REQUIRE(cli(d, "detect --dataset " + (d / "run" / "dataset.jsonl").string() + " --out " + (d / "det").string()).code == 0);
    CHECK(read_json(d / "det" / "alerts.json")["detected_steps"] == 4);

    REQUIRE(cli(d, "run --exemplary --seed 3 --drop-rate 0 --logging BestPractice --out " + (d / "runb").string()).code == 0);
    REQUIRE(cli(d, "detect --dataset " + (d / "runb" / "dataset.jsonl").string() + " --out " + (d / "detb").string()).code == 0);
    CHECK(read_json(d / "detb" / "alerts.json")["detected_steps"] == 6);
    CHECK(std::filesystem::exists(d / "detb" / "manifest.json"));
}

TEST_CASE("invalid chain file exits 1 naming the step")
{
    oracle::TempDir d("cli");
    socsim::AttackChain c;
    c.entries.push_back({socsim::StepName::C2Mimikatz, "client1", 0});
    socsim::save_chain(c, d / "bad.json");
    const auto r = cli(d, "run --chain " + (d / "bad.json").string() + " --out " + (d / "o").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("c2_mimikatz") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(d / "o" / "dataset.jsonl"));
}

TEST_CASE("dataset without attack raises no alerts; missing sidecar warns")
{
    oracle::TempDir d("cli");
    socsim::save_chain(socsim::AttackChain{}, d / "empty.json");
    REQUIRE(cli(d, "run --chain " + (d / "empty.json").string() + " --logging BestPractice --out " + (d / "o").string()).code == 0);
    std::filesystem::remove(d / "o" / "dataset.jsonl.truth.json");
    const auto r = cli(d, "detect --dataset " + (d / "o" / "dataset.jsonl").string() + " --out " + (d / "det").string());
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    const auto alerts = read_json(d / "det" / "alerts.json");
    CHECK(alerts["alert_count"] == 0);
    CHECK_FALSE(alerts.contains("steps"));
}

TEST_CASE("duplicate rule names exit 1")
{
    oracle::TempDir d("cli");
    REQUIRE(cli(d, "run --exemplary --no-background --out " + (d / "o").string()).code == 0);
    auto rules = socsim::default_ruleset();
    auto j = socsim::ruleset_to_json(rules);
    j["rules"].push_back(j["rules"][0]);
    std::ofstream(d / "dup.json") << j.dump();
    const auto r = cli(d, "detect --dataset " + (d / "o" / "dataset.jsonl").string() + " --ruleset " +
                              (d / "dup.json").string() + " --out " + (d / "det").string());
    CHECK(r.code == 1);
}

TEST_CASE("chain-gen")
{
    oracle::TempDir d("cli");
    REQUIRE(cli(d, "chain-gen --seed 1 --length 0 --out " + (d / "zero.json").string()).code == 0);
    CHECK(read_json(d / "zero.json")["entries"].empty());

    REQUIRE(cli(d, "chain-gen --seed 42 --length 5 --out " + (d / "a.json").string()).code == 0);
    const auto r = cli(d, "chain-gen --seed 42 --length 5 --out " + (d / "b.json").string());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("tactic coverage") != std::string::npos);
    CHECK(oracle::slurp(d / "a.json") == oracle::slurp(d / "b.json"));
    CHECK(std::filesystem::exists(d / "a.json.manifest.json"));

    // The pipeline accepts what the generator produces.
    for (int seed = 1; seed <= 5; ++seed) {
        const auto f = d / ("g" + std::to_string(seed) + ".json");
        REQUIRE(cli(d, "chain-gen --seed " + std::to_string(seed) + " --length 8 --out " + f.string()).code == 0);
        CHECK(cli(d, "run --no-background --chain " + f.string() + " --out " + (d / "r").string()).code == 0);
    }
}

TEST_CASE("unknown flags and missing files are user errors")
{
    oracle::TempDir d("cli");
    CHECK(cli(d, "run --exemplary --out " + (d / "o").string() + " --frobnicate").code == 1);
    CHECK(cli(d, "validate --scenario " + (d / "nope.json").string()).code == 1);
    CHECK(cli(d, "").code == 1);
}

TEST_CASE("validate, export and selftest")
{
    oracle::TempDir d("cli");
    REQUIRE(cli(d, "export --builtin scenario --out " + (d / "s.json").string()).code == 0);
    CHECK(cli(d, "validate --scenario " + (d / "s.json").string()).code == 0);

    auto j = read_json(d / "s.json");
    j["client_count"] = 0;
    std::ofstream(d / "bad.json") << j.dump();
    const auto bad = cli(d, "validate --scenario " + (d / "bad.json").string());
    CHECK(bad.code == 1);
    CHECK(bad.out.find("client_count") != std::string::npos);

    REQUIRE(cli(d, "run --exemplary --out " + (d / "o").string()).code == 0);
    REQUIRE(cli(d, "export --dataset " + (d / "o" / "dataset.jsonl").string() + " --strip-truth --out " +
                       (d / "x.jsonl").string())
                .code == 0);
    CHECK_FALSE(std::filesystem::exists(d / "x.jsonl.truth.json"));
    CHECK(oracle::slurp(d / "x.jsonl") == oracle::slurp(d / "o" / "dataset.jsonl"));

    const auto st = cli(d, "selftest --check rng");
    CHECK(st.code == 0);
    CHECK(st.out.find("PASS rng") != std::string::npos);
}

TEST_CASE("experiment writes its tables")
{
    oracle::TempDir d("cli");
    const auto r = cli(d, "experiment --iterations 2 --threads 2 --no-variation --out " + (d / "e").string());
    REQUIRE(r.code == 0);
    for (const char* f : {"results.json", "table2.txt", "table2.json", "manifest.json", "plan.json"}) {
        CHECK(std::filesystem::exists(d / "e" / f));
    }
    CHECK(r.out.find("Number of detected attack steps") != std::string::npos);
}
