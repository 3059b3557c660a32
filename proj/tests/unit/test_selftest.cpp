#include <catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>

#include "oracles.hpp"
#include "socsim/selftest.hpp"

using namespace socsim;

namespace {

const SelfTestCheck& find(const SelfTestReport& r, const std::string& name)
{
    const auto it = std::find_if(r.checks.begin(), r.checks.end(), [&](const SelfTestCheck& c) { return c.name == name; });
    REQUIRE(it != r.checks.end());
    return *it;
}

} // namespace

TEST_CASE("clean build passes every check in name order")
{
    const auto r = run_selftests(default_scenario());
    CHECK(r.overall);
    CHECK(r.checks.size() == selftest_names().size());
    CHECK(std::is_sorted(r.checks.begin(), r.checks.end(),
                         [](const SelfTestCheck& a, const SelfTestCheck& b) { return a.name < b.name; }));
    for (const auto& c : r.checks) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.passed);
    }
}

TEST_CASE("single check by name")
{
    SelfTestOptions o;
    o.only = "statistics";
    const auto r = run_selftests(default_scenario(), o);
    REQUIRE(r.checks.size() == 1);
    CHECK(r.checks[0].name == "statistics");
    o.only = "nonsense";
    CHECK_THROWS_AS(run_selftests(default_scenario(), o), std::invalid_argument);
}

TEST_CASE("corrupted ruleset fails only the logging check")
{
    oracle::TempDir dir("selftest");
    std::ofstream(dir / "rules.json") << "[{\"name\": ";
    SelfTestOptions o;
    o.ruleset_path = dir / "rules.json";
    const auto r = run_selftests(default_scenario(), o);
    CHECK_FALSE(r.overall);
    CHECK_FALSE(find(r, "logging").passed);
    for (const auto& c : r.checks) {
        if (c.name != "logging") CHECK(c.passed);
    }
}

TEST_CASE("inconsistent logging switches fail the scenario check")
{
    auto cfg = default_scenario();
    cfg.logging.advanced_host_audit = true;
    const auto r = run_selftests(cfg);
    CHECK_FALSE(r.overall);
    CHECK_FALSE(find(r, "scenario").passed);
}

TEST_CASE("broken digraph fails the attack-graph check")
{
    auto g = build_default_digraph();
    g.successors[StepName::InfectEmailExe].erase(StepName::C2TakeScreenshot);
    SelfTestOptions o;
    o.digraph = g;
    const auto r = run_selftests(default_scenario(), o);
    CHECK_FALSE(find(r, "attack-graph").passed);
}

TEST_CASE("substituted RNG fails the rng check")
{
    SelfTestOptions o;
    o.stream_factory = [](std::uint64_t seed, LabelPath) { return RngStream::from_key(seed); };
    const auto r = run_selftests(default_scenario(), o);
    CHECK_FALSE(find(r, "rng").passed);
}
